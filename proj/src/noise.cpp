#include "scbf/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "scbf/transform.hpp"

namespace scbf {

double QSpectrum::weight(int k2) const { return c * std::pow(double(k2), -s); }

double QSpectrum::trace(const Basis& basis) const {
  double t = 0.0;
  for (std::size_t w = 0; w < basis.wavevector_count(); ++w) {
    t += basis.polarizations() * weight(basis.norm2(w));
  }
  return t;
}

void QSpectrum::validate(int d) const {
  if (!(c > 0.0)) throw std::invalid_argument("q_c: Q-spectrum scale must satisfy c > 0");
  if (!(2.0 * s > d)) throw std::invalid_argument("q_s: Q-spectrum decay must satisfy 2s > d");
}

double MarkLaw::sample(CounterStream& rng) const {
  if (kind == Kind::uniform) return a + (b - a) * rng.uniform();
  return a + b * rng.gaussian();
}

double MarkLaw::moment(int p) const {
  if (kind == Kind::uniform) {
    switch (p) {
      case 1: return 0.5 * (a + b);
      case 2: return (a * a + a * b + b * b) / 3.0;
      case 4: return a == b ? std::pow(a, 4) : (std::pow(b, 5) - std::pow(a, 5)) / (5.0 * (b - a));
    }
  } else {
    const double m = a, v = b * b;
    switch (p) {
      case 1: return m;
      case 2: return m * m + v;
      case 4: return m * m * m * m + 6.0 * m * m * v + 3.0 * v * v;
    }
  }
  throw std::invalid_argument("MarkLaw::moment: p must be 1, 2 or 4");
}

double SigmaFamily::factor(double u_norm) const {
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::additive: return amplitude;
    case Kind::bounded_multiplicative: return amplitude * (1.0 + rho * u_norm / (1.0 + u_norm));
  }
  return 0.0;
}

double SigmaFamily::lq_norm2(double u_norm, double trace_q) const {
  const double f = factor(u_norm);
  return f * f * trace_q;
}

double GammaFamily::amplitude(double u_norm) const { return c0 + c1 * u_norm / (1.0 + u_norm); }

namespace {

std::uint64_t word(int x) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(x)); }

}  // namespace

WienerSource::WienerSource(BasisPtr basis, QSpectrum q, std::uint64_t seed, std::uint64_t trajectory,
                           double fine_dt)
    : basis_(std::move(basis)), q_(q), seed_(seed), trajectory_(trajectory), fine_dt_(fine_dt) {
  sqrt_mu_.resize(basis_->wavevector_count());
  for (std::size_t w = 0; w < sqrt_mu_.size(); ++w) sqrt_mu_[w] = std::sqrt(q_.weight(basis_->norm2(w)));
}

SpectralField WienerSource::keyed_field(Channel channel, std::uint64_t a, std::uint64_t b,
                                        double variance_scale) const {
  SpectralField out(basis_);
  const Basis& bs = *basis_;
  const double base = std::sqrt(0.5 * variance_scale);
  for (std::size_t w = 0; w < bs.wavevector_count(); ++w) {
    const WaveVector& wv = bs.wavevector(w);
    if (!wv.canonical()) continue;
    const std::size_t cw = bs.conjugate(w);
    for (int p = 0; p < bs.polarizations(); ++p) {
      const auto g = keyed_gaussian_pair(hash_words({seed_, trajectory_, static_cast<std::uint64_t>(channel),
                                                     word(wv.k[0]), word(wv.k[1]), word(wv.k[2]),
                                                     std::uint64_t(p), a, b}));
      const Complex c = base * sqrt_mu_[w] * Complex{g.first, g.second};
      out.coeffs[bs.mode(w, p)] = c;
      out.coeffs[bs.mode(cw, p)] = std::conj(c);
    }
  }
  return out;
}

SpectralField WienerSource::increment(std::uint64_t first, std::uint64_t count) const {
  SpectralField sum(basis_);
  for (std::uint64_t j = first; j < first + count; ++j) sum += keyed_field(Channel::wiener, j, 0, fine_dt_);
  return sum;
}

SpectralField WienerSource::bridge_sample(std::uint64_t step, std::uint64_t slot, double h) const {
  return keyed_field(Channel::bridge, step, slot, h);
}

SpectralField sample_wiener_increment(const BasisPtr& basis, const QSpectrum& q, double dt,
                                      CounterStream& rng) {
  if (dt < 0.0) throw std::invalid_argument("sample_wiener_increment: dt must be >= 0");
  SpectralField out(basis);
  if (dt == 0.0) return out;
  const Basis& b = *basis;
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    if (!b.wavevector(w).canonical()) continue;
    const double sd = std::sqrt(0.5 * q.weight(b.norm2(w)) * dt);
    for (int p = 0; p < b.polarizations(); ++p) {
      const double re = rng.gaussian();
      const double im = rng.gaussian();
      const Complex c = sd * Complex{re, im};
      out.coeffs[b.mode(w, p)] = c;
      out.coeffs[b.mode(b.conjugate(w), p)] = std::conj(c);
    }
  }
  return out;
}

std::vector<Jump> sample_jumps(const JumpSpec& spec, double horizon, std::uint64_t seed,
                               std::uint64_t trajectory) {
  if (!(horizon > 0.0)) throw std::invalid_argument("sample_jumps: horizon must be > 0");
  std::vector<Jump> jumps;
  if (spec.rate <= 0.0) return jumps;
  CounterStream times(StreamKey{seed, trajectory, Channel::jump_times});
  std::poisson_distribution<long> count_dist(spec.rate * horizon);
  const long count = count_dist(times);
  std::vector<double> t(count);
  for (auto& x : t) x = horizon * times.uniform();
  std::sort(t.begin(), t.end());
  CounterStream marks(StreamKey{seed, trajectory, Channel::marks});
  jumps.reserve(count);
  for (long i = 0; i < count; ++i) jumps.push_back({t[i], spec.marks.sample(marks)});
  return jumps;
}

SpectralField diffusion_increment(const SigmaFamily& f, double /*t*/, const SpectralField& u,
                                  const SpectralField& dw) {
  SpectralField out = dw;
  const double s = f.kind == SigmaFamily::Kind::bounded_multiplicative ? f.factor(h_norm(u)) : f.factor(0.0);
  out *= s;
  return out;
}

SpectralField jump_increment(const GammaFamily& f, double /*t*/, const SpectralField& u, double z) {
  SpectralField out(u.basis);
  if (!f.active()) return out;
  out = f.direction;
  out *= f.amplitude(h_norm(u)) * z;
  return out;
}

SpectralField compensator_drift(const GammaFamily& f, const JumpSpec& jumps, double /*t*/,
                                const SpectralField& u) {
  SpectralField out(u.basis);
  const double m1 = jumps.m1();
  if (!f.active() || m1 == 0.0) return out;
  out = f.direction;
  out *= f.amplitude(h_norm(u)) * m1;
  return out;
}

HypothesisConstants declared_constants(const SigmaFamily& sigma, const GammaFamily& gamma,
                                       const JumpSpec& jumps, double trace_q) {
  HypothesisConstants k;
  double a2 = 0.0, rho = 0.0;
  if (sigma.kind != SigmaFamily::Kind::none) a2 = sigma.amplitude * sigma.amplitude;
  if (sigma.kind == SigmaFamily::Kind::bounded_multiplicative) rho = std::abs(sigma.rho);
  const double gmax = std::abs(gamma.c0) + std::abs(gamma.c1);
  k.k1 = (1.0 + rho) * (1.0 + rho) * a2 * trace_q + gmax * gmax * jumps.m2();
  k.k2 = std::pow(gmax, 4) * jumps.m4();
  k.lipschitz = rho * rho * a2 * trace_q + gamma.c1 * gamma.c1 * jumps.m2();
  return k;
}

CoefficientProbe probe_for(const SigmaFamily& sigma, const GammaFamily& gamma, const JumpSpec& jumps,
                           double trace_q) {
  CoefficientProbe p;
  p.sigma_lq2 = [=](const SpectralField& u) { return sigma.lq_norm2(h_norm(u), trace_q); };
  p.sigma_diff_lq2 = [=](const SpectralField& u, const SpectralField& v) {
    const double d = sigma.factor(h_norm(u)) - sigma.factor(h_norm(v));
    return d * d * trace_q;
  };
  const double m2 = jumps.m2(), m4 = jumps.m4();
  p.gamma_moment = [=](const SpectralField& u, int power) {
    const double g = std::abs(gamma.amplitude(h_norm(u)));
    if (power == 2) return g * g * m2;
    if (power == 4) return std::pow(g, 4) * m4;
    throw std::invalid_argument("gamma_moment: power must be 2 or 4");
  };
  p.gamma_diff2 = [=](const SpectralField& u, const SpectralField& v) {
    const double d = gamma.amplitude(h_norm(u)) - gamma.amplitude(h_norm(v));
    return d * d * m2;
  };
  return p;
}

SpectralField random_field(const BasisPtr& basis, CounterStream& rng, double scale) {
  SpectralField out(basis);
  const Basis& b = *basis;
  const double sd = scale / std::sqrt(2.0);
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    if (!b.wavevector(w).canonical()) continue;
    for (int p = 0; p < b.polarizations(); ++p) {
      const double re = rng.gaussian();
      const double im = rng.gaussian();
      const Complex c = sd * Complex{re, im};
      out.coeffs[b.mode(w, p)] = c;
      out.coeffs[b.mode(b.conjugate(w), p)] = std::conj(c);
    }
  }
  return out;
}

std::vector<std::pair<SpectralField, SpectralField>> certification_corpus(const BasisPtr& basis,
                                                                          std::size_t pairs,
                                                                          std::uint64_t seed) {
  CounterStream rng(StreamKey{seed, 0, Channel::corpus});
  std::vector<std::pair<SpectralField, SpectralField>> corpus;
  corpus.reserve(pairs);
  auto scaled = [&](double target) {
    SpectralField f = random_field(basis, rng);
    const double n = h_norm(f);
    if (n > 0.0) f *= target / n;
    return f;
  };
  for (std::size_t i = 0; i < pairs; ++i) {
    // Deterministic sweep of ||u|| over [0, 100] plus a random partner.
    const double nu = pairs > 1 ? 100.0 * double(i) / double(pairs - 1) : 0.0;
    SpectralField u = scaled(nu);
    SpectralField v(basis);
    if (i % 2 == 0) {
      v = scaled(100.0 * rng.uniform());
    } else {
      v = u;
      v += scaled(std::pow(10.0, -3.0 + 3.0 * rng.uniform()) * (1.0 + nu));
    }
    corpus.emplace_back(std::move(u), std::move(v));
  }
  return corpus;
}

CertReport certify_hypotheses(const CoefficientProbe& probe, const HypothesisConstants& declared,
                              const std::vector<std::pair<SpectralField, SpectralField>>& corpus) {
  CertReport rep;
  rep.declared = declared;
  std::pair<double, double> w_growth{0, 0}, w_moment{0, 0}, w_lip{0, 0};
  for (const auto& [u, v] : corpus) {
    for (const SpectralField* f : {&u, &v}) {
      const double n2 = h_norm2(*f);
      const double g = (probe.sigma_lq2(*f) + probe.gamma_moment(*f, 2)) / (1.0 + n2);
      if (g > rep.growth_ratio) {
        rep.growth_ratio = g;
        w_growth = {h_norm(u), h_norm(v)};
      }
      const double m = probe.gamma_moment(*f, 4) / (1.0 + n2 * n2);
      if (m > rep.moment_ratio) {
        rep.moment_ratio = m;
        w_moment = {h_norm(u), h_norm(v)};
      }
    }
    const double d2 = h_norm2(u - v);
    if (d2 > 0.0) {
      const double l = (probe.sigma_diff_lq2(u, v) + probe.gamma_diff2(u, v)) / d2;
      if (l > rep.lipschitz_ratio) {
        rep.lipschitz_ratio = l;
        w_lip = {h_norm(u), h_norm(v)};
      }
    }
  }
  constexpr double slack = 1.0 + 1e-6;
  if (rep.growth_ratio > declared.k1 * slack) {
    rep.passed = false;
    rep.failing_clause = "H.2 growth: ||sigma||^2 + int ||gamma||^2 <= K1 (1 + ||u||^2)";
    rep.witness = w_growth;
  } else if (rep.moment_ratio > declared.k2 * slack) {
    rep.passed = false;
    rep.failing_clause = "H.2 moment (p = 2): int ||gamma||^4 <= K2 (1 + ||u||^4)";
    rep.witness = w_moment;
  } else if (rep.lipschitz_ratio > declared.lipschitz * slack) {
    rep.passed = false;
    rep.failing_clause = "H.3 Lipschitz: diff terms <= L ||u - v||^2";
    rep.witness = w_lip;
  }
  return rep;
}

SpectralField direction_preset(const BasisPtr& basis, const std::string& name) {
  const Basis& b = *basis;
  SpectralField g(basis);
  if (name == "lowest") {
    const auto w = b.find(WaveVector{{1, 0, 0}});
    if (!w) throw std::invalid_argument("direction preset 'lowest' needs cutoff >= 2");
    g.coeffs[b.mode(*w, 0)] = 1.0 / std::sqrt(2.0);
    g.coeffs[b.mode(b.conjugate(*w), 0)] = 1.0 / std::sqrt(2.0);
    return g;
  }
  if (name == "taylor-green") {
    const int n = padded_grid(b, 1.0);
    PhysicalField f{b.dim(), n, {}};
    f.values.assign(b.dim() * f.points(), 0.0);
    const double h = 2.0 * std::numbers::pi / n;
    for (std::size_t i = 0; i < f.points(); ++i) {
      std::size_t rem = i;
      double x[3] = {0, 0, 0};
      for (int c = b.dim() - 1; c >= 0; --c) {
        x[c] = h * double(rem % n);
        rem /= n;
      }
      const double cz = b.dim() == 3 ? std::cos(x[2]) : 1.0;
      f.component(0)[i] = std::sin(x[0]) * std::cos(x[1]) * cz;
      f.component(1)[i] = -std::cos(x[0]) * std::sin(x[1]) * cz;
    }
    g = to_spectral(f, basis);
    const double nrm = h_norm(g);
    if (nrm == 0.0) throw std::invalid_argument("direction preset 'taylor-green' needs cutoff >= 2");
    g *= 1.0 / nrm;
    return g;
  }
  throw std::invalid_argument("unknown direction preset '" + name + "'");
}

}  // namespace scbf
