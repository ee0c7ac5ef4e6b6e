#include "scbf/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>

namespace scbf {

void OperatorConfig::validate() const {
  if (!(r >= 1.0)) throw std::invalid_argument("r: absorption exponent must satisfy r >= 1");
  if (!(mu > 0.0)) throw std::invalid_argument("mu: Brinkman coefficient must satisfy mu > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("beta: Forchheimer coefficient must satisfy beta > 0");
  if (dealias == Dealias::padded && !(padding >= 1.5)) {
    throw std::invalid_argument("padding: factor must be >= 3/2 for padded collocation");
  }
}

int convection_grid(const Basis& basis, double padding) { return padded_grid(basis, padding); }

int absorption_grid(const Basis& basis, double r, double padding) {
  const double factor = std::max(padding, std::ceil((r + 1.0) / 2.0));
  return padded_grid(basis, factor);
}

SpectralField apply_stokes(const SpectralField& u) {
  SpectralField out(u.basis);
  const Basis& b = *u.basis;
  for (std::size_t m = 0; m < u.size(); ++m) {
    out.coeffs[m] = double(b.norm2(b.wavevector_of(m))) * u.coeffs[m];
  }
  return out;
}

SpectralField convection_exact(const SpectralField& u, const SpectralField& v) {
  const Basis& b = *u.basis;
  const VectorSpectrum uf = to_vector_spectrum(u);
  const VectorSpectrum vf = to_vector_spectrum(v);
  VectorSpectrum acc(u.basis);
  const int d = b.dim();
  const std::size_t nw = b.wavevector_count();
  const Complex i_unit{0.0, 1.0};
  for (std::size_t p = 0; p < nw; ++p) {
    const CVec3& up = uf.coeffs[p];
    const WaveVector& kp = b.wavevector(p);
    for (std::size_t q = 0; q < nw; ++q) {
      const auto target = b.find(kp + b.wavevector(q));
      if (!target) continue;
      const auto& kq = b.wavevector(q).k;
      Complex dot{};
      for (int j = 0; j < d; ++j) dot += up[j] * double(kq[j]);
      const Complex f = i_unit * dot;
      CVec3& out = acc.coeffs[*target];
      for (int i = 0; i < d; ++i) out[i] += f * vf.coeffs[q][i];
    }
  }
  const double scale = std::pow(2.0 * std::numbers::pi, -0.5 * d);
  for (auto& c : acc.coeffs) {
    for (auto& x : c) x *= scale;
  }
  return leray_project(acc);
}

SpectralField convection_padded(const SpectralField& u, const SpectralField& v, double padding) {
  const Basis& b = *u.basis;
  if (b.empty()) return SpectralField(u.basis);
  const auto coll = shared_collocation(u.basis, convection_grid(b, padding));
  const int d = b.dim();
  const std::size_t nw = b.wavevector_count();
  const std::size_t np = coll->points();

  const PhysicalField ug = coll->evaluate(u);
  const VectorSpectrum vf = to_vector_spectrum(v);

  // grad[i * d + j] holds d v_i / d x_j.
  std::vector<std::vector<double>> grad(d * d, std::vector<double>(np));
  std::vector<std::vector<Complex>> spec(d * d, std::vector<Complex>(nw));
  const Complex i_unit{0.0, 1.0};
  for (std::size_t w = 0; w < nw; ++w) {
    const auto& k = b.wavevector(w).k;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) spec[i * d + j][w] = i_unit * double(k[j]) * vf.coeffs[w][i];
    }
  }
  int f = 0;
  for (; f + 1 < d * d; f += 2) coll->synthesize_pair(spec[f], spec[f + 1], grad[f], grad[f + 1]);
  if (f < d * d) coll->synthesize(spec[f], grad[f]);

  PhysicalField prod{d, coll->grid(), std::vector<double>(d * np, 0.0)};
  for (int i = 0; i < d; ++i) {
    auto out = prod.component(i);
    for (int j = 0; j < d; ++j) {
      const auto uj = ug.component(j);
      const auto& g = grad[i * d + j];
      for (std::size_t x = 0; x < np; ++x) out[x] += uj[x] * g[x];
    }
  }
  return coll->project(prod);
}

SpectralField apply_convection(const SpectralField& u, const SpectralField& v,
                               const OperatorConfig& cfg) {
  if (u.basis != v.basis) throw std::invalid_argument("apply_convection: fields on different bases");
  if (cfg.dealias == Dealias::exact) return convection_exact(u, v);
  if (cfg.padding < 1.5) {
    throw std::invalid_argument("apply_convection: padding below 3/2 is not alias-free");
  }
  return convection_padded(u, v, cfg.padding);
}

double trilinear(const SpectralField& u, const SpectralField& v, const SpectralField& w,
                 const OperatorConfig& cfg) {
  return inner(apply_convection(u, v, cfg), w);
}

PhysicalField absorption_pointwise(const PhysicalField& u, double r) {
  PhysicalField out{u.dim, u.grid, std::vector<double>(u.values.size())};
  const std::size_t np = u.points();
  const double half = 0.5 * (r - 1.0);
  for (std::size_t x = 0; x < np; ++x) {
    double m2 = 0.0;
    for (int c = 0; c < u.dim; ++c) m2 += u.values[c * np + x] * u.values[c * np + x];
    const double s = r == 1.0 ? 1.0 : (r == 3.0 ? m2 : std::pow(m2, half));
    for (int c = 0; c < u.dim; ++c) out.values[c * np + x] = s * u.values[c * np + x];
  }
  return out;
}

AbsorptionResult absorption_with_power(const SpectralField& u, double r, int grid) {
  AbsorptionResult res{SpectralField(u.basis), 0.0};
  if (u.basis->empty()) return res;
  const auto coll = shared_collocation(u.basis, grid);
  const PhysicalField ug = coll->evaluate(u);
  const PhysicalField prod = absorption_pointwise(ug, r);
  double power = 0.0;
  for (std::size_t i = 0; i < ug.values.size(); ++i) power += ug.values[i] * prod.values[i];
  power *= coll->weight();
  if (!std::isfinite(power)) {
    throw NonFiniteError("absorption: non-finite collocation values (r = " + std::to_string(r) + ")");
  }
  res.power = power;
  res.value = coll->project(prod);
  return res;
}

SpectralField apply_absorption(const SpectralField& u, const OperatorConfig& cfg) {
  return absorption_with_power(u, cfg.r, absorption_grid(*u.basis, cfg.r, cfg.padding)).value;
}

double l_norm(const SpectralField& u, double p, int grid) {
  if (u.basis->empty()) return 0.0;
  const auto coll = shared_collocation(u.basis, grid);
  return std::pow(grid_power_integral(coll->evaluate(u), p, coll->weight()), 1.0 / p);
}

SpectralField galerkin_truncate(const SpectralField& u, int m) {
  if (m > u.basis->cutoff()) {
    throw std::invalid_argument("galerkin_truncate: cutoff exceeds basis cutoff");
  }
  SpectralField out = u;
  const Basis& b = *u.basis;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (b.norm2(b.wavevector_of(k)) >= m * m) out.coeffs[k] = 0.0;
  }
  return out;
}

SpectralField smooth_project(const SpectralField& u, int n) {
  if (n < 1) throw std::invalid_argument("smooth_project: n must be >= 1");
  SpectralField out(u.basis);
  const Basis& b = *u.basis;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const int k2 = b.norm2(b.wavevector_of(k));
    if (k2 < n * n) out.coeffs[k] = std::exp(-double(k2) / n) * u.coeffs[k];
  }
  return out;
}

namespace {

double bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

// int_{-1}^{1} bump by composite Simpson.
double bump_mass() {
  static const double mass = [] {
    const int n = 20000;
    const double h = 2.0 / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w * bump(-1.0 + i * h);
    }
    return s * h / 3.0;
  }();
  return mass;
}

template <class T>
void accumulate(T& acc, double w, const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    acc += w * v;
  } else {
    acc.axpy(w, v);
  }
}

template <class T>
T zero_like(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return 0.0;
  } else {
    return SpectralField(v.basis);
  }
}

template <class T>
TimeSeries<T> mollify_impl(const TimeSeries<T>& s, double h) {
  const std::size_t count = s.values.size();
  if (count < 2) throw std::invalid_argument("mollify_time: need at least 2 nodes");
  if (!(s.dt > 0.0)) throw std::invalid_argument("mollify_time: dt must be > 0");
  const double span = s.dt * double(count - 1);
  if (h < 2.0 * s.dt) throw std::invalid_argument("mollify_time: h < 2 dt leaves the kernel unresolved");
  if (h >= span) throw std::invalid_argument("mollify_time: h must be smaller than the series span");
  const std::vector<double> kern = mollifier_weights(h, s.dt);
  const long reach = static_cast<long>(kern.size()) - 1;
  TimeSeries<T> out;
  out.dt = s.dt;
  out.values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    T acc = zero_like(s.values[i]);
    const long lo = std::max<long>(0, long(i) - reach);
    const long hi = std::min<long>(long(count) - 1, long(i) + reach);
    for (long l = lo; l <= hi; ++l) {
      double w = kern[std::abs(long(i) - l)];
      if (l == 0 || l == long(count) - 1) w *= 0.5;
      accumulate(acc, w, s.values[l]);
    }
    out.values.push_back(std::move(acc));
  }
  return out;
}

}  // namespace

double mollifier(double s) { return bump(s) / bump_mass(); }

std::vector<double> mollifier_weights(double h, double dt) {
  const long reach = static_cast<long>(std::ceil(h / dt));
  std::vector<double> w(reach + 1);
  double total = 0.0;
  for (long j = 0; j <= reach; ++j) {
    w[j] = mollifier(j * dt / h) / h * dt;
    total += j == 0 ? w[j] : 2.0 * w[j];
  }
  for (double& x : w) x /= total;
  return w;
}

double mollifier_half_mass(double h, double dt) {
  const auto w = mollifier_weights(h, dt);
  double s = 0.5 * w[0];
  for (std::size_t j = 1; j < w.size(); ++j) s += w[j];
  return s;
}

TimeSeries<double> mollify_time(const TimeSeries<double>& s, double h) { return mollify_impl(s, h); }

TimeSeries<SpectralField> mollify_time(const TimeSeries<SpectralField>& s, double h) {
  return mollify_impl(s, h);
}

}  // namespace scbf
