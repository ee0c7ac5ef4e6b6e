#include "scbf/diagnostics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "scbf/transform.hpp"

namespace scbf {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

PropertyReport make_report(std::string name, double tol) {
  PropertyReport rep;
  rep.name = std::move(name);
  rep.tolerance = tol;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  return rep;
}

void finish(PropertyReport& rep) {
  if (rep.worst_margin == std::numeric_limits<double>::infinity()) rep.worst_margin = 0.0;
  rep.passed = rep.worst_margin >= 0.0;  // NaN fails
}

double safe_ratio(double num, double den) { return den > kTiny ? num / den : (num == 0.0 ? 0.0 : num / kTiny); }

}  // namespace

MeanEstimate estimate_mean(const std::vector<double>& xs) {
  MeanEstimate e;
  e.count = xs.size();
  if (xs.empty()) return e;
  e.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
  }
  return e;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 points");
  double mx = 0, my = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------- ledger

LedgerObserver::LedgerObserver(const Model& model, const SpectralField& u0) : model_(model), e0_(h_norm2(u0)) {}

void LedgerObserver::substep(const SubstepEvent& ev) {
  const SpectralField& u = *ev.u;
  const double h = ev.h;
  if (model_.terms.stokes) acc_.diss_v += 2.0 * model_.ops.mu * v_norm2(u) * h;
  if (model_.terms.absorption) acc_.diss_lr1 += 2.0 * model_.ops.beta * ev.absorption_power * h;
  acc_.mart_wiener += 2.0 * inner(*ev.sigma_dw, u);
  acc_.mart_jump -= 2.0 * h * inner(*ev.compensator, u);
  acc_.qv_sigma += ev.sigma_lq2 * h;
  ledger_.gamma_intensity += ev.gamma_intensity * h;
}

void LedgerObserver::jump(const JumpEvent& ev) {
  const SpectralField& um = *ev.u_minus;
  const SpectralField& g = *ev.gamma;
  const double cross = 2.0 * inner(g, um);
  const double g2 = h_norm2(g);
  acc_.mart_jump += cross;
  acc_.qv_gamma += g2;
  ++ledger_.jumps;
  const double before = h_norm2(um);
  const double jump = h_norm2(um + g) - before;
  const double defect = std::abs(jump - (cross + g2)) / std::max(before + g2, kTiny);
  ledger_.max_jump_defect = std::max(ledger_.max_jump_defect, defect);
}

void LedgerObserver::output(double t, const SpectralField& u) { ledger_.rows.push_back(row(t, u)); }

LedgerRow LedgerObserver::row(double t, const SpectralField& u) const {
  LedgerRow r = acc_;
  r.time = t;
  r.energy = h_norm2(u);
  r.residual = r.energy - e0_ + r.diss_v + r.diss_lr1 - r.mart_wiener - r.mart_jump - r.qv_sigma - r.qv_gamma;
  return r;
}

EnergyLedger energy_ledger(const Trajectory& tr, const PathConfig& cfg) {
  if (tr.states.empty()) throw std::invalid_argument("energy_ledger: trajectory has no states");
  if (cfg.horizon > 0.0 && tr.noise.increments.empty()) {
    throw std::invalid_argument("energy_ledger: trajectory carries no NoiseRecord");
  }
  PathConfig c = cfg;
  c.record_noise = false;
  LedgerObserver obs(c.model, tr.states.front());
  simulate_path(c, tr.states.front(), &obs, cfg.horizon > 0.0 ? &tr.noise : nullptr);
  return obs.ledger();
}

ResidualStudy ledger_residual_study(const PathConfig& cfg, const SpectralField& u0, const std::vector<double>& dts) {
  ResidualStudy st;
  for (double dt : dts) {
    PathConfig c = cfg;
    c.scheme.dt = dt;
    c.output_dt = 0.0;
    c.record_noise = false;
    LedgerObserver obs(c.model, u0);
    const Trajectory tr = simulate_path(c, u0, &obs);
    if (tr.status != RunStatus::completed) throw std::runtime_error("ledger_residual_study: guard tripped");
    st.dts.push_back(dt);
    st.residuals.push_back(std::abs(obs.ledger().rows.back().residual));
  }
  if (st.dts.size() >= 2) st.slope = loglog_slope(st.dts, st.residuals);
  return st;
}

// ---------------------------------------------------------------- ensembles

namespace {

struct BalanceSample {
  double x = 0.0;
  bool ok = false;
};

BalanceSample balance_sample(const PathConfig& c, const SpectralField& u0) {
  LedgerObserver obs(c.model, u0);
  const Trajectory tr = simulate_path(c, u0, &obs);
  if (tr.status != RunStatus::completed) return {};
  const LedgerRow& r = obs.ledger().rows.back();
  const double e0 = h_norm2(u0);
  return {r.energy - e0 + r.diss_v + r.diss_lr1 - r.qv_sigma - obs.ledger().gamma_intensity, true};
}

}  // namespace

BalanceReport ensemble_energy_balance(const PathConfig& cfg, const InitialSampler& u0, std::size_t m, int jobs) {
  const double dt = cfg.scheme.dt;
  const double fine = cfg.noise_dt > 0.0 ? std::min(cfg.noise_dt, dt / 2.0) : dt / 2.0;
  std::vector<BalanceSample> coarse(m), refined(m);
  parallel_for(m, jobs, [&](std::size_t i) {
    PathConfig c = cfg;
    c.trajectory = cfg.trajectory + i;
    c.record_noise = false;
    c.output_dt = 0.0;
    c.noise_dt = fine;
    const SpectralField init = u0(c.trajectory);
    coarse[i] = balance_sample(c, init);
    c.scheme.dt = dt / 2.0;
    refined[i] = balance_sample(c, init);
  });
  BalanceReport rep;
  std::vector<double> xs, diffs;
  for (std::size_t i = 0; i < m; ++i) {
    if (!coarse[i].ok || !refined[i].ok) {
      ++rep.tripped;
      continue;
    }
    xs.push_back(coarse[i].x);
    diffs.push_back(coarse[i].x - refined[i].x);
  }
  rep.balance = estimate_mean(xs);
  rep.control_difference = estimate_mean(diffs);
  rep.bias_band = 2.0 * (std::abs(rep.control_difference.mean) + 3.0 * rep.control_difference.se);
  rep.passed = !xs.empty() && std::abs(rep.balance.mean) <= 3.0 * rep.balance.se + rep.bias_band;
  return rep;
}

VarianceReport linear_stokes_variance(const PathConfig& cfg, std::size_t m, int jobs) {
  if (cfg.model.sigma.kind != SigmaFamily::Kind::additive) {
    throw std::invalid_argument("linear_stokes_variance: needs additive sigma");
  }
  PathConfig c = cfg;
  c.model.terms = DriftTerms{true, false, false};
  c.model.gamma = GammaFamily{};
  c.model.jumps = JumpSpec{};
  c.scheme.kind = SchemeKind::exponential_tamed;
  c.output_dt = 0.0;
  c.record_noise = false;
  const Basis& b = *c.model.basis;
  std::vector<std::size_t> modes;
  VarianceReport rep;
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    if (!b.wavevector(w).canonical()) continue;
    for (int p = 0; p < b.polarizations(); ++p) {
      modes.push_back(b.mode(w, p));
      rep.wavevectors.push_back(b.wavevector(w));
      const double a = c.model.sigma.amplitude;
      rep.expected.push_back(a * a * c.model.q.weight(b.norm2(w)) / (2.0 * c.model.ops.mu * b.norm2(w)));
    }
  }
  std::vector<std::vector<double>> samples(m);
  const SpectralField zero(c.model.basis);
  parallel_for(m, jobs, [&](std::size_t i) {
    PathConfig ci = c;
    ci.trajectory = c.trajectory + i;
    const Trajectory tr = simulate_path(ci, zero);
    if (tr.status != RunStatus::completed) return;
    const SpectralField& u = tr.states.back();
    for (std::size_t m_ : modes) samples[i].push_back(std::norm(u.coeffs[m_]));
  });
  std::vector<std::vector<double>> per_mode(modes.size());
  for (const auto& s : samples) {
    if (s.empty()) continue;
    ++rep.paths;
    for (std::size_t j = 0; j < s.size(); ++j) per_mode[j].push_back(s[j]);
  }
  rep.passed = rep.paths > 1;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    const MeanEstimate e = estimate_mean(per_mode[j]);
    rep.observed.push_back(e.mean);
    rep.standard_error.push_back(e.se);
    const double z = safe_ratio(std::abs(e.mean - rep.expected[j]), e.se);
    rep.worst_z = std::max(rep.worst_z, z);
  }
  rep.passed = rep.passed && rep.worst_z <= 3.0;
  return rep;
}

namespace {

class MomentObserver : public StepObserver {
 public:
  explicit MomentObserver(const Model& model) : model_(model) {}
  void substep(const SubstepEvent& ev) override {
    sup = std::max(sup, h_norm2(*ev.u));
    v += model_.ops.mu * v_norm2(*ev.u) * ev.h;
    l += model_.ops.beta * ev.absorption_power * ev.h;
  }
  void jump(const JumpEvent& ev) override { sup = std::max(sup, h_norm2(*ev.u_minus + *ev.gamma)); }
  void output(double, const SpectralField& u) override { sup = std::max(sup, h_norm2(u)); }

  double sup = 0.0, v = 0.0, l = 0.0;

 private:
  const Model& model_;
};

}  // namespace

MomentReport moment_bound_check(const PathConfig& cfg, const InitialSampler& u0, std::size_t m, double k1,
                                int jobs) {
  struct Sample {
    double sup = 0, v = 0, l = 0, e0 = 0;
    bool ok = false;
  };
  std::vector<Sample> s(m);
  parallel_for(m, jobs, [&](std::size_t i) {
    PathConfig c = cfg;
    c.trajectory = cfg.trajectory + i;
    c.record_noise = false;
    const SpectralField init = u0(c.trajectory);
    MomentObserver obs(c.model);
    const Trajectory tr = simulate_path(c, init, &obs);
    s[i].e0 = h_norm2(init);
    if (tr.status != RunStatus::completed) return;
    s[i] = {obs.sup, obs.v, obs.l, s[i].e0, true};
  });
  MomentReport rep;
  rep.ensemble = m;
  rep.k1 = k1;
  std::vector<double> sup, v, l, total, p2, e0;
  for (const Sample& x : s) {
    e0.push_back(x.e0);
    if (!x.ok) {
      ++rep.tripped;
      continue;
    }
    sup.push_back(x.sup);
    v.push_back(x.v);
    l.push_back(x.l);
    total.push_back(x.sup + x.v + x.l);
    p2.push_back(x.sup * x.sup);
  }
  rep.sup_energy = estimate_mean(sup);
  rep.v_dissipation = estimate_mean(v);
  rep.lr1_dissipation = estimate_mean(l);
  rep.total = estimate_mean(total);
  rep.sup_energy_p2 = estimate_mean(p2);
  rep.initial_energy = estimate_mean(e0).mean;
  const double ckt = rep.constant * k1 * cfg.horizon;
  rep.bound = (2.0 * rep.initial_energy + ckt) * std::exp(ckt);
  rep.passed = !total.empty() && rep.total.mean + rep.total.ci95() <= rep.bound;
  return rep;
}

// ---------------------------------------------------------------- operators

SpectralField corpus_field(const BasisPtr& basis, CounterStream& rng) {
  SpectralField f = random_field(basis, rng);
  const double n = h_norm(f);
  const double scale = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
  if (n > 0.0) f *= scale / n;
  return f;
}

PropertyReport check_trilinear(const BasisPtr& basis, std::size_t triples, std::uint64_t seed, Dealias mode,
                               double tol) {
  std::ostringstream name;
  name << "trilinear d=" << basis->dim() << " n=" << basis->cutoff();
  PropertyReport rep = make_report(name.str(), tol);
  OperatorConfig cfg;
  cfg.dealias = mode;
  CounterStream rng(StreamKey{seed, 0, Channel::corpus}, 1);
  double worst_energy = 0.0, worst_anti = 0.0;
  for (std::size_t i = 0; i < triples; ++i) {
    const SpectralField u = corpus_field(basis, rng);
    const SpectralField v = corpus_field(basis, rng);
    const SpectralField w = corpus_field(basis, rng);
    const SpectralField buv = apply_convection(u, v, cfg);
    const SpectralField buw = apply_convection(u, w, cfg);
    const double e = safe_ratio(std::abs(inner(buv, v)), h_norm(buv) * h_norm(v));
    const double a = safe_ratio(std::abs(inner(buv, w) + inner(buw, v)),
                                h_norm(buv) * h_norm(w) + h_norm(buw) * h_norm(v));
    worst_energy = std::max(worst_energy, e);
    worst_anti = std::max(worst_anti, a);
    rep.worst_margin = std::min(rep.worst_margin, tol - std::max(e, a));
    ++rep.samples;
  }
  rep.values = {{"max_rel_b_uvv", worst_energy}, {"max_rel_antisymmetry", worst_anti}};
  finish(rep);
  return rep;
}

PropertyReport check_stokes_identity(const BasisPtr& basis, std::size_t count, std::uint64_t seed, double tol) {
  PropertyReport rep = make_report("stokes <Au,u> = |u|_V^2", tol);
  CounterStream rng(StreamKey{seed, 0, Channel::corpus}, 2);
  for (std::size_t i = 0; i < count; ++i) {
    const SpectralField u = corpus_field(basis, rng);
    const double v2 = v_norm2(u);
    const double rel = safe_ratio(std::abs(inner(apply_stokes(u), u) - v2), v2);
    rep.worst_margin = std::min(rep.worst_margin, tol - rel);
    ++rep.samples;
  }
  finish(rep);
  return rep;
}

PropertyReport check_absorption_identity(const BasisPtr& basis, double r, std::size_t count, std::uint64_t seed,
                                         double tol) {
  std::ostringstream name;
  name << "absorption <C(u),u> = |u|_{L^{r+1}}^{r+1} r=" << r;
  PropertyReport rep = make_report(name.str(), tol);
  CounterStream rng(StreamKey{seed, 0, Channel::corpus}, 3);
  const int grid = absorption_grid(*basis, r);
  for (std::size_t i = 0; i < count; ++i) {
    const SpectralField u = corpus_field(basis, rng);
    const SpectralField c = absorption_with_power(u, r, grid).value;
    const double lhs = inner(c, u);
    const double rhs = std::pow(l_norm(u, r + 1.0, grid), r + 1.0);
    const double rel = safe_ratio(std::abs(lhs - rhs), rhs);
    rep.worst_margin = std::min(rep.worst_margin, tol - rel);
    ++rep.samples;
  }
  finish(rep);
  return rep;
}

namespace {

double grid_norm_power(const PhysicalField& f, double p, double w) { return grid_power_integral(f, p, w); }

PhysicalField difference(const PhysicalField& a, const PhysicalField& b) {
  PhysicalField out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
  return out;
}

}  // namespace

PropertyReport check_monotonicity(const BasisPtr& basis, double r, std::size_t pairs, std::uint64_t seed,
                                  double tol) {
  std::ostringstream name;
  name << "monotonicity r=" << r;
  PropertyReport rep = make_report(name.str(), tol);
  CounterStream rng(StreamKey{seed, 0, Channel::corpus}, 4);
  const auto coll = shared_collocation(basis, absorption_grid(*basis, r));
  const double w = coll->weight();
  const std::size_t np = coll->points();
  const int d = basis->dim();
  double worst1 = std::numeric_limits<double>::infinity(), worst2 = worst1;
  for (std::size_t i = 0; i < pairs; ++i) {
    const SpectralField u = corpus_field(basis, rng);
    SpectralField v(basis);
    if (i % 3 == 0) {
      v = u;
      if (i % 9 != 0) v += std::pow(10.0, -4.0 * rng.uniform()) * corpus_field(basis, rng);
    } else {
      v = corpus_field(basis, rng);
    }
    const PhysicalField ug = coll->evaluate(u);
    const PhysicalField vg = coll->evaluate(v);
    const PhysicalField cu = absorption_pointwise(ug, r);
    const PhysicalField cv = absorption_pointwise(vg, r);
    double lhs = 0.0, rhs2 = 0.0;
    for (std::size_t x = 0; x < np; ++x) {
      double dot = 0.0, du2 = 0.0, u2 = 0.0, v2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const std::size_t k = c * np + x;
        const double dz = ug.values[k] - vg.values[k];
        dot += (cu.values[k] - cv.values[k]) * dz;
        du2 += dz * dz;
        u2 += ug.values[k] * ug.values[k];
        v2 += vg.values[k] * vg.values[k];
      }
      lhs += dot;
      rhs2 += 0.5 * (std::pow(u2, 0.5 * (r - 1.0)) + std::pow(v2, 0.5 * (r - 1.0))) * du2;
    }
    lhs *= w;
    rhs2 *= w;
    const double rhs1 = std::pow(2.0, 1.0 - r) * grid_norm_power(difference(ug, vg), r + 1.0, w);
    const double scale = std::max({std::abs(lhs), rhs1, rhs2});
    const double m1 = scale > 0.0 ? (lhs - rhs1) / scale : 0.0;
    const double m2 = scale > 0.0 ? (lhs - rhs2) / scale : 0.0;
    worst1 = std::min(worst1, m1);
    worst2 = std::min(worst2, m2);
    rep.worst_margin = std::min(rep.worst_margin, std::min(m1, m2) + tol);
    ++rep.samples;
  }
  rep.values = {{"worst_margin_power_bound", worst1}, {"worst_margin_weighted_bound", worst2}};
  finish(rep);
  return rep;
}

PropertyReport check_convection_bound(const BasisPtr& basis, double r, std::size_t count, std::uint64_t seed,
                                      double tol) {
  if (!(r > 3.0)) throw std::invalid_argument("check_convection_bound: needs r > 3");
  std::ostringstream name;
  name << "convection dual bound r=" << r;
  PropertyReport rep = make_report(name.str(), tol);
  CounterStream rng(StreamKey{seed, 0, Channel::corpus}, 5);
  const int grid = absorption_grid(*basis, r);
  OperatorConfig cfg;
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const SpectralField u = corpus_field(basis, rng);
    const double dual = std::sqrt(dual_v_norm2(apply_convection(u, u, cfg)));
    const double bound = std::pow(l_norm(u, r + 1.0, grid), (r + 1.0) / (r - 1.0)) *
                         std::pow(h_norm(u), (r - 3.0) / (r - 1.0));
    const double ratio = safe_ratio(dual, bound);
    worst = std::max(worst, ratio);
    rep.worst_margin = std::min(rep.worst_margin, 1.0 + tol - ratio);
    ++rep.samples;
  }
  rep.values = {{"max_ratio", worst}};
  finish(rep);
  return rep;
}

PropertyReport check_absorption_lipschitz(const BasisPtr& basis, double r, std::size_t pairs, std::uint64_t seed,
                                          double tol) {
  std::ostringstream name;
  name << "absorption local Lipschitz r=" << r;
  PropertyReport rep = make_report(name.str(), tol);
  CounterStream rng(StreamKey{seed, 0, Channel::corpus}, 6);
  const auto coll = shared_collocation(basis, absorption_grid(*basis, r));
  const double w = coll->weight();
  const double p = (r + 1.0) / r;
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const SpectralField u = corpus_field(basis, rng);
    SpectralField v = u;
    if (i % 2 == 0) {
      v += std::pow(10.0, -4.0 * rng.uniform()) * corpus_field(basis, rng);
    } else {
      v = corpus_field(basis, rng);
    }
    const PhysicalField ug = coll->evaluate(u);
    const PhysicalField vg = coll->evaluate(v);
    const double lhs =
        std::pow(grid_norm_power(difference(absorption_pointwise(ug, r), absorption_pointwise(vg, r)), p, w), 1.0 / p);
    const double lu = std::pow(grid_norm_power(ug, r + 1.0, w), 1.0 / (r + 1.0));
    const double lv = std::pow(grid_norm_power(vg, r + 1.0, w), 1.0 / (r + 1.0));
    const double ld = std::pow(grid_norm_power(difference(ug, vg), r + 1.0, w), 1.0 / (r + 1.0));
    const double rhs = r * std::pow(lu + lv, r - 1.0) * ld;
    const double ratio = safe_ratio(lhs, rhs);
    worst = std::max(worst, ratio);
    rep.worst_margin = std::min(rep.worst_margin, 1.0 + tol - ratio);
    ++rep.samples;
  }
  rep.values = {{"max_ratio", worst}};
  finish(rep);
  return rep;
}

// ---------------------------------------------------------------- noise

double family_z_bound(std::size_t tests) {
  const boost::math::normal_distribution<double> z;
  const double single = 2.0 * boost::math::cdf(boost::math::complement(z, 3.0));
  if (tests <= 1) return 3.0;
  const double each = -std::expm1(std::log1p(-single) / double(tests));
  return boost::math::quantile(boost::math::complement(z, each / 2.0));
}

PropertyReport check_wiener_statistics(const BasisPtr& basis, const QSpectrum& q, double dt, std::size_t draws,
                                       std::uint64_t seed) {
  PropertyReport rep = make_report("wiener increment variance", 3.0);
  const Basis& b = *basis;
  std::vector<std::size_t> modes;
  std::vector<double> expected;
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    if (!b.wavevector(w).canonical()) continue;
    for (int p = 0; p < b.polarizations(); ++p) {
      modes.push_back(b.mode(w, p));
      expected.push_back(q.weight(b.norm2(w)) * dt);
    }
  }
  // Real coordinates sqrt(2) Re c and sqrt(2) Im c of each canonical mode.
  std::vector<std::vector<double>> sq(2 * modes.size());
  std::vector<double> trace_samples;
  CounterStream rng(StreamKey{seed, 0, Channel::wiener});
  for (std::size_t i = 0; i < draws; ++i) {
    const SpectralField dw = sample_wiener_increment(basis, q, dt, rng);
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const Complex c = dw.coeffs[modes[j]];
      sq[2 * j].push_back(2.0 * c.real() * c.real());
      sq[2 * j + 1].push_back(2.0 * c.imag() * c.imag());
    }
    trace_samples.push_back(h_norm2(dw) / dt);
  }
  double worst_z = 0.0;
  for (std::size_t j = 0; j < sq.size(); ++j) {
    const MeanEstimate e = estimate_mean(sq[j]);
    worst_z = std::max(worst_z, safe_ratio(std::abs(e.mean - expected[j / 2]), e.se));
  }
  const double mode_bound = family_z_bound(sq.size());
  const MeanEstimate tr = estimate_mean(trace_samples);
  const double trace_q = q.trace(b);
  const double trace_z = safe_ratio(std::abs(tr.mean - trace_q), tr.se);
  rep.samples = draws;
  rep.worst_margin = std::min(mode_bound - worst_z, 3.0 - trace_z);
  rep.values = {{"worst_mode_z", worst_z},
                {"mode_z_bound", mode_bound},
                {"coordinates", double(sq.size())},
                {"trace_mean", tr.mean},
                {"trace_q", trace_q},
                {"trace_z", trace_z}};
  finish(rep);
  return rep;
}

PropertyReport check_poisson_counts(const JumpSpec& spec, double horizon, std::size_t runs, std::uint64_t seed) {
  PropertyReport rep = make_report("poisson jump counts", 0.01);
  const double lambda_t = spec.rate * horizon;
  std::vector<double> counts(runs);
  for (std::size_t i = 0; i < runs; ++i) counts[i] = double(sample_jumps(spec, horizon, seed, i).size());
  const MeanEstimate e = estimate_mean(counts);
  const double z = safe_ratio(std::abs(e.mean - lambda_t), e.se);

  // Bins with expected frequency >= 5; tails pooled into the end bins.
  boost::math::poisson_distribution<double> pd(lambda_t);
  const double n = double(runs);
  int lo = 0;
  while (n * boost::math::cdf(pd, double(lo)) < 5.0) ++lo;
  int hi = lo;
  while (n * boost::math::cdf(boost::math::complement(pd, double(hi))) >= 5.0) ++hi;
  const int bins = hi - lo + 1;
  std::vector<double> observed(bins, 0.0), expected(bins, 0.0);
  for (double c : counts) {
    const int k = std::clamp(int(c), lo, hi);
    observed[k - lo] += 1.0;
  }
  for (int k = lo; k <= hi; ++k) {
    double prob;
    if (k == lo && k == hi) prob = 1.0;
    else if (k == lo) prob = boost::math::cdf(pd, double(k));
    else if (k == hi) prob = boost::math::cdf(boost::math::complement(pd, double(k - 1)));
    else prob = boost::math::pdf(pd, double(k));
    expected[k - lo] = n * prob;
  }
  double chi2 = 0.0;
  for (int j = 0; j < bins; ++j) chi2 += (observed[j] - expected[j]) * (observed[j] - expected[j]) / expected[j];
  double p_value = 1.0;
  if (bins > 1) {
    boost::math::chi_squared_distribution<double> cd(bins - 1);
    p_value = boost::math::cdf(boost::math::complement(cd, chi2));
  }
  rep.samples = runs;
  rep.worst_margin = std::min(3.0 - z, p_value - 0.01);
  rep.values = {{"mean_count", e.mean}, {"expected_count", lambda_t}, {"mean_z", z},
                {"chi2", chi2},         {"bins", double(bins)},       {"p_value", p_value}};
  finish(rep);
  return rep;
}

namespace {

SpectralField compensated_integral(const GammaFamily& gamma, const JumpSpec& spec, const SpectralField& u,
                                   double horizon, std::uint64_t seed, std::uint64_t traj) {
  SpectralField m(u.basis);
  for (const Jump& j : sample_jumps(spec, horizon, seed, traj)) m += jump_increment(gamma, j.time, u, j.mark);
  m.axpy(-horizon, compensator_drift(gamma, spec, 0.0, u));
  return m;
}

}  // namespace

PropertyReport check_ito_isometry(const GammaFamily& gamma, const JumpSpec& spec, const SpectralField& u,
                                  double horizon, std::size_t runs, std::uint64_t seed) {
  PropertyReport rep = make_report("ito isometry for compensated jumps", 3.0);
  std::vector<double> xs(runs);
  for (std::size_t i = 0; i < runs; ++i) xs[i] = h_norm2(compensated_integral(gamma, spec, u, horizon, seed, i));
  const MeanEstimate e = estimate_mean(xs);
  const double g = gamma.amplitude(h_norm(u));
  const double expected = horizon * g * g * spec.m2();
  const double z = safe_ratio(std::abs(e.mean - expected), e.se);
  rep.samples = runs;
  rep.worst_margin = 3.0 - z;
  rep.values = {{"mean", e.mean}, {"expected", expected}, {"se", e.se}, {"z", z}};
  finish(rep);
  return rep;
}

PropertyReport check_compensated_mean(const GammaFamily& gamma, const JumpSpec& spec, const SpectralField& u,
                                      const SpectralField& phi, double horizon, std::size_t runs,
                                      std::uint64_t seed) {
  PropertyReport rep = make_report("compensated jump martingale mean", 3.0);
  std::vector<double> xs(runs);
  for (std::size_t i = 0; i < runs; ++i) xs[i] = inner(compensated_integral(gamma, spec, u, horizon, seed, i), phi);
  const MeanEstimate e = estimate_mean(xs);
  const double z = safe_ratio(std::abs(e.mean), e.se);
  rep.samples = runs;
  rep.worst_margin = 3.0 - z;
  rep.values = {{"mean", e.mean}, {"se", e.se}, {"z", z}};
  finish(rep);
  return rep;
}

// ---------------------------------------------------------------- uniqueness

UniquenessRegime uniqueness_regime(int d, double r, double mu, double beta) {
  UniquenessRegime reg;
  std::ostringstream msg;
  if (d == 3 && r < 3.0) {
    msg << "pathwise uniqueness is not covered for d = 3, r = " << r << " (needs r >= 3)";
    throw RegimeRefused(msg.str());
  }
  if (d == 3 && r == 3.0) {
    if (2.0 * beta * mu < 1.0) {
      msg << "pathwise uniqueness for d = 3, r = 3 needs 2βμ ≥ 1 for r = 3 (got 2βμ = " << 2.0 * beta * mu << ")";
      throw RegimeRefused(msg.str());
    }
    reg.weight = UniquenessWeight::none;
    reg.description = "d = 3, r = 3, 2 beta mu >= 1: unweighted envelope";
    return reg;
  }
  if (r > 3.0) {
    const double zeta = (r - 3.0) / (2.0 * mu * (r - 1.0)) * std::pow(4.0 / (beta * mu * (r - 1.0)), 2.0 / (r - 3.0));
    reg.weight = UniquenessWeight::constant_rate;
    reg.rate = 2.0 * zeta;
    reg.description = "r > 3: constant-rate weight 2 zeta-hat t";
    return reg;
  }
  if (d != 2) throw RegimeRefused("pathwise uniqueness regime not recognised");
  reg.weight = UniquenessWeight::ladyzhenskaya;
  reg.description = "d = 2, r <= 3: weight 27/(8 mu^3) int ||u2||_{L^4}^4";
  return reg;
}

UniquenessReport gronwall_uniqueness_test(const PathConfig& cfg, const InitialSampler& u0, double delta,
                                          std::size_t seeds, double lipschitz, double tol, int jobs) {
  const Model& model = cfg.model;
  UniquenessReport rep;
  rep.regime = uniqueness_regime(model.basis->dim(), model.ops.r, model.ops.mu, model.ops.beta);
  PathConfig c = cfg;
  c.record_noise = false;
  c.output_dt = cfg.scheme.dt;
  const double dt = c.scheme.dt;
  const int l4_grid = absorption_grid(*model.basis, 3.0);
  const double lady = 27.0 / (8.0 * std::pow(model.ops.mu, 3));

  auto perturbation = [&](std::uint64_t traj) {
    CounterStream rng(StreamKey{cfg.seed, traj, Channel::initial}, 1);
    SpectralField e = random_field(model.basis, rng);
    e *= 1.0 / h_norm(e);
    return e;
  };
  auto sup_diff = [](const Trajectory& a, const Trajectory& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < std::min(a.states.size(), b.states.size()); ++k) {
      s = std::max(s, h_norm(a.states[k] - b.states[k]));
    }
    return s;
  };

  struct Twin {
    std::vector<double> weighted;  // e^{-weight} ||z||^2 per output
    std::vector<double> times;
    double z0 = 0.0;
    bool ok = false;
    bool zero_exact = true;
    double scaling = 0.0;
  };
  const std::size_t checks = std::min<std::size_t>(seeds, 10);
  std::vector<Twin> twins(seeds);
  parallel_for(seeds, jobs, [&](std::size_t i) {
    PathConfig ci = c;
    ci.trajectory = cfg.trajectory + i;
    const SpectralField ua = u0(ci.trajectory);
    const SpectralField e = perturbation(ci.trajectory);
    SpectralField ub = ua;
    ub.axpy(delta, e);
    const auto [a, b] = simulate_pair_crn(ci, ua, ub);
    Twin& t = twins[i];
    if (a.status != RunStatus::completed || b.status != RunStatus::completed) return;
    t.ok = true;
    t.z0 = h_norm2(ua - ub);
    double weight = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) {
      t.times.push_back(a.times[k]);
      t.weighted.push_back(std::exp(-weight) * h_norm2(a.states[k] - b.states[k]));
      if (rep.regime.weight == UniquenessWeight::ladyzhenskaya) {
        weight += lady * std::pow(l_norm(b.states[k], 4.0, l4_grid), 4.0) * dt;
      } else if (rep.regime.weight == UniquenessWeight::constant_rate) {
        weight += rep.regime.rate * dt;
      }
    }
    if (i < checks) {
      const auto [a0, b0] = simulate_pair_crn(ci, ua, ua);
      t.zero_exact = a0.states == b0.states && a0.status == b0.status;
      SpectralField uh = ua;
      uh.axpy(0.5 * delta, e);
      const auto [ah, bh] = simulate_pair_crn(ci, ua, uh);
      const double full = sup_diff(a, b);
      const double half = sup_diff(ah, bh);
      t.scaling = half > 0.0 ? full / half : std::numeric_limits<double>::infinity();
    }
  });

  rep.zero_separation = make_report("uniqueness: zero separation is bitwise zero", 0.0);
  rep.envelope = make_report("uniqueness: weighted Gronwall envelope", tol);
  rep.scaling = make_report("uniqueness: halving delta halves sup |z|", 0.1);
  std::size_t tripped = 0;
  double worst_ratio = 0.0, worst_scaling = 0.0;
  std::vector<double> mean_weighted;
  std::vector<double> times;
  double mean_z0 = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < seeds; ++i) {
    const Twin& t = twins[i];
    if (!t.ok) {
      ++tripped;
      continue;
    }
    ++ok;
    if (i < checks) {
      rep.zero_separation.worst_margin = std::min(rep.zero_separation.worst_margin, t.zero_exact ? 0.0 : -1.0);
      ++rep.zero_separation.samples;
      const double dev = std::abs(t.scaling / 2.0 - 1.0);
      worst_scaling = std::max(worst_scaling, dev);
      rep.scaling.worst_margin = std::min(rep.scaling.worst_margin, 0.1 - dev);
      ++rep.scaling.samples;
    }
    if (mean_weighted.empty()) {
      mean_weighted.assign(t.weighted.size(), 0.0);
      times = t.times;
    }
    mean_z0 += t.z0;
    for (std::size_t k = 0; k < t.weighted.size() && k < mean_weighted.size(); ++k) {
      mean_weighted[k] += t.weighted[k];
      if (lipschitz == 0.0) worst_ratio = std::max(worst_ratio, safe_ratio(t.weighted[k], t.z0));
    }
    ++rep.envelope.samples;
  }
  if (lipschitz > 0.0 && ok > 0) {
    mean_z0 /= double(ok);
    for (std::size_t k = 0; k < mean_weighted.size(); ++k) {
      const double envelope = mean_z0 * std::exp(lipschitz * times[k]);
      worst_ratio = std::max(worst_ratio, safe_ratio(mean_weighted[k] / double(ok), envelope));
    }
  }
  rep.envelope.worst_margin = ok > 0 ? 1.0 + tol - worst_ratio : -1.0;
  rep.envelope.values = {{"max_weighted_ratio", worst_ratio},
                         {"tripped", double(tripped)},
                         {"lipschitz", lipschitz},
                         {"per_path", lipschitz == 0.0 ? 1.0 : 0.0}};
  rep.scaling.values = {{"max_relative_deviation", worst_scaling}};
  rep.envelope.detail = rep.regime.description;
  finish(rep.zero_separation);
  finish(rep.envelope);
  finish(rep.scaling);
  if (ok == 0) {
    rep.zero_separation.passed = rep.scaling.passed = false;
  }
  rep.passed = rep.zero_separation.passed && rep.envelope.passed && rep.scaling.passed;
  return rep;
}

// ---------------------------------------------------------------- convergence

ConvergenceReport galerkin_convergence_study(const std::function<PathConfig(int)>& make_config,
                                             const std::function<SpectralField(const BasisPtr&)>& initial,
                                             const std::vector<int>& cutoffs, double min_rate) {
  if (cutoffs.size() < 2) throw std::invalid_argument("galerkin_convergence_study: need >= 2 cutoffs");
  for (std::size_t i = 1; i < cutoffs.size(); ++i) {
    if (cutoffs[i] <= cutoffs[i - 1]) throw std::invalid_argument("galerkin_convergence_study: cutoffs must increase");
  }
  ConvergenceReport rep;
  rep.cutoffs = cutoffs;
  std::vector<Trajectory> runs;
  std::vector<BasisPtr> bases;
  for (int n : cutoffs) {
    PathConfig c = make_config(n);
    c.record_noise = false;
    const Trajectory tr = simulate_path(c, initial(c.model.basis));
    if (tr.status != RunStatus::completed) {
      throw std::runtime_error("galerkin_convergence_study: guard tripped at cutoff " + std::to_string(n));
    }
    runs.push_back(tr);
    bases.push_back(c.model.basis);
  }
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    const Trajectory& a = runs[i];
    const Trajectory& b = runs[i + 1];
    double sup = 0.0;
    for (std::size_t k = 0; k < std::min(a.states.size(), b.states.size()); ++k) {
      sup = std::max(sup, h_norm(embed(a.states[k], bases[i + 1]) - b.states[k]));
    }
    rep.sup_differences.push_back(sup);
    rep.terminal_differences.push_back(h_norm(embed(a.states.back(), bases[i + 1]) - b.states.back()));
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.sup_differences.size(); ++i) {
    if (!(rep.sup_differences[i] < rep.sup_differences[i - 1])) rep.monotone = false;
  }
  std::vector<double> ns(cutoffs.begin(), cutoffs.end() - 1);
  const bool positive = std::all_of(rep.terminal_differences.begin(), rep.terminal_differences.end(),
                                    [](double x) { return x > 0.0; });
  if (positive && ns.size() >= 2) rep.rate = -loglog_slope(ns, rep.terminal_differences);
  rep.passed = rep.monotone && (ns.size() < 2 || rep.rate >= min_rate);
  return rep;
}

DtStudy dt_refinement_study(const PathConfig& cfg, const InitialSampler& u0, const std::vector<int>& factors,
                            int reference_factor, std::size_t paths, int jobs) {
  const double dt0 = cfg.scheme.dt;
  const double fine = dt0 / reference_factor;
  std::vector<std::vector<double>> err(paths, std::vector<double>(factors.size(), 0.0));
  parallel_for(paths, jobs, [&](std::size_t i) {
    PathConfig c = cfg;
    c.trajectory = cfg.trajectory + i;
    c.record_noise = false;
    c.output_dt = 0.0;
    c.noise_dt = fine;
    const SpectralField init = u0(c.trajectory);
    c.scheme.dt = fine;
    const Trajectory ref = simulate_path(c, init);
    for (std::size_t j = 0; j < factors.size(); ++j) {
      c.scheme.dt = dt0 / factors[j];
      const Trajectory tr = simulate_path(c, init);
      err[i][j] = h_norm2(tr.states.back() - ref.states.back());
    }
  });
  DtStudy st;
  for (std::size_t j = 0; j < factors.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < paths; ++i) s += err[i][j];
    st.dts.push_back(dt0 / factors[j]);
    st.errors.push_back(std::sqrt(s / double(paths)));
  }
  if (st.dts.size() >= 2) st.order = loglog_slope(st.dts, st.errors);
  return st;
}

}  // namespace scbf
