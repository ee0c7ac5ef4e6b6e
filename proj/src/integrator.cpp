#include "scbf/integrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace scbf {

void StepScheme::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt: step must satisfy dt > 0");
  if (!(guard >= 0.0)) throw std::invalid_argument("guard: threshold must satisfy guard >= 0");
}

void Model::validate() const {
  if (!basis) throw std::invalid_argument("model: basis missing");
  ops.validate();
  if (sigma.kind != SigmaFamily::Kind::none) {
    q.validate(basis->dim());
    if (!(sigma.amplitude >= 0.0)) throw std::invalid_argument("sigma_amplitude: must satisfy a >= 0");
    if (!(sigma.rho >= 0.0)) throw std::invalid_argument("sigma_rho: must satisfy rho >= 0");
  }
  if (!(jumps.rate >= 0.0)) throw std::invalid_argument("jump_rate: intensity must satisfy rate >= 0");
  if (jumps.marks.kind == MarkLaw::Kind::uniform && !(jumps.marks.a <= jumps.marks.b)) {
    throw std::invalid_argument("mark_a, mark_b: uniform marks need a <= b");
  }
  if (jumps.marks.kind == MarkLaw::Kind::gaussian && !(jumps.marks.b >= 0.0)) {
    throw std::invalid_argument("mark_b: Gaussian mark deviation must be >= 0");
  }
  if (gamma.active()) {
    if (!gamma.direction.basis || gamma.direction.basis != basis) {
      throw std::invalid_argument("gamma_direction: direction field must live on the model basis");
    }
    if (std::abs(h_norm(gamma.direction) - 1.0) > 1e-9) {
      throw std::invalid_argument("gamma_direction: direction field must have unit H norm");
    }
  }
}

void PathConfig::validate() const {
  model.validate();
  scheme.validate();
  if (!(horizon >= 0.0)) throw std::invalid_argument("T: horizon must satisfy T >= 0");
  const double steps = horizon / scheme.dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
    throw std::invalid_argument("dt: T must be an integer multiple of dt");
  }
  if (noise_dt < 0.0) throw std::invalid_argument("noise_dt: must be >= 0");
  if (noise_dt > 0.0) {
    const double ratio = scheme.dt / noise_dt;
    if (ratio < 1.0 - 1e-12 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
      throw std::invalid_argument("noise_dt: dt must be an integer multiple of noise_dt");
    }
  }
  if (output_dt < 0.0) throw std::invalid_argument("output_dt: must be >= 0");
}

GuardTripped::GuardTripped(double t, double n)
    : std::runtime_error("blow-up guard tripped at t = " + std::to_string(t) + " (||u||_H = " +
                         std::to_string(n) + ")"),
      time(t),
      norm(n) {}

DriftValue drift(const Model& model, const SpectralField& u, bool include_stokes) {
  DriftValue out{SpectralField(u.basis), 0.0};
  const OperatorConfig& ops = model.ops;
  if (include_stokes && model.terms.stokes) out.value.axpy(-ops.mu, apply_stokes(u));
  if (model.terms.convection) out.value -= apply_convection(u, u, ops);
  if (model.terms.absorption) {
    auto c = absorption_with_power(u, ops.r, absorption_grid(*u.basis, ops.r, ops.padding));
    out.value.axpy(-ops.beta, c.value);
    out.absorption_power = c.power;
  }
  return out;
}

namespace {

void check_guard(const SpectralField& u, double t, double guard) {
  const double n = h_norm(u);
  if (!std::isfinite(n) || (guard > 0.0 && n > guard)) throw GuardTripped(t, n);
}

void apply_stokes_factor(SpectralField& u, double mu, double h) {
  const Basis& b = *u.basis;
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    const double f = std::exp(-mu * b.norm2(w) * h);
    for (int p = 0; p < b.polarizations(); ++p) u.coeffs[b.mode(w, p)] *= f;
  }
}

}  // namespace

SdeState step(const SdeState& s, const StepScheme& scheme, const Model& model, const StepNoise& noise,
              StepObserver* observer) {
  if (noise.increments.size() != noise.lengths.size() || noise.jumps.size() + 1 != noise.lengths.size()) {
    throw std::invalid_argument("step: need one increment per substep and one jump between substeps");
  }
  const bool exponential = scheme.kind == SchemeKind::exponential_tamed && model.terms.stokes;
  const bool multiplicative = model.sigma.kind == SigmaFamily::Kind::bounded_multiplicative;
  const double trace_q = model.sigma.kind == SigmaFamily::Kind::none ? 0.0 : model.trace_q();
  const double m2 = model.jumps.m2();
  SdeState out{s.u, s.t, s.steps + 1};
  SpectralField& u = out.u;
  for (std::size_t j = 0; j < noise.lengths.size(); ++j) {
    const double h = noise.lengths[j];
    if (h > 0.0) {
      const DriftValue d = drift(model, u, !exponential);
      const double norm = (multiplicative || model.gamma.active()) ? h_norm(u) : 0.0;
      const SpectralField sdw = diffusion_increment(model.sigma, out.t, u, noise.increments[j]);
      const SpectralField comp = compensator_drift(model.gamma, model.jumps, out.t, u);
      const double scale = scheme.taming ? h / (1.0 + h * h_norm(d.value)) : h;
      if (observer) {
        SubstepEvent ev;
        ev.t = out.t;
        ev.h = h;
        ev.u = &u;
        ev.sigma_dw = &sdw;
        ev.compensator = &comp;
        ev.sigma_lq2 = model.sigma.lq_norm2(norm, trace_q);
        ev.absorption_power = d.absorption_power;
        const double g = model.gamma.active() ? model.gamma.amplitude(norm) : 0.0;
        ev.gamma_intensity = g * g * m2;
        observer->substep(ev);
      }
      SpectralField next = u;
      next.axpy(scale, d.value);
      next += sdw;
      next.axpy(-h, comp);
      if (exponential) apply_stokes_factor(next, model.ops.mu, h);
      u = std::move(next);
      out.t += h;
      check_guard(u, out.t, scheme.guard);
    }
    if (j < noise.jumps.size()) {
      const Jump& jp = noise.jumps[j];
      out.t = jp.time;
      const SpectralField g = jump_increment(model.gamma, jp.time, u, jp.mark);
      if (observer) observer->jump(JumpEvent{jp.time, jp.mark, &u, &g});
      u += g;
      check_guard(u, out.t, scheme.guard);
    }
  }
  return out;
}

std::vector<double> output_times(const PathConfig& cfg) {
  const double T = cfg.horizon;
  const double tol = 1e-9 * std::max(cfg.scheme.dt, T);
  std::vector<double> out;
  if (cfg.output_dt > 0.0) {
    for (std::size_t k = 0;; ++k) {
      const double t = double(k) * cfg.output_dt;
      if (t > T + tol) break;
      out.push_back(std::min(t, T));
    }
  } else {
    out.push_back(0.0);
  }
  if (T - out.back() > tol) out.push_back(T);
  return out;
}

namespace {

// Splits the base increment W over substeps by sequential Brownian bridges;
// the pieces sum to W exactly up to rounding.
std::vector<SpectralField> bridge_split(const SpectralField& w, const std::vector<double>& lengths,
                                        const WienerSource& src, std::uint64_t step_index) {
  std::vector<SpectralField> pieces;
  pieces.reserve(lengths.size());
  SpectralField rest = w;
  double remaining = 0.0;
  for (double h : lengths) remaining += h;
  for (std::size_t j = 0; j + 1 < lengths.size(); ++j) {
    const double h = lengths[j];
    SpectralField piece(w.basis);
    if (remaining > 0.0 && h > 0.0) {
      piece.axpy(h / remaining, rest);
      const double var = h * std::max(remaining - h, 0.0) / remaining;
      if (var > 0.0) piece += src.bridge_sample(step_index, j, var);
    }
    rest -= piece;
    remaining -= h;
    pieces.push_back(std::move(piece));
  }
  pieces.push_back(std::move(rest));
  return pieces;
}

}  // namespace

Trajectory simulate_path(const PathConfig& cfg, const SpectralField& u0, StepObserver* observer,
                         const NoiseRecord* replay) {
  cfg.validate();
  const Model& model = cfg.model;
  if (u0.basis != model.basis) throw std::invalid_argument("simulate_path: initial state on a foreign basis");
  const std::size_t modes = model.basis->size();
  if (replay && replay->modes != modes) throw std::invalid_argument("simulate_path: replay record basis mismatch");

  StepScheme scheme = cfg.scheme;
  if (scheme.guard == 0.0) scheme.guard = 1e6 * std::max(h_norm(u0), 1.0);

  Trajectory tr;
  tr.noise.seed = replay ? replay->seed : cfg.seed;
  tr.noise.trajectory = replay ? replay->trajectory : cfg.trajectory;
  tr.noise.modes = modes;

  const double T = cfg.horizon;
  const double dt = scheme.dt;
  const std::uint64_t nsteps = static_cast<std::uint64_t>(std::llround(T / dt));
  const std::uint64_t refine = cfg.noise_dt > 0.0 ? std::llround(dt / cfg.noise_dt) : 1;

  std::vector<Jump> jumps;
  if (replay) {
    if (replay->jump_times.size() != replay->marks.size()) {
      throw std::invalid_argument("simulate_path: replay record has mismatched jump arrays");
    }
    for (std::size_t i = 0; i < replay->jump_times.size(); ++i) jumps.push_back({replay->jump_times[i], replay->marks[i]});
  } else if (T > 0.0 && model.jumps.rate > 0.0) {
    jumps = sample_jumps(model.jumps, T, cfg.seed, cfg.trajectory);
  }
  for (const Jump& j : jumps) {
    tr.noise.jump_times.push_back(j.time);
    tr.noise.marks.push_back(j.mark);
  }

  const WienerSource source(model.basis, model.q, cfg.seed, cfg.trajectory, dt / double(refine));
  const bool need_wiener = model.sigma.kind != SigmaFamily::Kind::none || cfg.record_noise;
  const std::vector<double> outs = output_times(cfg);
  const double tol = 1e-9 * dt;
  std::size_t next_out = 0;
  auto record = [&](double t, const SpectralField& u) {
    tr.times.push_back(t);
    tr.states.push_back(u);
    if (observer) observer->output(t, u);
  };

  SdeState state{u0, 0.0, 0};
  std::size_t jump_cursor = 0;
  std::size_t replay_cursor = 0;
  for (std::uint64_t i = 0; i < nsteps; ++i) {
    const double t0 = double(i) * dt;
    const double t1 = i + 1 == nsteps ? T : double(i + 1) * dt;
    while (next_out < outs.size() && outs[next_out] < t1 - tol) record(outs[next_out++], state.u);

    StepNoise sn;
    double left = t0;
    while (jump_cursor < jumps.size() && jumps[jump_cursor].time <= t1) {
      const Jump& j = jumps[jump_cursor++];
      sn.lengths.push_back(std::max(j.time - left, 0.0));
      sn.jumps.push_back(j);
      left = std::max(left, j.time);
    }
    sn.lengths.push_back(std::max(t1 - left, 0.0));

    if (replay) {
      for (std::size_t j = 0; j < sn.lengths.size(); ++j) {
        if ((replay_cursor + 1) * modes > replay->increments.size()) {
          throw std::invalid_argument("simulate_path: replay record exhausted");
        }
        SpectralField w(model.basis);
        std::copy_n(replay->increments.begin() + replay_cursor * modes, modes, w.coeffs.begin());
        sn.increments.push_back(std::move(w));
        ++replay_cursor;
      }
    } else if (need_wiener) {
      const SpectralField w = source.increment(i * refine, refine);
      if (sn.lengths.size() == 1) {
        sn.increments.push_back(w);
      } else {
        sn.increments = bridge_split(w, sn.lengths, source, i);
      }
    } else {
      sn.increments.assign(sn.lengths.size(), SpectralField(model.basis));
    }
    if (cfg.record_noise) {
      for (const auto& w : sn.increments) {
        tr.noise.increments.insert(tr.noise.increments.end(), w.coeffs.begin(), w.coeffs.end());
      }
    }

    try {
      state = step(state, scheme, model, sn, observer);
    } catch (const GuardTripped& g) {
      tr.status = RunStatus::guard_tripped;
      tr.trip_time = g.time;
      return tr;
    }
    state.t = t1;
  }
  while (next_out < outs.size()) record(outs[next_out++], state.u);
  return tr;
}

std::pair<Trajectory, Trajectory> simulate_pair_crn(const PathConfig& cfg, const SpectralField& u0a,
                                                    const SpectralField& u0b) {
  // Keyed streams depend only on (seed, trajectory), never on the state.
  Trajectory a = simulate_path(cfg, u0a);
  Trajectory b = simulate_path(cfg, u0b);
  return {std::move(a), std::move(b)};
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace scbf
