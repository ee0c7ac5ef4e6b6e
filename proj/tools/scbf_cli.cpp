// scbf: simulate, verify and study stochastic convective Brinkman-Forchheimer
// Galerkin systems.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "scbf/config.hpp"
#include "scbf/diagnostics.hpp"
#include "scbf/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scbf;

namespace {

constexpr int kPass = 0;
constexpr int kPropertyFailure = 1;
constexpr int kUsageError = 2;

struct Options {
  std::string config;
  std::string out = "scbf-out";
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

int resolve_jobs(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("SCBF_JOBS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
    throw CLI::ValidationError("SCBF_JOBS", std::string("must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RunConfig load(const Options& o) {
  RunConfig c = o.config.empty() ? parse_config("") : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  return c;
}

HypothesisConstants constants_of(const Model& m) {
  return declared_constants(m.sigma, m.gamma, m.jumps, m.trace_q());
}

class Session {
 public:
  Session(const Options& o, RunConfig cfg, std::string command)
      : dir_(o.out), cfg_(std::move(cfg)), command_(std::move(command)) {
    fs::create_directories(dir_);
  }

  const RunConfig& config() const { return cfg_; }

  void report(const json& j, bool passed) {
    records_.push_back(j);
    std::cout << (passed ? "PASS " : "FAIL ") << j.value("property", std::string("report")) << '\n';
    all_passed_ = all_passed_ && passed;
  }

  std::string path(const std::string& name) {
    files_.push_back(name);
    return (fs::path(dir_) / name).string();
  }

  int finish(const HypothesisConstants& k) {
    if (!records_.empty()) write_jsonl(path(command_ + ".jsonl"), records_);
    write_manifest(dir_, {to_json(cfg_), k, cfg_.seed, command_, files_});
    return all_passed_ ? kPass : kPropertyFailure;
  }

  void fail() { all_passed_ = false; }

 private:
  std::string dir_;
  RunConfig cfg_;
  std::string command_;
  std::vector<json> records_;
  std::vector<std::string> files_;
  bool all_passed_ = true;
};

int run_simulate(const Options& o) {
  Session s(o, load(o), "simulate");
  const PathConfig pc = make_path_config(s.config());
  const SpectralField u0 = initial_state(s.config(), pc.model.basis);
  const Trajectory tr = simulate_path(pc, u0);
  write_snapshot(s.path("trajectory.scbf"),
                 {{std::uint32_t(s.config().d), std::uint32_t(s.config().n), s.config().r, s.config().mu,
                   s.config().beta, s.config().T, s.config().dt},
                  tr});
  const EnergyLedger ledger = energy_ledger(tr, pc);
  write_ledger_csv(s.path("ledger.csv"), ledger);
  const bool completed = tr.status == RunStatus::completed;
  json j = {{"property", "simulate"},
            {"completed", completed},
            {"outputs", tr.states.size()},
            {"final_time", tr.times.empty() ? 0.0 : tr.times.back()},
            {"final_energy", tr.states.empty() ? 0.0 : h_norm2(tr.states.back())},
            {"final_residual", ledger.rows.empty() ? 0.0 : ledger.rows.back().residual},
            {"jumps", ledger.jumps}};
  if (!completed) j["trip_time"] = tr.trip_time;
  s.report(j, completed);
  return s.finish(constants_of(pc.model));
}

int run_ensemble(const Options& o, int jobs) {
  Session s(o, load(o), "ensemble");
  const PathConfig pc = make_path_config(s.config());
  const InitialSampler u0 = initial_sampler(s.config(), pc.model.basis);
  const HypothesisConstants k = constants_of(pc.model);
  const MomentReport moment = moment_bound_check(pc, u0, s.config().ensemble, k.k1, jobs);
  s.report(to_json(moment), moment.passed);
  const BalanceReport balance = ensemble_energy_balance(pc, u0, s.config().ensemble, jobs);
  s.report(to_json(balance), balance.passed);
  return s.finish(k);
}

int run_verify(const Options& o) {
  Session s(o, load(o), "verify");
  const RunConfig& c = s.config();
  const Model m = build_model(c);
  const BasisPtr& basis = m.basis;
  const std::size_t count = c.verify_samples;
  const std::uint64_t seed = c.seed;
  auto add = [&s](const PropertyReport& r) { s.report(to_json(r), r.passed); };
  add(check_trilinear(basis, count, seed, m.ops.dealias));
  add(check_stokes_identity(basis, count, seed));
  add(check_absorption_identity(basis, c.r, count, seed));
  add(check_monotonicity(basis, c.r, count, seed));
  if (c.r > 3.0) add(check_convection_bound(basis, c.r, count, seed));
  add(check_absorption_lipschitz(basis, c.r, count, seed));
  add(check_wiener_statistics(basis, m.q, c.dt, count, seed));
  if (m.jumps.rate > 0.0) {
    const double horizon = c.T > 0.0 ? c.T : 1.0;
    add(check_poisson_counts(m.jumps, horizon, count, seed));
    if (m.gamma.active()) {
      CounterStream rng(StreamKey{seed, 0, Channel::corpus}, 7);
      const SpectralField u = random_field(basis, rng);
      const SpectralField phi = random_field(basis, rng);
      add(check_ito_isometry(m.gamma, m.jumps, u, horizon, count, seed));
      add(check_compensated_mean(m.gamma, m.jumps, u, phi, horizon, count, seed));
    }
  }
  const HypothesisConstants k = constants_of(m);
  const CertReport cert = certify_hypotheses(probe_for(m.sigma, m.gamma, m.jumps, m.trace_q()), k,
                                             certification_corpus(basis, count, seed));
  s.report(to_json(cert), cert.passed);
  return s.finish(k);
}

int run_converge(const Options& o, int jobs) {
  Session s(o, load(o), "converge");
  const RunConfig& c = s.config();
  const PathConfig pc = make_path_config(c);
  const DtStudy dts =
      dt_refinement_study(pc, initial_sampler(c, pc.model.basis), c.dt_factors, c.dt_reference_factor, c.ensemble, jobs);
  json dj = to_json(dts);
  const bool dt_ok = dts.dts.size() < 2 || dts.order >= c.min_dt_order;
  dj["min_order"] = c.min_dt_order;
  dj["passed"] = dt_ok;
  s.report(dj, dt_ok);
  const ConvergenceReport gal = galerkin_convergence_study(
      [&c](int n) { return make_path_config(c, n); },
      [&c](const BasisPtr& b) { return initial_state(c, b); }, c.cutoffs, c.min_rate);
  s.report(to_json(gal), gal.passed);
  return s.finish(constants_of(pc.model));
}

int run_uniqueness(const Options& o, int jobs) {
  Session s(o, load(o), "uniqueness");
  const RunConfig& c = s.config();
  const PathConfig pc = make_path_config(c);
  const HypothesisConstants k = constants_of(pc.model);
  const UniquenessReport rep = gronwall_uniqueness_test(pc, initial_sampler(c, pc.model.basis), c.delta,
                                                        c.ensemble, k.lipschitz, c.envelope_tol, jobs);
  s.report(to_json(rep), rep.passed);
  return s.finish(k);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin simulator and verification harness for stochastic convective "
               "Brinkman-Forchheimer equations on the periodic torus"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Options opt;
  auto common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config, "YAML key: value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "overrides the configured seed");
    sub->add_option("--jobs", opt.jobs, "worker threads (default: SCBF_JOBS, else all cores)")
        ->check(CLI::PositiveNumber);
  };
  CLI::App* simulate = app.add_subcommand("simulate", "one path: snapshot and ledger CSV");
  CLI::App* ensemble = app.add_subcommand("ensemble", "m paths: moment bound and energy balance");
  CLI::App* verify = app.add_subcommand("verify", "operator and noise property suites");
  CLI::App* converge = app.add_subcommand("converge", "dt refinement and Galerkin self-convergence");
  CLI::App* uniqueness = app.add_subcommand("uniqueness", "common-random-number twin tests");
  for (CLI::App* sub : {simulate, ensemble, verify, converge, uniqueness}) common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsageError;
  }

  try {
    if (simulate->parsed()) return run_simulate(opt);
    if (verify->parsed()) return run_verify(opt);
    const int jobs = resolve_jobs(opt.jobs);
    if (ensemble->parsed()) return run_ensemble(opt, jobs);
    if (converge->parsed()) return run_converge(opt, jobs);
    if (uniqueness->parsed()) {
      const RunConfig c = load(opt);
      uniqueness_regime(c.d, c.r, c.mu, c.beta);
      return run_uniqueness(opt, jobs);
    }
  } catch (const ConfigError& e) {
    std::cerr << "scbf: config: " << e.what() << '\n';
    return kUsageError;
  } catch (const RegimeRefused& e) {
    std::cerr << "scbf: uniqueness refused: " << e.what() << '\n';
    return kUsageError;
  } catch (const CLI::Error& e) {
    std::cerr << "scbf: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "scbf: invalid argument: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "scbf: error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}
