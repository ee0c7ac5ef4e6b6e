#include "scbf/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace scbf {

ConfigError::ConfigError(Kind k, int l, std::string f, const std::string& message)
    : std::runtime_error(message), kind(k), line(l), field(std::move(f)) {}

namespace {

using Kind = ConfigError::Kind;

std::string where(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

class Parser {
 public:
  Parser(const YAML::Node& node, int line, std::string key) : node_(node), line_(line), key_(std::move(key)) {}

  template <class T>
  T scalar(const char* what) const {
    if (!node_.IsScalar()) mismatch(what);
    try {
      return node_.as<T>();
    } catch (const YAML::BadConversion&) {
      mismatch(what);
    }
  }

  std::vector<int> int_list() const {
    if (!node_.IsSequence()) mismatch("a list of integers");
    std::vector<int> out;
    for (const auto& item : node_) {
      try {
        out.push_back(item.as<int>());
      } catch (const YAML::BadConversion&) {
        mismatch("a list of integers");
      }
    }
    return out;
  }

 private:
  [[noreturn]] void mismatch(const char* what) const {
    std::string got;
    if (node_.IsScalar()) got = "'" + node_.Scalar() + "'";
    else if (node_.IsSequence()) got = "a list";
    else if (node_.IsMap()) got = "a mapping";
    else got = "nothing";
    throw ConfigError(Kind::type_mismatch, line_, key_,
                      where(line_) + key_ + ": type mismatch: expected " + what + ", got " + got);
  }

  const YAML::Node& node_;
  int line_;
  std::string key_;
};

using Setter = std::function<void(RunConfig&, const Parser&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const char* key, double RunConfig::*field) {
      t[key] = [field](RunConfig& c, const Parser& p) { c.*field = p.scalar<double>("a number"); };
    };
    auto integer = [&t](const char* key, int RunConfig::*field) {
      t[key] = [field](RunConfig& c, const Parser& p) { c.*field = p.scalar<int>("an integer"); };
    };
    auto count = [&t](const char* key, std::size_t RunConfig::*field) {
      t[key] = [field](RunConfig& c, const Parser& p) {
        c.*field = static_cast<std::size_t>(p.scalar<unsigned long long>("a non-negative integer"));
      };
    };
    auto text = [&t](const char* key, std::string RunConfig::*field) {
      t[key] = [field](RunConfig& c, const Parser& p) { c.*field = p.scalar<std::string>("a string"); };
    };
    auto flag = [&t](const char* key, bool RunConfig::*field) {
      t[key] = [field](RunConfig& c, const Parser& p) { c.*field = p.scalar<bool>("true or false"); };
    };
    auto list = [&t](const char* key, std::vector<int> RunConfig::*field) {
      t[key] = [field](RunConfig& c, const Parser& p) { c.*field = p.int_list(); };
    };
    integer("d", &RunConfig::d);
    integer("n", &RunConfig::n);
    real("r", &RunConfig::r);
    real("mu", &RunConfig::mu);
    real("beta", &RunConfig::beta);
    text("dealias", &RunConfig::dealias);
    real("padding", &RunConfig::padding);
    real("T", &RunConfig::T);
    real("dt", &RunConfig::dt);
    real("output_dt", &RunConfig::output_dt);
    real("noise_dt", &RunConfig::noise_dt);
    text("scheme", &RunConfig::scheme);
    flag("taming", &RunConfig::taming);
    real("guard", &RunConfig::guard);
    text("initial", &RunConfig::initial);
    real("initial_scale", &RunConfig::initial_scale);
    real("q_c", &RunConfig::q_c);
    real("q_s", &RunConfig::q_s);
    text("sigma", &RunConfig::sigma);
    real("sigma_a", &RunConfig::sigma_a);
    real("sigma_rho", &RunConfig::sigma_rho);
    real("jump_rate", &RunConfig::jump_rate);
    text("mark_law", &RunConfig::mark_law);
    real("mark_a", &RunConfig::mark_a);
    real("mark_b", &RunConfig::mark_b);
    real("gamma_c0", &RunConfig::gamma_c0);
    real("gamma_c1", &RunConfig::gamma_c1);
    text("gamma_direction", &RunConfig::gamma_direction);
    t["seed"] = [](RunConfig& c, const Parser& p) { c.seed = p.scalar<std::uint64_t>("a non-negative integer"); };
    count("ensemble", &RunConfig::ensemble);
    count("verify_samples", &RunConfig::verify_samples);
    flag("uniqueness", &RunConfig::uniqueness);
    real("delta", &RunConfig::delta);
    real("envelope_tol", &RunConfig::envelope_tol);
    list("cutoffs", &RunConfig::cutoffs);
    list("dt_factors", &RunConfig::dt_factors);
    integer("dt_reference_factor", &RunConfig::dt_reference_factor);
    real("min_rate", &RunConfig::min_rate);
    real("min_dt_order", &RunConfig::min_dt_order);
    return t;
  }();
  return table;
}

bool is_multiple(double big, double small) {
  const double q = big / small;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q);
}

class Validator {
 public:
  explicit Validator(const std::map<std::string, int>& lines) : lines_(lines) {}

  void require(bool ok, const std::string& field, const std::string& rule, const std::string& got = "") const {
    if (ok) return;
    const auto it = lines_.find(field);
    const int line = it == lines_.end() ? 0 : it->second;
    std::string msg = where(line) + field + ": constraint violated: " + rule;
    if (!got.empty()) msg += " (got " + got + ")";
    throw ConfigError(Kind::constraint, line, field, msg);
  }

 private:
  const std::map<std::string, int>& lines_;
};

std::string num(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

void validate(const RunConfig& c, const std::map<std::string, int>& lines) {
  const Validator v(lines);
  v.require(c.d == 2 || c.d == 3, "d", "d in {2, 3}", num(c.d));
  v.require(c.n >= 2, "n", "n >= 2", num(c.n));
  v.require(c.r >= 1.0, "r", "r >= 1", num(c.r));
  v.require(c.mu > 0.0, "mu", "μ > 0", num(c.mu));
  v.require(c.beta > 0.0, "beta", "β > 0", num(c.beta));
  v.require(c.dealias == "padded" || c.dealias == "exact", "dealias", "one of padded, exact", c.dealias);
  v.require(c.padding >= 1.5, "padding", "padding >= 3/2", num(c.padding));
  v.require(c.T >= 0.0, "T", "T >= 0", num(c.T));
  v.require(c.dt > 0.0, "dt", "dt > 0", num(c.dt));
  v.require(c.T == 0.0 || is_multiple(c.T, c.dt), "dt", "T an integer multiple of dt", num(c.dt));
  v.require(c.output_dt >= 0.0, "output_dt", "output_dt >= 0", num(c.output_dt));
  v.require(c.noise_dt >= 0.0, "noise_dt", "noise_dt >= 0", num(c.noise_dt));
  v.require(c.noise_dt == 0.0 || is_multiple(c.dt, c.noise_dt), "noise_dt", "dt an integer multiple of noise_dt",
            num(c.noise_dt));
  v.require(c.scheme == "tamed" || c.scheme == "exponential", "scheme", "one of tamed, exponential", c.scheme);
  v.require(c.guard >= 0.0, "guard", "guard >= 0", num(c.guard));
  const bool preset = c.initial == "zero" || c.initial == "lowest" || c.initial == "taylor-green" ||
                      c.initial == "smooth-random" || (c.initial.rfind("file:", 0) == 0 && c.initial.size() > 5);
  v.require(preset, "initial", "one of zero, lowest, taylor-green, smooth-random, file:<path>", c.initial);
  v.require(c.initial_scale >= 0.0, "initial_scale", "initial_scale >= 0", num(c.initial_scale));
  v.require(c.q_c > 0.0, "q_c", "q_c > 0", num(c.q_c));
  v.require(2.0 * c.q_s > c.d, "q_s", "2 q_s > d (trace-class Q)", num(c.q_s));
  v.require(c.sigma == "none" || c.sigma == "additive" || c.sigma == "bounded-multiplicative", "sigma",
            "one of none, additive, bounded-multiplicative", c.sigma);
  v.require(c.sigma_a >= 0.0, "sigma_a", "sigma_a >= 0", num(c.sigma_a));
  v.require(c.sigma_rho >= 0.0, "sigma_rho", "sigma_rho >= 0", num(c.sigma_rho));
  v.require(c.jump_rate >= 0.0, "jump_rate", "jump_rate >= 0", num(c.jump_rate));
  v.require(c.mark_law == "uniform" || c.mark_law == "gaussian", "mark_law", "one of uniform, gaussian", c.mark_law);
  if (c.mark_law == "uniform") v.require(c.mark_a < c.mark_b, "mark_b", "mark_a < mark_b", num(c.mark_b));
  else v.require(c.mark_b > 0.0, "mark_b", "mark_b > 0 (standard deviation)", num(c.mark_b));
  v.require(c.gamma_direction == "lowest" || c.gamma_direction == "taylor-green", "gamma_direction",
            "one of lowest, taylor-green", c.gamma_direction);
  v.require(c.ensemble >= 1, "ensemble", "ensemble >= 1", num(double(c.ensemble)));
  v.require(c.verify_samples >= 1, "verify_samples", "verify_samples >= 1", num(double(c.verify_samples)));
  v.require(c.delta >= 0.0, "delta", "delta >= 0", num(c.delta));
  v.require(c.envelope_tol >= 0.0, "envelope_tol", "envelope_tol >= 0", num(c.envelope_tol));
  v.require(c.cutoffs.size() >= 2, "cutoffs", "at least two cutoffs");
  for (std::size_t i = 0; i < c.cutoffs.size(); ++i) {
    v.require(c.cutoffs[i] >= 2, "cutoffs", "every cutoff >= 2", num(c.cutoffs[i]));
    if (i > 0) v.require(c.cutoffs[i] > c.cutoffs[i - 1], "cutoffs", "strictly increasing");
  }
  v.require(c.dt_reference_factor >= 1, "dt_reference_factor", "dt_reference_factor >= 1",
            num(c.dt_reference_factor));
  v.require(!c.dt_factors.empty(), "dt_factors", "at least one factor");
  for (int f : c.dt_factors) {
    v.require(f >= 1 && c.dt_reference_factor % f == 0, "dt_factors",
              "every factor >= 1 and dividing dt_reference_factor", num(f));
  }
  if (c.uniqueness) {
    try {
      uniqueness_regime(c.d, c.r, c.mu, c.beta);
    } catch (const RegimeRefused& e) {
      v.require(false, "r", std::string("uniqueness regime: ") + e.what());
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    const int line = e.mark.line >= 0 ? e.mark.line + 1 : 0;
    throw ConfigError(Kind::syntax, line, "", where(line) + "syntax error: " + e.msg);
  }
  RunConfig c;
  std::map<std::string, int> lines;
  if (root.IsNull()) {
    validate(c, lines);
    return c;
  }
  if (!root.IsMap()) throw ConfigError(Kind::syntax, 1, "", "line 1: syntax error: expected key: value pairs");
  const auto& table = setters();
  for (const auto& kv : root) {
    const int line = kv.first.Mark().line + 1;
    const std::string key = kv.first.as<std::string>();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(Kind::unknown_key, line, key, where(line) + key + ": unknown key");
    lines[key] = line;
    it->second(c, Parser(kv.second, line, key));
  }
  validate(c, lines);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::stringstream s;
  s << f.rdbuf();
  return parse_config(s.str());
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"d", c.d},
          {"n", c.n},
          {"r", c.r},
          {"mu", c.mu},
          {"beta", c.beta},
          {"dealias", c.dealias},
          {"padding", c.padding},
          {"T", c.T},
          {"dt", c.dt},
          {"output_dt", c.output_dt},
          {"noise_dt", c.noise_dt},
          {"scheme", c.scheme},
          {"taming", c.taming},
          {"guard", c.guard},
          {"initial", c.initial},
          {"initial_scale", c.initial_scale},
          {"q_c", c.q_c},
          {"q_s", c.q_s},
          {"sigma", c.sigma},
          {"sigma_a", c.sigma_a},
          {"sigma_rho", c.sigma_rho},
          {"jump_rate", c.jump_rate},
          {"mark_law", c.mark_law},
          {"mark_a", c.mark_a},
          {"mark_b", c.mark_b},
          {"gamma_c0", c.gamma_c0},
          {"gamma_c1", c.gamma_c1},
          {"gamma_direction", c.gamma_direction},
          {"seed", c.seed},
          {"ensemble", c.ensemble},
          {"verify_samples", c.verify_samples},
          {"uniqueness", c.uniqueness},
          {"delta", c.delta},
          {"envelope_tol", c.envelope_tol},
          {"cutoffs", c.cutoffs},
          {"dt_factors", c.dt_factors},
          {"dt_reference_factor", c.dt_reference_factor},
          {"min_rate", c.min_rate},
          {"min_dt_order", c.min_dt_order}};
}

Model build_model(const RunConfig& c, std::optional<int> cutoff) {
  Model m;
  m.basis = Basis::build(c.d, cutoff.value_or(c.n));
  m.ops.r = c.r;
  m.ops.mu = c.mu;
  m.ops.beta = c.beta;
  m.ops.dealias = c.dealias == "exact" ? Dealias::exact : Dealias::padded;
  m.ops.padding = c.padding;
  m.q = {c.q_c, c.q_s};
  if (c.sigma == "none") m.sigma.kind = SigmaFamily::Kind::none;
  else if (c.sigma == "additive") m.sigma.kind = SigmaFamily::Kind::additive;
  else m.sigma.kind = SigmaFamily::Kind::bounded_multiplicative;
  m.sigma.amplitude = c.sigma_a;
  m.sigma.rho = c.sigma_rho;
  m.jumps.rate = c.jump_rate;
  m.jumps.marks.kind = c.mark_law == "gaussian" ? MarkLaw::Kind::gaussian : MarkLaw::Kind::uniform;
  m.jumps.marks.a = c.mark_a;
  m.jumps.marks.b = c.mark_b;
  m.gamma.c0 = c.gamma_c0;
  m.gamma.c1 = c.gamma_c1;
  m.gamma.direction = direction_preset(m.basis, c.gamma_direction);
  return m;
}

PathConfig make_path_config(const RunConfig& c, std::optional<int> cutoff) {
  PathConfig p;
  p.model = build_model(c, cutoff);
  p.scheme.kind = c.scheme == "exponential" ? SchemeKind::exponential_tamed : SchemeKind::tamed_explicit;
  p.scheme.dt = c.dt;
  p.scheme.taming = c.taming;
  p.scheme.guard = c.guard;
  p.horizon = c.T;
  p.output_dt = c.output_dt;
  p.noise_dt = c.noise_dt;
  p.seed = c.seed;
  return p;
}

namespace {

SpectralField smooth_random(const BasisPtr& basis, std::uint64_t seed, std::uint64_t trajectory, double scale) {
  SpectralField u(basis);
  for (std::size_t w = 0; w < basis->wavevector_count(); ++w) {
    const WaveVector& k = basis->wavevector(w);
    if (!k.canonical()) continue;
    const double amp = scale * std::exp(-k.norm2() / 8.0) / std::sqrt(2.0);
    for (int p = 0; p < basis->polarizations(); ++p) {
      const GaussianPair g = keyed_gaussian_pair(
          hash_words({seed, trajectory, static_cast<std::uint64_t>(Channel::initial), std::uint64_t(std::int64_t(k.k[0])),
                      std::uint64_t(std::int64_t(k.k[1])), std::uint64_t(std::int64_t(k.k[2])), std::uint64_t(p)}));
      const Complex c{amp * g.first, amp * g.second};
      u[basis->mode(w, p)] = c;
      u[basis->mode(basis->conjugate(w), p)] = std::conj(c);
    }
  }
  return u;
}

}  // namespace

SpectralField initial_state(const RunConfig& c, const BasisPtr& basis, std::uint64_t trajectory) {
  if (c.initial == "zero") return SpectralField(basis);
  if (c.initial == "lowest" || c.initial == "taylor-green") {
    return c.initial_scale * direction_preset(basis, c.initial);
  }
  if (c.initial == "smooth-random") return smooth_random(basis, c.seed, trajectory, c.initial_scale);
  if (c.initial.rfind("file:", 0) == 0) return read_coefficient_file(c.initial.substr(5), basis);
  throw std::invalid_argument("initial: unknown preset " + c.initial);
}

InitialSampler initial_sampler(const RunConfig& c, const BasisPtr& basis) {
  if (c.initial.rfind("file:", 0) == 0) {
    const SpectralField u = initial_state(c, basis);
    return [u](std::uint64_t) { return u; };
  }
  return [c, basis](std::uint64_t trajectory) { return initial_state(c, basis, trajectory); };
}

SpectralField read_coefficient_file(const std::string& path, const BasisPtr& basis) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open coefficient file " + path);
  SpectralField u(basis);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream s(line);
    std::vector<double> vals;
    double x;
    while (s >> x) vals.push_back(x);
    if (!s.eof()) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected numbers");
    if (vals.empty()) continue;
    const std::size_t want = static_cast<std::size_t>(basis->dim()) + 3;
    if (vals.size() != want) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(want) + " columns");
    }
    WaveVector k;
    for (int i = 0; i < basis->dim(); ++i) k.k[i] = static_cast<int>(vals[i]);
    const int p = static_cast<int>(vals[basis->dim()]);
    if (p < 0 || p >= basis->polarizations()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": polarization out of range");
    }
    const auto w = basis->find(k);
    if (!w) continue;
    const Complex c{vals[want - 2], vals[want - 1]};
    u[basis->mode(*w, p)] = c;
    u[basis->mode(basis->conjugate(*w), p)] = std::conj(c);
  }
  return u;
}

}  // namespace scbf
