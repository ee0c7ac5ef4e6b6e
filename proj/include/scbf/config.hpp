#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scbf/diagnostics.hpp"
#include "scbf/integrator.hpp"

namespace scbf {

/// Everything one invocation needs. The document is a flat YAML mapping
/// whose keys match the field names below.
struct RunConfig {
  // system
  int d = 2;
  int n = 8;
  double r = 3.0;
  double mu = 1.0;
  double beta = 1.0;
  std::string dealias = "padded";  // padded | exact
  double padding = 1.5;

  // time grid
  double T = 1.0;
  double dt = 1e-3;
  double output_dt = 0.0;
  double noise_dt = 0.0;
  std::string scheme = "tamed";  // tamed | exponential
  bool taming = true;
  double guard = 0.0;

  // initial condition: zero | lowest | taylor-green | smooth-random | file:<path>
  std::string initial = "taylor-green";
  double initial_scale = 1.0;

  // Q-Wiener spectrum mu_k = q_c |k|^{-2 q_s}
  double q_c = 1.0;
  double q_s = 2.0;

  // diffusion coefficient
  std::string sigma = "additive";  // none | additive | bounded-multiplicative
  double sigma_a = 0.1;
  double sigma_rho = 0.0;

  // jumps
  double jump_rate = 0.0;
  std::string mark_law = "uniform";  // uniform | gaussian
  double mark_a = -1.0;
  double mark_b = 1.0;
  double gamma_c0 = 0.0;
  double gamma_c1 = 0.0;
  std::string gamma_direction = "lowest";  // lowest | taylor-green

  // randomness and studies
  std::uint64_t seed = 0;
  std::size_t ensemble = 100;
  std::size_t verify_samples = 1000;
  bool uniqueness = false;
  double delta = 1e-6;
  double envelope_tol = 0.05;
  std::vector<int> cutoffs{4, 8, 16};
  std::vector<int> dt_factors{1, 2, 4, 8};
  int dt_reference_factor = 64;
  double min_rate = 1.0;
  double min_dt_order = 0.4;
};

/// Parse failures. `kind` separates the three diagnostic classes; `line` is
/// 1-based (0 when the failure is not tied to a line).
struct ConfigError : std::runtime_error {
  enum class Kind { syntax, unknown_key, type_mismatch, constraint };
  ConfigError(Kind kind, int line, std::string field, const std::string& message);

  Kind kind;
  int line;
  std::string field;
};

/// Applies defaults for absent keys and validates every field. With
/// `uniqueness: true`, also refuses parameter sets outside the uniqueness
/// regimes.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Full echo, every field included.
nlohmann::json to_json(const RunConfig& c);

/// Model on the cutoff-n basis (the config's n unless overridden).
Model build_model(const RunConfig& c, std::optional<int> cutoff = std::nullopt);
PathConfig make_path_config(const RunConfig& c, std::optional<int> cutoff = std::nullopt);

/// Initial state of trajectory `trajectory` on `basis`. The smooth-random
/// preset keys each wavevector separately, so it agrees across cutoffs.
SpectralField initial_state(const RunConfig& c, const BasisPtr& basis, std::uint64_t trajectory = 0);
InitialSampler initial_sampler(const RunConfig& c, const BasisPtr& basis);

/// Coefficient file: one mode per line, "k1 k2 [k3] p re im", '#' comments.
/// Modes outside the basis are dropped; conjugates are filled in.
SpectralField read_coefficient_file(const std::string& path, const BasisPtr& basis);

}  // namespace scbf
