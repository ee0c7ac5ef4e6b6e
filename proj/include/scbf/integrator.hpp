#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scbf/noise.hpp"
#include "scbf/operators.hpp"
#include "scbf/spectral_basis.hpp"

namespace scbf {

enum class SchemeKind { tamed_explicit, exponential_tamed };

struct StepScheme {
  SchemeKind kind = SchemeKind::tamed_explicit;
  double dt = 1e-3;
  bool taming = true;
  /// Threshold on ||u||_H; 0 selects 1e6 * max(||u0||_H, 1) at run start.
  double guard = 0.0;

  void validate() const;
};

/// Switches for the deterministic terms; all on for the full system.
struct DriftTerms {
  bool stokes = true;
  bool convection = true;
  bool absorption = true;
};

/// The Galerkin system: basis, deterministic operators and noise coefficients.
struct Model {
  BasisPtr basis;
  OperatorConfig ops;
  DriftTerms terms;
  QSpectrum q;
  SigmaFamily sigma;
  GammaFamily gamma;
  JumpSpec jumps;

  double trace_q() const { return q.trace(*basis); }
  void validate() const;
};

struct SdeState {
  SpectralField u;
  double t = 0.0;
  std::uint64_t steps = 0;
};

/// Noise consumed by one base step. Substep j has length lengths[j] and
/// Wiener increment increments[j]; jumps[j] (if present) fires at its end.
struct StepNoise {
  std::vector<double> lengths;
  std::vector<SpectralField> increments;
  std::vector<Jump> jumps;
};

/// Left-point data of one substep, for energy bookkeeping.
struct SubstepEvent {
  double t = 0.0;
  double h = 0.0;
  const SpectralField* u = nullptr;          // state at the left end
  const SpectralField* sigma_dw = nullptr;   // sigma(u) dW
  const SpectralField* compensator = nullptr;  // G(u) m1 g
  double sigma_lq2 = 0.0;          // ||sigma(u)||_{L_Q}^2
  double absorption_power = 0.0;   // <C(u), u>, zero when absorption is off
  double gamma_intensity = 0.0;    // int ||gamma(u, z)||^2 lambda(dz)
};

struct JumpEvent {
  double t = 0.0;
  double mark = 0.0;
  const SpectralField* u_minus = nullptr;
  const SpectralField* gamma = nullptr;
};

class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void substep(const SubstepEvent&) {}
  virtual void jump(const JumpEvent&) {}
  virtual void output(double /*t*/, const SpectralField& /*u*/) {}
};

struct GuardTripped : std::runtime_error {
  GuardTripped(double time, double norm);
  double time;
  double norm;
};

/// D(u) = -mu A u - B(u, u) - beta C(u), with the Stokes part optional.
struct DriftValue {
  SpectralField value;
  double absorption_power = 0.0;
};
DriftValue drift(const Model& model, const SpectralField& u, bool include_stokes);

/// One base step on the jump-adapted grid. Throws GuardTripped when
/// ||u||_H exceeds the guard, NonFiniteError on non-finite collocation.
SdeState step(const SdeState& s, const StepScheme& scheme, const Model& model, const StepNoise& noise,
              StepObserver* observer = nullptr);

enum class RunStatus { completed, guard_tripped };

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;
  NoiseRecord noise;
  RunStatus status = RunStatus::completed;
  double trip_time = 0.0;

  bool operator==(const Trajectory&) const = default;
};

struct PathConfig {
  Model model;
  StepScheme scheme;
  double horizon = 1.0;
  /// Output spacing; 0 records only t = 0 and t = T.
  double output_dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  /// Fine Wiener step; dt must be an integer multiple. 0 means dt.
  double noise_dt = 0.0;
  bool record_noise = true;

  void validate() const;
};

/// Output times k * output_dt in [0, T], plus T.
std::vector<double> output_times(const PathConfig& cfg);

/// Integrates from u0 over [0, T]. With `replay`, Wiener increments and jumps
/// are taken from the record instead of the keyed streams.
Trajectory simulate_path(const PathConfig& cfg, const SpectralField& u0, StepObserver* observer = nullptr,
                         const NoiseRecord* replay = nullptr);

/// Twin runs on common random numbers.
std::pair<Trajectory, Trajectory> simulate_pair_crn(const PathConfig& cfg, const SpectralField& u0a,
                                                    const SpectralField& u0b);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Work items are
/// independent; callers store results by index, so output order never
/// depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace scbf
