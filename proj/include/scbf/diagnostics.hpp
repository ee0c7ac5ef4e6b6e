#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scbf/integrator.hpp"
#include "scbf/noise.hpp"
#include "scbf/operators.hpp"

namespace scbf {

/// Outcome of one property check. `worst_margin` is the smallest slack seen
/// (negative means violated); the check passes iff it is >= 0.
struct PropertyReport {
  std::string name;
  std::size_t samples = 0;
  double worst_margin = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::vector<std::pair<std::string, double>> values;
  std::string detail;
};

/// Sample mean with its standard error.
struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;

  double ci95() const { return 1.96 * se; }
};
MeanEstimate estimate_mean(const std::vector<double>& xs);

using InitialSampler = std::function<SpectralField(std::uint64_t trajectory)>;

// ---------------------------------------------------------------- ledger

struct LedgerRow {
  double time = 0.0;
  double energy = 0.0;       // ||u(t)||_H^2
  double diss_v = 0.0;       // 2 mu int ||u||_V^2
  double diss_lr1 = 0.0;     // 2 beta int ||u||_{L^{r+1}}^{r+1}
  double mart_wiener = 0.0;  // 2 int (sigma dW, u)
  double mart_jump = 0.0;    // 2 int int (gamma, u(s-)) dpi~
  double qv_sigma = 0.0;     // int ||sigma||_{L_Q}^2
  double qv_gamma = 0.0;     // sum of ||gamma||^2 over realized jumps
  double residual = 0.0;
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;
  double gamma_intensity = 0.0;   // int int ||gamma||^2 lambda(dz) ds
  std::size_t jumps = 0;
  double max_jump_defect = 0.0;   // relative defect of the jump square-norm identity
};

/// Accumulates the energy identity along a run, left point per substep.
class LedgerObserver : public StepObserver {
 public:
  LedgerObserver(const Model& model, const SpectralField& u0);

  void substep(const SubstepEvent& ev) override;
  void jump(const JumpEvent& ev) override;
  void output(double t, const SpectralField& u) override;

  LedgerRow row(double t, const SpectralField& u) const;
  const EnergyLedger& ledger() const { return ledger_; }

 private:
  const Model& model_;
  double e0_;
  LedgerRow acc_;
  EnergyLedger ledger_;
};

/// Replays the trajectory from its NoiseRecord and evaluates every ledger
/// term at each output time. Throws std::invalid_argument when the record
/// is missing.
EnergyLedger energy_ledger(const Trajectory& tr, const PathConfig& cfg);

/// |residual(T)| of a deterministic run for each dt, and the log-log slope.
struct ResidualStudy {
  std::vector<double> dts;
  std::vector<double> residuals;
  double slope = 0.0;
};
ResidualStudy ledger_residual_study(const PathConfig& cfg, const SpectralField& u0, const std::vector<double>& dts);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------- ensembles

/// Ensemble statistic X = ||u_T||^2 - ||u_0||^2 + dissipation - int ||sigma||^2
/// - int int ||gamma||^2 lambda. The control run uses dt / 2 on the same
/// fine Wiener increments; the bias band is 2 (|mean(X_dt - X_dt/2)| + 3 se).
struct BalanceReport {
  MeanEstimate balance;
  MeanEstimate control_difference;
  double bias_band = 0.0;
  std::size_t tripped = 0;
  bool passed = false;
};
BalanceReport ensemble_energy_balance(const PathConfig& cfg, const InitialSampler& u0, std::size_t m, int jobs);

/// Linear stochastic Stokes sub-case: B and C off, additive noise, zero
/// initial data. Compares E|c_k|^2 at T with a^2 mu_k / (2 mu |k|^2).
struct VarianceReport {
  std::vector<WaveVector> wavevectors;
  std::vector<double> expected;
  std::vector<double> observed;
  std::vector<double> standard_error;
  double worst_z = 0.0;  // max |observed - expected| / se
  std::size_t paths = 0;
  bool passed = false;
};
VarianceReport linear_stokes_variance(const PathConfig& cfg, std::size_t m, int jobs);

struct MomentReport {
  std::size_t ensemble = 0;
  std::size_t tripped = 0;
  MeanEstimate sup_energy;     // E sup ||u||^2
  MeanEstimate v_dissipation;  // mu E int ||u||_V^2
  MeanEstimate lr1_dissipation;  // beta E int ||u||_{L^{r+1}}^{r+1}
  MeanEstimate total;
  MeanEstimate sup_energy_p2;  // E sup ||u||^4
  double initial_energy = 0.0;  // E ||u_0||^2
  double k1 = 0.0;
  double constant = 26.0;
  double bound = 0.0;
  bool passed = false;
};
/// Passes iff the upper end of the 95% interval of `total` is below the
/// bound (2 E||u0||^2 + C K1 T) e^{C K1 T}.
MomentReport moment_bound_check(const PathConfig& cfg, const InitialSampler& u0, std::size_t m, double k1,
                                int jobs);

// ---------------------------------------------------------------- operators

/// Random fields with log-uniform scales in [1e-2, 1e2].
SpectralField corpus_field(const BasisPtr& basis, CounterStream& rng);

/// b(u, v, v) = 0 and b(u, v, w) = -b(u, w, v), relative to the natural scale.
PropertyReport check_trilinear(const BasisPtr& basis, std::size_t triples, std::uint64_t seed, Dealias mode,
                               double tol = 1e-10);
/// <Au, u> = ||u||_V^2.
PropertyReport check_stokes_identity(const BasisPtr& basis, std::size_t count, std::uint64_t seed,
                                     double tol = 1e-12);
/// <C(u), u> computed spectrally equals grid int |u|^{r+1}.
PropertyReport check_absorption_identity(const BasisPtr& basis, double r, std::size_t count, std::uint64_t seed,
                                         double tol = 1e-10);
/// <C(u) - C(v), u - v> against both lower bounds of the monotonicity chain.
PropertyReport check_monotonicity(const BasisPtr& basis, double r, std::size_t pairs, std::uint64_t seed,
                                  double tol = 1e-10);
/// ||B(u)||_{V'} <= ||u||_{L^{r+1}}^{(r+1)/(r-1)} ||u||_H^{(r-3)/(r-1)} for r > 3.
PropertyReport check_convection_bound(const BasisPtr& basis, double r, std::size_t count, std::uint64_t seed,
                                      double tol = 1e-8);
/// ||C(u) - C(v)||_{L^{(r+1)/r}} <= r (||u|| + ||v||)^{r-1} ||u - v|| in L^{r+1}.
PropertyReport check_absorption_lipschitz(const BasisPtr& basis, double r, std::size_t pairs, std::uint64_t seed,
                                          double tol = 1e-8);

// ---------------------------------------------------------------- noise

/// z threshold for `tests` simultaneous two-sided checks whose family-wise
/// false-alarm rate equals that of one 3-standard-error check (Sidak).
/// Equals 3 for a single test.
double family_z_bound(std::size_t tests);

/// Per-coordinate variance of sqrt(2) Re and sqrt(2) Im against mu_k dt, at
/// the family-wise 3-standard-error level, and E||dW||^2 / dt against Tr Q
/// within 3 standard errors.
PropertyReport check_wiener_statistics(const BasisPtr& basis, const QSpectrum& q, double dt, std::size_t draws,
                                       std::uint64_t seed);
/// Mean count within 3 standard errors of rate T and chi-square fit at 1%.
PropertyReport check_poisson_counts(const JumpSpec& spec, double horizon, std::size_t runs, std::uint64_t seed);
/// With u frozen, M = sum gamma(u, z_i) - T G(u) m1 g. E||M||^2 against
/// T G(u)^2 m2 and E(M, phi) against 0, each within 3 standard errors.
PropertyReport check_ito_isometry(const GammaFamily& gamma, const JumpSpec& spec, const SpectralField& u,
                                  double horizon, std::size_t runs, std::uint64_t seed);
PropertyReport check_compensated_mean(const GammaFamily& gamma, const JumpSpec& spec, const SpectralField& u,
                                      const SpectralField& phi, double horizon, std::size_t runs,
                                      std::uint64_t seed);

// ---------------------------------------------------------------- uniqueness

enum class UniquenessWeight { ladyzhenskaya, constant_rate, none };

struct UniquenessRegime {
  UniquenessWeight weight = UniquenessWeight::none;
  double rate = 0.0;  // 2 zeta-hat for the constant-rate weight
  std::string description;
};

struct RegimeRefused : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Weight of the Gronwall envelope for (d, r, mu, beta); throws RegimeRefused
/// outside the uniqueness theorem (d = 3 with r < 3, or r = 3 with 2 beta mu < 1).
UniquenessRegime uniqueness_regime(int d, double r, double mu, double beta);

struct UniquenessReport {
  UniquenessRegime regime;
  PropertyReport zero_separation;
  PropertyReport envelope;
  PropertyReport scaling;
  bool passed = false;
};

/// CRN twins u0 and u0 + delta e over `seeds` trajectories. The envelope
/// e^{-weight(t)} ||z(t)||^2 <= ||z0||^2 e^{L t} (1 + tol) is checked per path
/// when L = 0 and for the ensemble mean otherwise.
UniquenessReport gronwall_uniqueness_test(const PathConfig& cfg, const InitialSampler& u0, double delta,
                                          std::size_t seeds, double lipschitz, double tol, int jobs);

// ---------------------------------------------------------------- convergence

struct ConvergenceReport {
  std::vector<int> cutoffs;
  std::vector<double> sup_differences;       // sup_t ||u_n - u_next||_H per consecutive pair
  std::vector<double> terminal_differences;  // ||u_n(T) - u_next(T)||_H
  double rate = 0.0;                         // -slope of terminal differences against n
  bool monotone = false;
  bool passed = false;
};

/// Runs one path per cutoff; `make_config(n)` supplies the model on the
/// cutoff-n basis and `initial(basis)` the initial state.
ConvergenceReport galerkin_convergence_study(const std::function<PathConfig(int)>& make_config,
                                             const std::function<SpectralField(const BasisPtr&)>& initial,
                                             const std::vector<int>& cutoffs, double min_rate = 1.0);

/// Strong error ||u_dt(T) - u_ref(T)|| (root mean square over paths) with the
/// reference at dt / reference_factor and frozen fine increments.
struct DtStudy {
  std::vector<double> dts;
  std::vector<double> errors;
  double order = 0.0;
};
DtStudy dt_refinement_study(const PathConfig& cfg, const InitialSampler& u0, const std::vector<int>& factors,
                            int reference_factor, std::size_t paths, int jobs);

}  // namespace scbf
