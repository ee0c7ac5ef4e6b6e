#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scbf/rng.hpp"
#include "scbf/spectral_basis.hpp"

namespace scbf {

/// Q-Wiener covariance eigenvalues mu_k = c |k|^{-2s}.
struct QSpectrum {
  double c = 1.0;
  double s = 2.0;

  double weight(int k2) const;
  /// Tr Q restricted to the basis: sum over every real degree of freedom.
  double trace(const Basis& basis) const;
  /// Throws std::invalid_argument unless c > 0 and 2s > d.
  void validate(int d) const;
};

/// Law of a scalar jump mark z; the mark map is h(z) = z.
struct MarkLaw {
  enum class Kind { uniform, gaussian };
  Kind kind = Kind::uniform;
  double a = -1.0;  // uniform: lower bound; gaussian: mean
  double b = 1.0;   // uniform: upper bound; gaussian: standard deviation

  double sample(CounterStream& rng) const;
  /// E[z^p] for p in {1, 2, 4}.
  double moment(int p) const;
};

/// Compound Poisson jumps with total intensity lambda(Z) = rate.
struct JumpSpec {
  double rate = 0.0;
  MarkLaw marks;

  /// int h(z)^p lambda(dz) = rate * E[z^p].
  double m1() const { return rate * marks.moment(1); }
  double m2() const { return rate * marks.moment(2); }
  double m4() const { return rate * marks.moment(4); }
};

/// sigma(t, u) e_k = a (1 + psi(||u||_H)) e_k with psi(x) = rho x / (1 + x)
/// for the bounded-multiplicative kind and psi = 0 for the additive kind.
struct SigmaFamily {
  enum class Kind { none, additive, bounded_multiplicative };
  Kind kind = Kind::none;
  double amplitude = 0.0;
  double rho = 0.0;

  double factor(double u_norm) const;
  /// ||sigma(u)||_{L_Q}^2 = a^2 (1 + psi)^2 Tr Q.
  double lq_norm2(double u_norm, double trace_q) const;
};

/// gamma(t, u, z) = G(u) h(z) g with G(u) = c0 + c1 ||u||_H / (1 + ||u||_H)
/// and g a unit-norm divergence-free field.
struct GammaFamily {
  double c0 = 0.0;
  double c1 = 0.0;
  SpectralField direction;

  double amplitude(double u_norm) const;
  bool active() const { return c0 != 0.0 || c1 != 0.0; }
};

struct Jump {
  double time = 0.0;
  double mark = 0.0;
};

/// Everything random a trajectory consumed, in consumption order: one
/// Wiener increment per integration substep (flattened, basis order) and the
/// jump times and marks over [0, T].
struct NoiseRecord {
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  std::size_t modes = 0;
  std::vector<Complex> increments;
  std::vector<double> jump_times;
  std::vector<double> marks;

  std::size_t substeps() const { return modes ? increments.size() / modes : 0; }
  bool operator==(const NoiseRecord&) const = default;
};

/// Mode-keyed Brownian increments. The increment of mode (k, p) over fine
/// step j depends only on (seed, trajectory, k, p, j), so smaller bases see a
/// prefix of larger ones and coarse steps are sums of fine steps.
class WienerSource {
 public:
  WienerSource(BasisPtr basis, QSpectrum q, std::uint64_t seed, std::uint64_t trajectory,
               double fine_dt);

  /// Sum of fine increments [first, first + count).
  SpectralField increment(std::uint64_t first, std::uint64_t count) const;
  /// Independent N(0, Q h) field for Brownian-bridge splitting, keyed by
  /// (step, slot).
  SpectralField bridge_sample(std::uint64_t step, std::uint64_t slot, double h) const;
  double fine_dt() const { return fine_dt_; }

 private:
  SpectralField keyed_field(Channel channel, std::uint64_t a, std::uint64_t b, double variance_scale) const;

  BasisPtr basis_;
  QSpectrum q_;
  std::uint64_t seed_;
  std::uint64_t trajectory_;
  double fine_dt_;
  std::vector<double> sqrt_mu_;
};

/// Centered Gaussian per real degree of freedom with variance mu_k dt,
/// Hermitian symmetric.
SpectralField sample_wiener_increment(const BasisPtr& basis, const QSpectrum& q, double dt,
                                      CounterStream& rng);

/// Poisson(rate T) many jumps, times i.i.d. uniform on [0, T] and sorted,
/// marks i.i.d. from the mark law. Times and marks use separate channels.
std::vector<Jump> sample_jumps(const JumpSpec& spec, double horizon, std::uint64_t seed,
                               std::uint64_t trajectory);

/// sigma(t, u) dW, truncated to the basis.
SpectralField diffusion_increment(const SigmaFamily& f, double t, const SpectralField& u,
                                  const SpectralField& dw);

/// gamma(t, u, z) = G(u) z g.
SpectralField jump_increment(const GammaFamily& f, double t, const SpectralField& u, double z);

/// int_Z gamma(t, u, z) lambda(dz) = G(u) m1 g.
SpectralField compensator_drift(const GammaFamily& f, const JumpSpec& jumps, double t,
                                const SpectralField& u);

/// Hypothesis constants of a (sigma, gamma) pair, p = 2 in the moment clause.
struct HypothesisConstants {
  double k1 = 0.0;
  double k2 = 0.0;
  double lipschitz = 0.0;
};

/// Closed-form constants of the built-in families:
///   K1 = (1 + rho)^2 a^2 Tr Q + (|c0| + |c1|)^2 m2
///   K2 = (|c0| + |c1|)^4 m4
///   L  = rho^2 a^2 Tr Q + c1^2 m2
HypothesisConstants declared_constants(const SigmaFamily& sigma, const GammaFamily& gamma,
                                       const JumpSpec& jumps, double trace_q);

/// Norm-level view of a coefficient pair, as needed by the certification.
struct CoefficientProbe {
  std::function<double(const SpectralField&)> sigma_lq2;
  std::function<double(const SpectralField&, const SpectralField&)> sigma_diff_lq2;
  /// int ||gamma(u, z)||^{p} lambda(dz)
  std::function<double(const SpectralField&, int)> gamma_moment;
  /// int ||gamma(u, z) - gamma(v, z)||^2 lambda(dz)
  std::function<double(const SpectralField&, const SpectralField&)> gamma_diff2;
};

CoefficientProbe probe_for(const SigmaFamily& sigma, const GammaFamily& gamma, const JumpSpec& jumps,
                           double trace_q);

struct CertReport {
  bool passed = true;
  double growth_ratio = 0.0;      // max (||sigma||^2 + int ||gamma||^2) / (1 + ||u||^2)
  double moment_ratio = 0.0;      // max int ||gamma||^4 / (1 + ||u||^4)
  double lipschitz_ratio = 0.0;   // max (diff terms) / ||u - v||^2
  HypothesisConstants declared;
  std::string failing_clause;     // empty when passed
  std::optional<std::pair<double, double>> witness;  // (||u||, ||v||) of the worst pair
};

/// Field pairs with H norms spread over [0, 100].
std::vector<std::pair<SpectralField, SpectralField>> certification_corpus(const BasisPtr& basis,
                                                                          std::size_t pairs,
                                                                          std::uint64_t seed);

/// Scans the corpus; passes iff every empirical ratio is within the declared
/// constant times (1 + 1e-6).
CertReport certify_hypotheses(const CoefficientProbe& probe, const HypothesisConstants& declared,
                              const std::vector<std::pair<SpectralField, SpectralField>>& corpus);

/// Random Hermitian field with independent N(0, scale^2) real degrees of
/// freedom per mode.
SpectralField random_field(const BasisPtr& basis, CounterStream& rng, double scale = 1.0);

/// Unit-H-norm direction fields: "lowest" (polarization 0 at the
/// lexicographically first |k| = 1 wavevector pair) or "taylor-green".
SpectralField direction_preset(const BasisPtr& basis, const std::string& name);

}  // namespace scbf
