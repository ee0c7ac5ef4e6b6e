#pragma once

#include <stdexcept>
#include <vector>

#include "scbf/spectral_basis.hpp"
#include "scbf/transform.hpp"

namespace scbf {

enum class Dealias { exact, padded };

/// Parameters of the deterministic part mu A u + B(u) + beta C(u).
struct OperatorConfig {
  double r = 1.0;      // absorption exponent, >= 1
  double mu = 1.0;     // Brinkman coefficient, > 0
  double beta = 1.0;   // Forchheimer coefficient, > 0
  Dealias dealias = Dealias::padded;
  double padding = 1.5;  // grid factor for the quadratic term, >= 3/2

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

/// Raised when a collocated product is not finite (upstream blow-up).
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact convolution is the default below this cutoff when requested.
inline constexpr int kExactConvolutionMaxCutoff = 8;

int convection_grid(const Basis& basis, double padding = 1.5);
/// Grid for |u|^{r-1} u: factor max(padding, ceil((r + 1) / 2)), alias-free
/// for odd integer r.
int absorption_grid(const Basis& basis, double r, double padding = 1.5);

SpectralField apply_stokes(const SpectralField& u);

/// Pi_n P[(u . grad) v]. Exact mode sums all mode pairs directly; padded
/// mode collocates on an alias-free grid. Both fields must share a basis.
SpectralField apply_convection(const SpectralField& u, const SpectralField& v,
                               const OperatorConfig& cfg);
SpectralField convection_exact(const SpectralField& u, const SpectralField& v);
SpectralField convection_padded(const SpectralField& u, const SpectralField& v, double padding);

/// b(u, v, w) = <B(u, v), w>.
double trilinear(const SpectralField& u, const SpectralField& v, const SpectralField& w,
                 const OperatorConfig& cfg);

struct AbsorptionResult {
  SpectralField value;   // Pi_n P(|u|^{r-1} u)
  double power = 0.0;    // int |u|^{r+1} on the same grid
};

AbsorptionResult absorption_with_power(const SpectralField& u, double r, int grid);
SpectralField apply_absorption(const SpectralField& u, const OperatorConfig& cfg);

/// Pointwise |u|^{r-1} u on the grid, without projection.
PhysicalField absorption_pointwise(const PhysicalField& u, double r);

/// (int |u|^p)^{1/p} by quadrature on an N^d grid.
double l_norm(const SpectralField& u, double p, int grid);

/// Zeroes every coefficient with |k|^2 >= m^2.
SpectralField galerkin_truncate(const SpectralField& u, int m);

/// coeff(k) -> exp(-|k|^2 / n) coeff(k) for |k|^2 < n^2, zero otherwise.
SpectralField smooth_project(const SpectralField& u, int n);

/// Uniformly sampled series. T is double or SpectralField.
template <class T>
struct TimeSeries {
  std::vector<T> values;
  double dt = 0.0;
};

/// The fixed bump zeta(s) = exp(-1 / (1 - s^2)) / Z on (-1, 1), unit mass.
double mollifier(double s);

/// Discrete kernel weights zeta^h(j dt) dt for j = 0..J, normalized so the
/// symmetric extension sums to one.
std::vector<double> mollifier_weights(double h, double dt);

/// int_0^h zeta^h(s) ds on the discrete kernel (trapezoid weight 1/2 at 0).
double mollifier_half_mass(double h, double dt);

/// v^h(t) = int_0^T v(tau) zeta^h(t - tau) d tau by trapezoidal quadrature.
/// Throws std::invalid_argument if h < 2 dt or h >= span.
TimeSeries<double> mollify_time(const TimeSeries<double>& s, double h);
TimeSeries<SpectralField> mollify_time(const TimeSeries<SpectralField>& s, double h);

}  // namespace scbf
