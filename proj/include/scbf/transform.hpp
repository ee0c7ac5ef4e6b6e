#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "scbf/spectral_basis.hpp"

namespace scbf {

/// Smallest power of two >= n.
int next_pow2(int n);

/// Smallest power-of-two grid with N >= factor * 2K + 1, K the largest
/// wavevector component. factor 1 is the plain resolution requirement N > 2K;
/// factor (p + 1) / 2 makes products of p band-limited factors alias-free
/// after truncation to the basis (3/2 for quadratic terms).
int padded_grid(const Basis& basis, double factor);

/// Spectral <-> collocation machinery for one (basis, N) pair. FFTW plans are
/// created once per (d, N) and shared; execution is reentrant.
class Collocation {
 public:
  /// Throws std::invalid_argument when N cannot resolve every basis mode.
  Collocation(BasisPtr basis, int grid);

  const Basis& basis() const { return *basis_; }
  int grid() const { return grid_; }
  std::size_t points() const { return points_; }
  /// Quadrature weight (2 pi / N)^d per grid point.
  double weight() const { return weight_; }

  /// Samples sum_k F(k) e^{ik.x} / (2 pi)^{d/2}, with F(k) the given per
  /// wavevector scalar, into `out` (N^d reals). The caller guarantees the
  /// Hermitian symmetry that makes the result real.
  void synthesize(std::span<const Complex> per_wavevector, std::span<double> out) const;

  /// Two real fields from two Hermitian spectra in one complex transform.
  void synthesize_pair(std::span<const Complex> a, std::span<const Complex> b,
                       std::span<double> out_a, std::span<double> out_b) const;

  /// Normalized Fourier coefficient int f e^{-ik.x} / (2 pi)^{d/2} dx of real
  /// grid data, by trapezoidal quadrature, at each basis wavevector.
  void analyze(std::span<const double> values, std::span<Complex> per_wavevector) const;

  /// Two real fields analyzed in one complex transform.
  void analyze_pair(std::span<const double> a, std::span<const double> b,
                    std::span<Complex> out_a, std::span<Complex> out_b) const;

  /// Full field: all d components of u on the grid.
  PhysicalField evaluate(const SpectralField& u) const;
  /// All d components of a vector spectrum on the grid.
  PhysicalField evaluate(const VectorSpectrum& f) const;
  /// Leray-projected coefficients of a physical vector field.
  SpectralField project(const PhysicalField& f) const;
  VectorSpectrum analyze_vector(const PhysicalField& f) const;

  /// Flat grid index of wavevector w (k mod N, row-major).
  std::size_t grid_index(std::size_t w) const { return index_[w]; }

 private:
  void execute(std::vector<Complex>& buffer, int sign) const;

  BasisPtr basis_;
  int grid_ = 0;
  std::size_t points_ = 0;
  double weight_ = 0.0;
  double synth_scale_ = 0.0;
  double analysis_scale_ = 0.0;
  std::vector<std::size_t> index_;
  void* forward_ = nullptr;
  void* backward_ = nullptr;
};

/// Process-wide cache of collocation objects keyed by (basis, N).
std::shared_ptr<const Collocation> shared_collocation(const BasisPtr& basis, int grid);

/// to_physical: samples u on an N^d grid. Throws std::invalid_argument when
/// N <= 2K.
PhysicalField to_physical(const SpectralField& u, int grid);
/// to_spectral: basis coefficients of a physical field (Leray-projected).
SpectralField to_spectral(const PhysicalField& f, const BasisPtr& basis);

/// sum_x w |f(x)|^p over the grid, |.| the Euclidean norm of the d-vector.
double grid_power_integral(const PhysicalField& f, double p, double weight);

}  // namespace scbf
