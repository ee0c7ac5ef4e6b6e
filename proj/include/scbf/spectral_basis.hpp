#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace scbf {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;
using CVec3 = std::array<Complex, 3>;

/// Integer wavevector on the torus [0, 2pi)^d. Unused trailing components are zero.
struct WaveVector {
  std::array<int, 3> k{0, 0, 0};

  int norm2() const { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }
  WaveVector operator-() const { return {{-k[0], -k[1], -k[2]}}; }
  WaveVector operator+(const WaveVector& o) const {
    return {{k[0] + o.k[0], k[1] + o.k[1], k[2] + o.k[2]}};
  }
  bool operator==(const WaveVector&) const = default;
  auto operator<=>(const WaveVector&) const = default;

  // First nonzero component positive. Exactly one of (k, -k) is canonical.
  bool canonical() const;
};

/// Divergence-free Fourier basis: every wavevector with 0 < |k|^2 < n^2 and
/// d - 1 real unit polarizations orthogonal to k.
///
/// Mode m = w * (d - 1) + p addresses polarization p of wavevector w.
/// Wavevectors are sorted lexicographically, so mode order is lexicographic
/// on (k, p). The polarization of -k equals the polarization of k, which makes
/// coeff(-k, p) = conj(coeff(k, p)) the reality condition.
class Basis {
 public:
  /// Throws std::invalid_argument for d outside {2, 3} or n < 1. Equal
  /// (d, n) share one instance while any owner is alive.
  static std::shared_ptr<const Basis> build(int d, int n);

  int dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  int polarizations() const { return dim_ - 1; }
  std::size_t size() const { return wavevectors_.size() * polarizations(); }
  std::size_t wavevector_count() const { return wavevectors_.size(); }
  bool empty() const { return wavevectors_.empty(); }

  const WaveVector& wavevector(std::size_t w) const { return wavevectors_[w]; }
  const Vec3& polarization(std::size_t w, int p) const { return pol_[w * 2 + p]; }
  std::size_t conjugate(std::size_t w) const { return conj_[w]; }
  std::size_t mode(std::size_t w, int p) const { return w * polarizations() + p; }
  std::size_t wavevector_of(std::size_t mode) const { return mode / polarizations(); }
  int norm2(std::size_t w) const { return wavevectors_[w].norm2(); }

  /// Largest |k_i| over all modes; n - 1 for a non-empty basis.
  int max_component() const { return max_component_; }

  std::optional<std::size_t> find(const WaveVector& k) const;

 private:
  Basis() = default;
  static std::shared_ptr<const Basis> make(int d, int n);

  int dim_ = 2;
  int cutoff_ = 1;
  int max_component_ = 0;
  std::vector<WaveVector> wavevectors_;
  std::vector<Vec3> pol_;
  std::vector<std::size_t> conj_;
  // Dense lookup over the box [-n, n]^d, -1 for absent.
  std::vector<long> lookup_;
  int box_ = 0;
};

using BasisPtr = std::shared_ptr<const Basis>;

/// Coefficients of a real, divergence-free field: one complex amplitude per
/// (wavevector, polarization), normalized so that Parseval holds with unit
/// weight: ||u||_H^2 = sum |c|^2.
struct SpectralField {
  BasisPtr basis;
  std::vector<Complex> coeffs;

  SpectralField() = default;
  explicit SpectralField(BasisPtr b) : basis(std::move(b)), coeffs(basis->size()) {}

  std::size_t size() const { return coeffs.size(); }
  Complex& operator[](std::size_t m) { return coeffs[m]; }
  const Complex& operator[](std::size_t m) const { return coeffs[m]; }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double a);
  /// this += a * x
  SpectralField& axpy(double a, const SpectralField& x);

  bool operator==(const SpectralField& o) const { return coeffs == o.coeffs; }
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

/// Full-space vector coefficients per wavevector of an arbitrary (not
/// necessarily solenoidal) real vector field on the same wavevector set.
struct VectorSpectrum {
  BasisPtr basis;
  std::vector<CVec3> coeffs;

  VectorSpectrum() = default;
  explicit VectorSpectrum(BasisPtr b) : basis(std::move(b)), coeffs(basis->wavevector_count()) {}
};

/// Real vector field sampled on an N^d grid, component-major: value of
/// component c at flat grid index i is values[c * N^d + i]. Grid point
/// (j_0, .., j_{d-1}) sits at x = 2 pi j / N; the flat index is row-major.
struct PhysicalField {
  int dim = 2;
  int grid = 0;
  std::vector<double> values;

  std::size_t points() const;
  std::span<double> component(int c);
  std::span<const double> component(int c) const;
};

/// Real inner product (u, v)_H = Re sum conj(u_m) v_m.
double inner(const SpectralField& u, const SpectralField& v);
double h_norm2(const SpectralField& u);
double h_norm(const SpectralField& u);
/// ||u||_V^2 = sum |k|^2 |c|^2.
double v_norm2(const SpectralField& u);
/// Spectral V' norm squared: sum |k|^-2 |c|^2.
double dual_v_norm2(const SpectralField& u);

/// Reconstructs the full vector coefficient U(k) = sum_p c(k,p) e_p(k).
VectorSpectrum to_vector_spectrum(const SpectralField& u);

/// Helmholtz-Hodge projection I - k k^T / |k|^2 per wavevector, expressed in
/// polarization coordinates. The zero mode is not part of the wavevector set.
SpectralField leray_project(const VectorSpectrum& f);

/// max |coeff(-k,p) - conj(coeff(k,p))|
double hermitian_defect(const SpectralField& u);
/// max |k . U(k)| over the reconstructed full coefficients.
double divergence_defect(const SpectralField& u);
/// Overwrites the non-canonical half with conjugates of the canonical half.
void enforce_hermitian(SpectralField& u);

/// Copies coefficients of `u` into `target` by wavevector; modes absent from
/// the target are dropped. Used to compare fields across cutoffs.
SpectralField embed(const SpectralField& u, const BasisPtr& target);

struct Norms {
  double h = 0.0;
  double v = 0.0;
  double l_r1 = 0.0;
};

/// (||u||_H, ||u||_V, ||u||_{L^{r+1}}); the last by collocation quadrature
/// on the absorption grid for exponent r.
Norms norms(const SpectralField& u, double r);

}  // namespace scbf
