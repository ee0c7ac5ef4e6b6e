#include "scbf/spectral_basis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

#include "scbf/operators.hpp"
#include "scbf/transform.hpp"

namespace scbf {

bool WaveVector::canonical() const {
  for (int c : k) {
    if (c != 0) return c > 0;
  }
  return false;
}

namespace {

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(Vec3 v) {
  const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (double& x : v) x /= len;
  return v;
}

std::array<Vec3, 2> polarizations_for(const WaveVector& wv, int d) {
  const Vec3 k{double(wv.k[0]), double(wv.k[1]), double(wv.k[2])};
  if (d == 2) {
    return {normalized({-k[1], k[0], 0.0}), Vec3{0.0, 0.0, 0.0}};
  }
  // Axis least aligned with k; first one on ties.
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(wv.k[i]) < std::abs(wv.k[axis])) axis = i;
  }
  Vec3 e{0.0, 0.0, 0.0};
  e[axis] = 1.0;
  const Vec3 p1 = normalized(cross(k, e));
  const Vec3 p2 = normalized(cross(k, p1));
  return {p1, p2};
}

}  // namespace

std::shared_ptr<const Basis> Basis::build(int d, int n) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::weak_ptr<const Basis>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{d, n}];
  if (auto hit = slot.lock()) return hit;
  auto b = make(d, n);
  slot = b;
  return b;
}

std::shared_ptr<const Basis> Basis::make(int d, int n) {
  if (d != 2 && d != 3) {
    throw std::invalid_argument("build_basis: dimension must be 2 or 3, got " + std::to_string(d));
  }
  if (n < 1) {
    throw std::invalid_argument("build_basis: cutoff must be >= 1, got " + std::to_string(n));
  }
  auto b = std::shared_ptr<Basis>(new Basis());
  b->dim_ = d;
  b->cutoff_ = n;
  const int kmax = n - 1;
  const int zmax = d == 3 ? kmax : 0;
  for (int a = -kmax; a <= kmax; ++a) {
    for (int c = -kmax; c <= kmax; ++c) {
      for (int e = -zmax; e <= zmax; ++e) {
        WaveVector wv{{a, c, e}};
        const int k2 = wv.norm2();
        if (k2 > 0 && k2 < n * n) b->wavevectors_.push_back(wv);
      }
    }
  }
  std::sort(b->wavevectors_.begin(), b->wavevectors_.end());

  b->box_ = n;
  const long side = 2L * n + 1;
  b->lookup_.assign(d == 3 ? side * side * side : side * side, -1);
  for (std::size_t w = 0; w < b->wavevectors_.size(); ++w) {
    const auto& k = b->wavevectors_[w].k;
    long idx = (k[0] + n) * side + (k[1] + n);
    if (d == 3) idx = idx * side + (k[2] + n);
    b->lookup_[idx] = static_cast<long>(w);
    b->max_component_ = std::max({b->max_component_, std::abs(k[0]), std::abs(k[1]), std::abs(k[2])});
  }

  b->conj_.resize(b->wavevectors_.size());
  b->pol_.resize(2 * b->wavevectors_.size());
  for (std::size_t w = 0; w < b->wavevectors_.size(); ++w) {
    const WaveVector& wv = b->wavevectors_[w];
    b->conj_[w] = *b->find(-wv);
    const WaveVector rep = wv.canonical() ? wv : -wv;
    const auto pols = polarizations_for(rep, d);
    b->pol_[2 * w] = pols[0];
    b->pol_[2 * w + 1] = pols[1];
  }
  return b;
}

std::optional<std::size_t> Basis::find(const WaveVector& wv) const {
  const auto& k = wv.k;
  const int n = box_;
  if (std::abs(k[0]) > n || std::abs(k[1]) > n || std::abs(k[2]) > (dim_ == 3 ? n : 0)) {
    return std::nullopt;
  }
  const long side = 2L * n + 1;
  long idx = (k[0] + n) * side + (k[1] + n);
  if (dim_ == 3) idx = idx * side + (k[2] + n);
  const long w = lookup_[idx];
  if (w < 0) return std::nullopt;
  return static_cast<std::size_t>(w);
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  for (std::size_t m = 0; m < coeffs.size(); ++m) coeffs[m] += o.coeffs[m];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  for (std::size_t m = 0; m < coeffs.size(); ++m) coeffs[m] -= o.coeffs[m];
  return *this;
}

SpectralField& SpectralField::operator*=(double a) {
  for (auto& c : coeffs) c *= a;
  return *this;
}

SpectralField& SpectralField::axpy(double a, const SpectralField& x) {
  for (std::size_t m = 0; m < coeffs.size(); ++m) coeffs[m] += a * x.coeffs[m];
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

std::size_t PhysicalField::points() const {
  std::size_t p = 1;
  for (int i = 0; i < dim; ++i) p *= static_cast<std::size_t>(grid);
  return p;
}

std::span<double> PhysicalField::component(int c) {
  const std::size_t p = points();
  return {values.data() + c * p, p};
}

std::span<const double> PhysicalField::component(int c) const {
  const std::size_t p = points();
  return {values.data() + c * p, p};
}

double inner(const SpectralField& u, const SpectralField& v) {
  double s = 0.0;
  for (std::size_t m = 0; m < u.coeffs.size(); ++m) {
    s += u.coeffs[m].real() * v.coeffs[m].real() + u.coeffs[m].imag() * v.coeffs[m].imag();
  }
  return s;
}

double h_norm2(const SpectralField& u) { return inner(u, u); }
double h_norm(const SpectralField& u) { return std::sqrt(h_norm2(u)); }

double v_norm2(const SpectralField& u) {
  const Basis& b = *u.basis;
  double s = 0.0;
  for (std::size_t m = 0; m < u.coeffs.size(); ++m) {
    s += b.norm2(b.wavevector_of(m)) * std::norm(u.coeffs[m]);
  }
  return s;
}

double dual_v_norm2(const SpectralField& u) {
  const Basis& b = *u.basis;
  double s = 0.0;
  for (std::size_t m = 0; m < u.coeffs.size(); ++m) {
    s += std::norm(u.coeffs[m]) / b.norm2(b.wavevector_of(m));
  }
  return s;
}

VectorSpectrum to_vector_spectrum(const SpectralField& u) {
  const Basis& b = *u.basis;
  VectorSpectrum out(u.basis);
  const int np = b.polarizations();
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    CVec3 v{};
    for (int p = 0; p < np; ++p) {
      const Vec3& e = b.polarization(w, p);
      const Complex c = u.coeffs[b.mode(w, p)];
      for (int i = 0; i < 3; ++i) v[i] += c * e[i];
    }
    out.coeffs[w] = v;
  }
  return out;
}

SpectralField leray_project(const VectorSpectrum& f) {
  const Basis& b = *f.basis;
  SpectralField out(f.basis);
  const int np = b.polarizations();
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    const CVec3& v = f.coeffs[w];
    for (int p = 0; p < np; ++p) {
      const Vec3& e = b.polarization(w, p);
      out.coeffs[b.mode(w, p)] = e[0] * v[0] + e[1] * v[1] + e[2] * v[2];
    }
  }
  return out;
}

double hermitian_defect(const SpectralField& u) {
  const Basis& b = *u.basis;
  double worst = 0.0;
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    const std::size_t cw = b.conjugate(w);
    for (int p = 0; p < b.polarizations(); ++p) {
      worst = std::max(worst, std::abs(u.coeffs[b.mode(cw, p)] - std::conj(u.coeffs[b.mode(w, p)])));
    }
  }
  return worst;
}

double divergence_defect(const SpectralField& u) {
  const VectorSpectrum full = to_vector_spectrum(u);
  const Basis& b = *u.basis;
  double worst = 0.0;
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    const auto& k = b.wavevector(w).k;
    const Complex div = double(k[0]) * full.coeffs[w][0] + double(k[1]) * full.coeffs[w][1] +
                        double(k[2]) * full.coeffs[w][2];
    worst = std::max(worst, std::abs(div));
  }
  return worst;
}

void enforce_hermitian(SpectralField& u) {
  const Basis& b = *u.basis;
  for (std::size_t w = 0; w < b.wavevector_count(); ++w) {
    if (b.wavevector(w).canonical()) continue;
    const std::size_t cw = b.conjugate(w);
    for (int p = 0; p < b.polarizations(); ++p) {
      u.coeffs[b.mode(w, p)] = std::conj(u.coeffs[b.mode(cw, p)]);
    }
  }
}

SpectralField embed(const SpectralField& u, const BasisPtr& target) {
  if (u.basis->dim() != target->dim()) {
    throw std::invalid_argument("embed: dimension mismatch");
  }
  SpectralField out(target);
  const Basis& src = *u.basis;
  for (std::size_t w = 0; w < src.wavevector_count(); ++w) {
    const auto tw = target->find(src.wavevector(w));
    if (!tw) continue;
    for (int p = 0; p < src.polarizations(); ++p) {
      out.coeffs[target->mode(*tw, p)] = u.coeffs[src.mode(w, p)];
    }
  }
  return out;
}

Norms norms(const SpectralField& u, double r) {
  if (r < 1.0) throw std::invalid_argument("norms: exponent r must be >= 1");
  Norms out;
  out.h = h_norm(u);
  out.v = std::sqrt(v_norm2(u));
  out.l_r1 = l_norm(u, r + 1.0, absorption_grid(*u.basis, r));
  return out;
}

}  // namespace scbf
