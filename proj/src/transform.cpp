#include "scbf/transform.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

namespace scbf {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// Plans are never destroyed; there is one per (d, N, sign) for the process.
fftw_plan cached_plan(int d, int n, int sign) {
  static std::map<std::tuple<int, int, int>, fftw_plan> plans;
  std::lock_guard lock(plan_mutex());
  auto key = std::make_tuple(d, n, sign);
  if (auto it = plans.find(key); it != plans.end()) return it->second;
  std::size_t total = 1;
  int dims[3] = {n, n, n};
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  auto* scratch = fftw_alloc_complex(total);
  fftw_plan plan = fftw_plan_dft(d, dims, scratch, scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(scratch);
  if (!plan) throw std::runtime_error("FFTW planning failed");
  plans.emplace(key, plan);
  return plan;
}

std::vector<Complex>& thread_buffer(std::size_t size) {
  thread_local std::vector<Complex> buf;
  buf.assign(size, Complex{});
  return buf;
}

}  // namespace

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

int padded_grid(const Basis& basis, double factor) {
  const int k = basis.max_component();
  const int need = static_cast<int>(std::ceil(factor * 2.0 * k - 1e-12)) + 1;
  return std::max(2, next_pow2(need));
}

Collocation::Collocation(BasisPtr basis, int grid) : basis_(std::move(basis)), grid_(grid) {
  const int d = basis_->dim();
  if (grid_ <= 2 * basis_->max_component() || grid_ < 2) {
    throw std::invalid_argument("grid size " + std::to_string(grid_) +
                                " too small for cutoff " + std::to_string(basis_->cutoff()) +
                                " (need N > " + std::to_string(2 * basis_->max_component()) + ")");
  }
  points_ = 1;
  for (int i = 0; i < d; ++i) points_ *= static_cast<std::size_t>(grid_);
  const double two_pi = 2.0 * std::numbers::pi;
  weight_ = std::pow(two_pi / grid_, d);
  synth_scale_ = std::pow(two_pi, -0.5 * d);
  analysis_scale_ = std::pow(two_pi, 0.5 * d) / static_cast<double>(points_);
  index_.resize(basis_->wavevector_count());
  for (std::size_t w = 0; w < index_.size(); ++w) {
    const auto& k = basis_->wavevector(w).k;
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) {
      const int j = ((k[i] % grid_) + grid_) % grid_;
      idx = idx * grid_ + static_cast<std::size_t>(j);
    }
    index_[w] = idx;
  }
  forward_ = cached_plan(d, grid_, FFTW_FORWARD);
  backward_ = cached_plan(d, grid_, FFTW_BACKWARD);
}

void Collocation::execute(std::vector<Complex>& buffer, int sign) const {
  auto plan = static_cast<fftw_plan>(sign == FFTW_FORWARD ? forward_ : backward_);
  auto* data = reinterpret_cast<fftw_complex*>(buffer.data());
  fftw_execute_dft(plan, data, data);
}

void Collocation::synthesize(std::span<const Complex> f, std::span<double> out) const {
  auto& buf = thread_buffer(points_);
  for (std::size_t w = 0; w < index_.size(); ++w) buf[index_[w]] = f[w];
  execute(buf, FFTW_BACKWARD);
  for (std::size_t i = 0; i < points_; ++i) out[i] = synth_scale_ * buf[i].real();
}

void Collocation::synthesize_pair(std::span<const Complex> a, std::span<const Complex> b,
                                  std::span<double> out_a, std::span<double> out_b) const {
  auto& buf = thread_buffer(points_);
  const Complex i_unit{0.0, 1.0};
  for (std::size_t w = 0; w < index_.size(); ++w) buf[index_[w]] = a[w] + i_unit * b[w];
  execute(buf, FFTW_BACKWARD);
  for (std::size_t i = 0; i < points_; ++i) {
    out_a[i] = synth_scale_ * buf[i].real();
    out_b[i] = synth_scale_ * buf[i].imag();
  }
}

void Collocation::analyze(std::span<const double> values, std::span<Complex> out) const {
  auto& buf = thread_buffer(points_);
  for (std::size_t i = 0; i < points_; ++i) buf[i] = values[i];
  execute(buf, FFTW_FORWARD);
  for (std::size_t w = 0; w < index_.size(); ++w) out[w] = analysis_scale_ * buf[index_[w]];
}

void Collocation::analyze_pair(std::span<const double> a, std::span<const double> b,
                               std::span<Complex> out_a, std::span<Complex> out_b) const {
  auto& buf = thread_buffer(points_);
  for (std::size_t i = 0; i < points_; ++i) buf[i] = Complex{a[i], b[i]};
  execute(buf, FFTW_FORWARD);
  const Complex half_i{0.0, 0.5};
  for (std::size_t w = 0; w < index_.size(); ++w) {
    const Complex x = buf[index_[w]];
    const Complex xc = std::conj(buf[index_[basis_->conjugate(w)]]);
    out_a[w] = analysis_scale_ * 0.5 * (x + xc);
    out_b[w] = analysis_scale_ * (-half_i) * (x - xc);
  }
}

PhysicalField Collocation::evaluate(const VectorSpectrum& f) const {
  const int d = basis_->dim();
  PhysicalField out{d, grid_, std::vector<double>(d * points_)};
  std::vector<Complex> ca(index_.size()), cb(index_.size());
  int c = 0;
  for (; c + 1 < d; c += 2) {
    for (std::size_t w = 0; w < index_.size(); ++w) {
      ca[w] = f.coeffs[w][c];
      cb[w] = f.coeffs[w][c + 1];
    }
    synthesize_pair(ca, cb, out.component(c), out.component(c + 1));
  }
  if (c < d) {
    for (std::size_t w = 0; w < index_.size(); ++w) ca[w] = f.coeffs[w][c];
    synthesize(ca, out.component(c));
  }
  return out;
}

PhysicalField Collocation::evaluate(const SpectralField& u) const {
  return evaluate(to_vector_spectrum(u));
}

VectorSpectrum Collocation::analyze_vector(const PhysicalField& f) const {
  const int d = basis_->dim();
  VectorSpectrum out(basis_);
  std::vector<Complex> ca(index_.size()), cb(index_.size());
  int c = 0;
  for (; c + 1 < d; c += 2) {
    analyze_pair(f.component(c), f.component(c + 1), ca, cb);
    for (std::size_t w = 0; w < index_.size(); ++w) {
      out.coeffs[w][c] = ca[w];
      out.coeffs[w][c + 1] = cb[w];
    }
  }
  if (c < d) {
    analyze(f.component(c), ca);
    for (std::size_t w = 0; w < index_.size(); ++w) out.coeffs[w][c] = ca[w];
  }
  return out;
}

SpectralField Collocation::project(const PhysicalField& f) const {
  return leray_project(analyze_vector(f));
}

std::shared_ptr<const Collocation> shared_collocation(const BasisPtr& basis, int grid) {
  static std::mutex m;
  static std::map<std::pair<const Basis*, int>, std::shared_ptr<const Collocation>> cache;
  std::lock_guard lock(m);
  auto key = std::make_pair(basis.get(), grid);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto c = std::make_shared<const Collocation>(basis, grid);
  cache.emplace(key, c);
  return c;
}

PhysicalField to_physical(const SpectralField& u, int grid) {
  return Collocation(u.basis, grid).evaluate(u);
}

SpectralField to_spectral(const PhysicalField& f, const BasisPtr& basis) {
  if (f.dim != basis->dim()) throw std::invalid_argument("to_spectral: dimension mismatch");
  return Collocation(basis, f.grid).project(f);
}

double grid_power_integral(const PhysicalField& f, double p, double weight) {
  const std::size_t n = f.points();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m2 = 0.0;
    for (int c = 0; c < f.dim; ++c) {
      const double v = f.values[c * n + i];
      m2 += v * v;
    }
    s += p == 2.0 ? m2 : std::pow(m2, 0.5 * p);
  }
  return s * weight;
}

}  // namespace scbf
