#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "scbf/noise.hpp"
#include "scbf/spectral_basis.hpp"
#include "scbf/transform.hpp"

namespace scbf {
namespace {

// Brute-force count of integer vectors with 0 < |k|^2 < n^2.
std::size_t lattice_count(int d, int n) {
  std::size_t c = 0;
  const int z = d == 3 ? n : 0;
  for (int a = -n; a <= n; ++a)
    for (int b = -n; b <= n; ++b)
      for (int e = -z; e <= z; ++e) {
        const int k2 = a * a + b * b + e * e;
        if (k2 > 0 && k2 < n * n) ++c;
      }
  return c;
}

TEST(Basis, ModeCountsMatchLatticeEnumeration) {
  for (int d : {2, 3}) {
    for (int n : {1, 2, 3, 5, 8}) {
      const BasisPtr b = Basis::build(d, n);
      EXPECT_EQ(b->wavevector_count(), lattice_count(d, n)) << "d=" << d << " n=" << n;
      EXPECT_EQ(b->size(), lattice_count(d, n) * std::size_t(d - 1));
    }
  }
  EXPECT_EQ(Basis::build(2, 2)->size(), 8u);
  EXPECT_EQ(Basis::build(3, 2)->size(), 52u);
}

TEST(Basis, RejectsBadDimensionAndCutoff) {
  EXPECT_THROW(Basis::build(1, 4), std::invalid_argument);
  EXPECT_THROW(Basis::build(4, 4), std::invalid_argument);
  EXPECT_THROW(Basis::build(2, 0), std::invalid_argument);
}

TEST(Basis, PolarizationsOrthonormalAndTransverse) {
  for (int d : {2, 3}) {
    const BasisPtr b = Basis::build(d, 5);
    for (std::size_t w = 0; w < b->wavevector_count(); ++w) {
      const auto& k = b->wavevector(w).k;
      for (int p = 0; p < b->polarizations(); ++p) {
        const Vec3& e = b->polarization(w, p);
        EXPECT_NEAR(e[0] * k[0] + e[1] * k[1] + e[2] * k[2], 0.0, 1e-14);
        for (int q = 0; q < b->polarizations(); ++q) {
          const Vec3& f = b->polarization(w, q);
          EXPECT_NEAR(e[0] * f[0] + e[1] * f[1] + e[2] * f[2], p == q ? 1.0 : 0.0, 1e-14);
        }
      }
      const std::size_t c = b->conjugate(w);
      EXPECT_EQ(b->wavevector(c), -b->wavevector(w));
      EXPECT_EQ(b->polarization(c, 0), b->polarization(w, 0));
      EXPECT_NE(b->wavevector(w).canonical(), b->wavevector(c).canonical());
    }
  }
}

TEST(Basis, ModeOrderIsLexicographic) {
  const BasisPtr b = Basis::build(3, 4);
  for (std::size_t w = 1; w < b->wavevector_count(); ++w) EXPECT_LT(b->wavevector(w - 1), b->wavevector(w));
  for (std::size_t w = 0; w < b->wavevector_count(); ++w) EXPECT_EQ(b->find(b->wavevector(w)), w);
  EXPECT_FALSE(b->find(WaveVector{{4, 0, 0}}).has_value());
  EXPECT_FALSE(b->find(WaveVector{{0, 0, 0}}).has_value());
}

TEST(Field, RandomFieldsAreRealAndSolenoidal) {
  for (int d : {2, 3}) {
    const BasisPtr b = Basis::build(d, 5);
    CounterStream rng(StreamKey{3, 0, Channel::corpus});
    const SpectralField u = random_field(b, rng);
    EXPECT_EQ(hermitian_defect(u), 0.0);
    EXPECT_LT(divergence_defect(u), 1e-13);
  }
}

TEST(Field, ParsevalMatchesGridQuadrature) {
  for (int d : {2, 3}) {
    const BasisPtr b = Basis::build(d, 4);
    CounterStream rng(StreamKey{11, 0, Channel::corpus});
    const SpectralField u = random_field(b, rng);
    const int grid = padded_grid(*b, 1.0);
    const PhysicalField f = to_physical(u, grid);
    double sum = 0.0;
    for (double v : f.values) sum += v * v;
    const double weight = std::pow(2.0 * std::numbers::pi / grid, d);
    EXPECT_NEAR(sum * weight, h_norm2(u), 1e-12 * h_norm2(u));
    double v2 = 0.0;
    for (std::size_t m = 0; m < u.size(); ++m) v2 += b->norm2(b->wavevector_of(m)) * std::norm(u[m]);
    EXPECT_NEAR(v_norm2(u), v2, 1e-12 * v2);
  }
}

TEST(Field, LerayProjectionIsIdempotentOnSolenoidalFields) {
  const BasisPtr b = Basis::build(3, 4);
  CounterStream rng(StreamKey{5, 0, Channel::corpus});
  const SpectralField u = random_field(b, rng);
  const SpectralField v = leray_project(to_vector_spectrum(u));
  for (std::size_t m = 0; m < u.size(); ++m) EXPECT_NEAR(std::abs(u[m] - v[m]), 0.0, 1e-14);
}

TEST(Field, EmbedRoundTripsThroughLargerBasis) {
  const BasisPtr small = Basis::build(2, 4);
  const BasisPtr large = Basis::build(2, 9);
  CounterStream rng(StreamKey{1, 0, Channel::corpus});
  const SpectralField u = random_field(small, rng);
  const SpectralField up = embed(u, large);
  EXPECT_DOUBLE_EQ(h_norm2(up), h_norm2(u));
  EXPECT_EQ(embed(up, small), u);
}

}  // namespace
}  // namespace scbf
