#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "scbf/diagnostics.hpp"
#include "scbf/noise.hpp"
#include "scbf/operators.hpp"
#include "scbf/transform.hpp"

namespace scbf {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Grid, PaddedGridSizes) {
  const BasisPtr b = Basis::build(2, 8);  // K = 7
  EXPECT_EQ(padded_grid(*b, 1.0), 16);    // >= 15
  EXPECT_EQ(padded_grid(*b, 1.5), 32);    // >= 22
  EXPECT_EQ(next_pow2(17), 32);
  EXPECT_EQ(next_pow2(16), 16);
  EXPECT_THROW(to_physical(SpectralField(b), 14), std::invalid_argument);
}

TEST(Transform, PhysicalRoundTrip) {
  for (int d : {2, 3}) {
    const BasisPtr b = Basis::build(d, 4);
    CounterStream rng(StreamKey{2, 0, Channel::corpus});
    const SpectralField u = random_field(b, rng);
    const SpectralField v = to_spectral(to_physical(u, 16), b);
    for (std::size_t m = 0; m < u.size(); ++m) EXPECT_NEAR(std::abs(u[m] - v[m]), 0.0, 1e-13);
  }
}

TEST(Transform, SingleModeSamplesCosine) {
  // c at k = (1, 0) and its conjugate give u = 2 Re(c e^{ix}) / (2 pi) e_p.
  const BasisPtr b = Basis::build(2, 2);
  SpectralField u(b);
  const std::size_t w = *b->find(WaveVector{{1, 0, 0}});
  u[b->mode(w, 0)] = 0.5;
  u[b->mode(b->conjugate(w), 0)] = 0.5;
  const Vec3& e = b->polarization(w, 0);
  const PhysicalField f = to_physical(u, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const double x = 2.0 * kPi * i / 8.0;
      const double expect = std::cos(x) / (2.0 * kPi);
      EXPECT_NEAR(f.component(0)[i * 8 + j], expect * e[0], 1e-15);
      EXPECT_NEAR(f.component(1)[i * 8 + j], expect * e[1], 1e-15);
    }
  }
}

TEST(Convection, ShearModesAreSteady) {
  // A single wavevector pair has u . k = 0, so (u . grad) u = 0.
  for (int d : {2, 3}) {
    const BasisPtr b = Basis::build(d, 4);
    SpectralField u(b);
    const std::size_t w = *b->find(WaveVector{{1, 2, 0}});
    u[b->mode(w, 0)] = Complex(0.3, -0.7);
    u[b->mode(b->conjugate(w), 0)] = Complex(0.3, 0.7);
    OperatorConfig cfg;
    EXPECT_LT(h_norm(apply_convection(u, u, cfg)), 1e-15);
    EXPECT_LT(h_norm(convection_exact(u, u)), 1e-15);
  }
}

TEST(Convection, TaylorGreenIsAnEulerSteadyState) {
  // (u . grad) u is a gradient for the 2D Taylor-Green vortex.
  const BasisPtr b = Basis::build(2, 5);
  const SpectralField tg = direction_preset(b, "taylor-green");
  EXPECT_NEAR(h_norm(tg), 1.0, 1e-14);
  OperatorConfig cfg;
  EXPECT_LT(h_norm(apply_convection(tg, tg, cfg)), 1e-14);
  EXPECT_LT(h_norm(convection_exact(tg, tg)), 1e-14);
}

TEST(Convection, ExactAndPaddedAgree) {
  for (int d : {2, 3}) {
    const BasisPtr b = Basis::build(d, d == 2 ? 6 : 4);
    CounterStream rng(StreamKey{4, 0, Channel::corpus});
    const SpectralField u = random_field(b, rng);
    const SpectralField v = random_field(b, rng);
    const SpectralField a = convection_exact(u, v);
    const SpectralField p = convection_padded(u, v, 1.5);
    EXPECT_LT(h_norm(a - p), 1e-12 * (1.0 + h_norm(a)));
  }
}

TEST(Convection, TrilinearSuitesPass) {
  for (int d : {2, 3}) {
    const BasisPtr b = Basis::build(d, 4);
    for (Dealias mode : {Dealias::exact, Dealias::padded}) {
      const PropertyReport r = check_trilinear(b, 50, 17, mode);
      EXPECT_TRUE(r.passed) << r.name << " worst " << r.worst_margin;
    }
  }
}

TEST(Stokes, IdentityAndSpectrum) {
  const BasisPtr b = Basis::build(3, 4);
  EXPECT_TRUE(check_stokes_identity(b, 50, 2).passed);
  CounterStream rng(StreamKey{9, 0, Channel::corpus});
  const SpectralField u = random_field(b, rng);
  const SpectralField au = apply_stokes(u);
  for (std::size_t m = 0; m < u.size(); ++m) {
    EXPECT_EQ(au[m], double(b->norm2(b->wavevector_of(m))) * u[m]);
  }
}

TEST(Absorption, LinearExponentIsIdentity) {
  const BasisPtr b = Basis::build(2, 6);
  CounterStream rng(StreamKey{8, 0, Channel::corpus});
  const SpectralField u = random_field(b, rng);
  OperatorConfig cfg;
  cfg.r = 1.0;
  EXPECT_LT(h_norm(apply_absorption(u, cfg) - u), 1e-13 * h_norm(u));
}

TEST(Absorption, CubicSingleModeClosedForm) {
  // u = A cos(x) e, |u|^2 u = A^3 (3 cos x + cos 3x) / 4 e; 3k lies outside n = 2.
  const BasisPtr b = Basis::build(2, 2);
  const double c0 = 0.8;
  SpectralField u(b);
  const std::size_t w = *b->find(WaveVector{{1, 0, 0}});
  u[b->mode(w, 0)] = c0;
  u[b->mode(b->conjugate(w), 0)] = c0;
  const double amp = 2.0 * c0 / (2.0 * kPi);
  const double expect = 0.75 * amp * amp * amp * (2.0 * kPi) / 2.0;
  OperatorConfig cfg;
  cfg.r = 3.0;
  const SpectralField c = apply_absorption(u, cfg);
  for (std::size_t m = 0; m < c.size(); ++m) {
    const double target = (m == b->mode(w, 0) || m == b->mode(b->conjugate(w), 0)) ? expect : 0.0;
    EXPECT_NEAR(std::abs(c[m] - target), 0.0, 1e-15);
  }
  // int |u|^4 = A^4 (2 pi) * int_0^{2 pi} cos^4 = A^4 (2 pi) (3 pi / 4).
  const double power = std::pow(amp, 4) * 2.0 * kPi * 0.75 * kPi;
  EXPECT_NEAR(absorption_with_power(u, 3.0, absorption_grid(*b, 3.0)).power, power, 1e-14);
}

TEST(Absorption, IdentityMonotonicityLipschitzAcrossExponents) {
  for (int d : {2, 3}) {
    const BasisPtr b = Basis::build(d, d == 2 ? 5 : 3);
    for (double r : {1.0, 2.0, 3.0, 5.0}) {
      EXPECT_TRUE(check_absorption_identity(b, r, 20, 3).passed) << "d=" << d << " r=" << r;
      EXPECT_TRUE(check_monotonicity(b, r, 40, 3).passed) << "d=" << d << " r=" << r;
      EXPECT_TRUE(check_absorption_lipschitz(b, r, 20, 3).passed) << "d=" << d << " r=" << r;
    }
    EXPECT_TRUE(check_convection_bound(b, 5.0, 20, 3).passed);
  }
}

TEST(Absorption, NonFiniteInputRaises) {
  const BasisPtr b = Basis::build(2, 3);
  SpectralField u(b);
  u[0] = std::numeric_limits<double>::infinity();
  u[b->mode(b->conjugate(0), 0)] = std::numeric_limits<double>::infinity();
  OperatorConfig cfg;
  cfg.r = 3.0;
  EXPECT_THROW(apply_absorption(u, cfg), NonFiniteError);
}

TEST(OperatorConfig, ValidationNamesTheConstraint) {
  OperatorConfig cfg;
  cfg.mu = -1.0;
  try {
    cfg.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("mu"), std::string::npos);
  }
  cfg = {};
  cfg.r = 0.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Mollifier, UnitMassAndSymmetry) {
  // Independent Simpson rule on [-1, 1].
  const int m = 20000;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double x = -1.0 + 2.0 * i / m;
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * mollifier(x);
  }
  EXPECT_NEAR(s * (2.0 / m) / 3.0, 1.0, 1e-9);
  EXPECT_EQ(mollifier(0.3), mollifier(-0.3));
  EXPECT_EQ(mollifier(1.0), 0.0);

  const std::vector<double> w = mollifier_weights(0.1, 0.01);
  double total = w[0];
  for (std::size_t j = 1; j < w.size(); ++j) total += 2.0 * w[j];
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Mollifier, ConstantsArePreservedAwayFromTheEdges) {
  TimeSeries<double> s;
  s.dt = 0.01;
  s.values.assign(201, 2.5);
  const TimeSeries<double> m = mollify_time(s, 0.1);
  for (std::size_t i = 10; i + 10 < m.values.size(); ++i) EXPECT_NEAR(m.values[i], 2.5, 1e-13);
  EXPECT_THROW(mollify_time(s, 0.01), std::invalid_argument);
}

}  // namespace
}  // namespace scbf
