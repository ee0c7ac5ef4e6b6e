#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scbf/diagnostics.hpp"
#include "scbf/noise.hpp"
#include "scbf/rng.hpp"

namespace scbf {
namespace {

TEST(CounterStream, EqualKeysGiveEqualSequences) {
  CounterStream a(StreamKey{42, 7, Channel::wiener});
  CounterStream b(StreamKey{42, 7, Channel::wiener});
  CounterStream c(StreamKey{42, 7, Channel::marks});
  CounterStream e(StreamKey{42, 8, Channel::wiener});
  int same_c = 0;
  int same_e = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    same_c += x == c();
    same_e += x == e();
  }
  EXPECT_EQ(same_c, 0);
  EXPECT_EQ(same_e, 0);
}

TEST(CounterStream, UniformAndGaussianMoments) {
  CounterStream rng(StreamKey{1, 0, Channel::corpus});
  const int m = 200000;
  double su = 0.0;
  double sg = 0.0;
  double sg2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double g = rng.gaussian();
    sg += g;
    sg2 += g * g;
  }
  EXPECT_NEAR(su / m, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / m));
  EXPECT_NEAR(sg / m, 0.0, 4.0 / std::sqrt(double(m)));
  EXPECT_NEAR(sg2 / m, 1.0, 4.0 * std::sqrt(2.0 / m));
}

TEST(QSpectrum, TraceSumsEveryRealDegreeOfFreedom) {
  const BasisPtr b = Basis::build(2, 4);
  const QSpectrum q{2.0, 1.5};
  double trace = 0.0;
  for (std::size_t m = 0; m < b->size(); ++m) trace += 2.0 * std::pow(b->norm2(b->wavevector_of(m)), -1.5);
  EXPECT_NEAR(q.trace(*b), trace, 1e-12 * trace);
  EXPECT_THROW((QSpectrum{1.0, 1.0}.validate(2)), std::invalid_argument);
  EXPECT_THROW((QSpectrum{-1.0, 2.0}.validate(2)), std::invalid_argument);
  EXPECT_NO_THROW((QSpectrum{1.0, 1.6}.validate(3)));
}

double simpson(const std::function<double(double)>& f, double a, double b, int m = 20000) {
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + (b - a) * i / m);
  return s * (b - a) / m / 3.0;
}

TEST(MarkLaw, MomentsMatchQuadrature) {
  const MarkLaw uni{MarkLaw::Kind::uniform, -0.5, 2.0};
  const MarkLaw gau{MarkLaw::Kind::gaussian, 0.3, 0.7};
  for (int p : {1, 2, 4}) {
    const double u = simpson([&](double z) { return std::pow(z, p) / 2.5; }, -0.5, 2.0);
    EXPECT_NEAR(uni.moment(p), u, 1e-12) << "uniform p=" << p;
    const double g = simpson(
        [&](double z) {
          return std::pow(z, p) * std::exp(-0.5 * std::pow((z - 0.3) / 0.7, 2)) / (0.7 * std::sqrt(2.0 * std::numbers::pi));
        },
        0.3 - 14 * 0.7, 0.3 + 14 * 0.7);
    EXPECT_NEAR(gau.moment(p), g, 1e-10) << "gaussian p=" << p;
  }
}

TEST(Jumps, SortedWithinHorizonAndReproducible) {
  JumpSpec spec;
  spec.rate = 5.0;
  const auto a = sample_jumps(spec, 3.0, 9, 2);
  const auto b = sample_jumps(spec, 3.0, 9, 2);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].time, b[i].time);
    EXPECT_EQ(a[i].mark, b[i].mark);
    EXPECT_GE(a[i].time, 0.0);
    EXPECT_LE(a[i].time, 3.0);
    EXPECT_GE(a[i].mark, -1.0);
    EXPECT_LE(a[i].mark, 1.0);
    if (i) EXPECT_LE(a[i - 1].time, a[i].time);
  }
  spec.rate = 0.0;
  EXPECT_TRUE(sample_jumps(spec, 3.0, 9, 2).empty());
}

TEST(Wiener, CoarseIncrementIsSumOfFine) {
  const BasisPtr b = Basis::build(2, 4);
  const WienerSource src(b, QSpectrum{}, 5, 1, 0.01);
  SpectralField sum(b);
  for (std::uint64_t j = 4; j < 8; ++j) sum += src.increment(j, 1);
  const SpectralField coarse = src.increment(4, 4);
  for (std::size_t m = 0; m < sum.size(); ++m) EXPECT_NEAR(std::abs(sum[m] - coarse[m]), 0.0, 1e-15);
  EXPECT_EQ(hermitian_defect(coarse), 0.0);
}

TEST(Wiener, SmallerBasisSeesPrefixOfLarger) {
  const BasisPtr small = Basis::build(2, 3);
  const BasisPtr large = Basis::build(2, 7);
  const WienerSource a(small, QSpectrum{}, 5, 1, 0.01);
  const WienerSource b(large, QSpectrum{}, 5, 1, 0.01);
  EXPECT_EQ(a.increment(3, 2), embed(b.increment(3, 2), small));
}

TEST(Wiener, IncrementStatistics) {
  const BasisPtr b = Basis::build(2, 3);
  const PropertyReport r = check_wiener_statistics(b, QSpectrum{1.0, 1.5}, 0.01, 20000, 3);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Jumps, CountsAndCompensatedIntegrals) {
  JumpSpec spec;
  spec.rate = 3.0;
  spec.marks = {MarkLaw::Kind::gaussian, 0.2, 1.0};
  EXPECT_TRUE(check_poisson_counts(spec, 2.0, 5000, 4).passed);
  const BasisPtr b = Basis::build(2, 3);
  GammaFamily gamma{0.5, 0.3, direction_preset(b, "lowest")};
  CounterStream rng(StreamKey{4, 0, Channel::corpus});
  const SpectralField u = random_field(b, rng);
  const SpectralField phi = random_field(b, rng);
  EXPECT_TRUE(check_ito_isometry(gamma, spec, u, 1.0, 5000, 4).passed);
  EXPECT_TRUE(check_compensated_mean(gamma, spec, u, phi, 1.0, 5000, 4).passed);
}

TEST(Coefficients, DiffusionAndJumpClosedForms) {
  const BasisPtr b = Basis::build(2, 3);
  CounterStream rng(StreamKey{6, 0, Channel::corpus});
  const SpectralField u = random_field(b, rng);
  const SpectralField dw = random_field(b, rng);
  const SigmaFamily sigma{SigmaFamily::Kind::bounded_multiplicative, 0.4, 0.5};
  const double nu = h_norm(u);
  const double factor = 0.4 * (1.0 + 0.5 * nu / (1.0 + nu));
  EXPECT_NEAR(sigma.factor(nu), factor, 1e-15);
  const SpectralField s = diffusion_increment(sigma, 0.0, u, dw);
  for (std::size_t m = 0; m < s.size(); ++m) EXPECT_NEAR(std::abs(s[m] - factor * dw[m]), 0.0, 1e-15);

  JumpSpec jumps;
  jumps.rate = 2.0;
  jumps.marks = {MarkLaw::Kind::uniform, 0.0, 1.0};
  const GammaFamily gamma{0.5, 0.3, direction_preset(b, "lowest")};
  const double g = 0.5 + 0.3 * nu / (1.0 + nu);
  EXPECT_NEAR(h_norm(jump_increment(gamma, 0.0, u, 0.7)), g * 0.7, 1e-14);
  EXPECT_NEAR(h_norm(compensator_drift(gamma, jumps, 0.0, u)), g * 2.0 * 0.5, 1e-14);
}

TEST(Certification, DeclaredConstantsHold) {
  const BasisPtr b = Basis::build(2, 4);
  const SigmaFamily sigma{SigmaFamily::Kind::bounded_multiplicative, 0.3, 0.8};
  JumpSpec jumps;
  jumps.rate = 1.5;
  jumps.marks = {MarkLaw::Kind::gaussian, 0.1, 0.9};
  const GammaFamily gamma{0.2, 0.6, direction_preset(b, "taylor-green")};
  const double tq = QSpectrum{}.trace(*b);
  const HypothesisConstants k = declared_constants(sigma, gamma, jumps, tq);
  const auto corpus = certification_corpus(b, 400, 8);
  const CertReport rep = certify_hypotheses(probe_for(sigma, gamma, jumps, tq), k, corpus);
  EXPECT_TRUE(rep.passed) << rep.failing_clause;
  EXPECT_LE(rep.growth_ratio, k.k1 * (1 + 1e-6));
  EXPECT_LE(rep.lipschitz_ratio, k.lipschitz * (1 + 1e-6));
}

TEST(Certification, UnderstatedConstantIsCaughtWithWitness) {
  const BasisPtr b = Basis::build(2, 4);
  const SigmaFamily sigma{SigmaFamily::Kind::additive, 0.3, 0.0};
  JumpSpec jumps;
  const GammaFamily gamma{};
  const double tq = QSpectrum{}.trace(*b);
  HypothesisConstants k = declared_constants(sigma, gamma, jumps, tq);
  k.k1 *= 0.5;
  const CertReport rep = certify_hypotheses(probe_for(sigma, gamma, jumps, tq), k, certification_corpus(b, 100, 8));
  EXPECT_FALSE(rep.passed);
  EXPECT_FALSE(rep.failing_clause.empty());
  EXPECT_TRUE(rep.witness.has_value());
}

TEST(Certification, CorpusSpansTheNormRange) {
  const auto corpus = certification_corpus(Basis::build(3, 3), 200, 2);
  double lo = 1e9;
  double hi = 0.0;
  for (const auto& [u, v] : corpus) {
    lo = std::min(lo, h_norm(u));
    hi = std::max(hi, h_norm(u));
  }
  EXPECT_LT(lo, 1.0);
  EXPECT_GT(hi, 50.0);
  EXPECT_LE(hi, 100.0 + 1e-9);
}

}  // namespace
}  // namespace scbf
