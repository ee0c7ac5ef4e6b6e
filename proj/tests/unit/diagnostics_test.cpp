#include <gtest/gtest.h>

#include <cmath>

#include "scbf/diagnostics.hpp"

namespace scbf {
namespace {

PathConfig small_config() {
  PathConfig c;
  c.model.basis = Basis::build(2, 5);
  c.model.ops.r = 3.0;
  c.model.gamma.direction = direction_preset(c.model.basis, "lowest");
  c.scheme.dt = 1e-3;
  c.horizon = 0.1;
  c.output_dt = 0.05;
  c.seed = 3;
  return c;
}

TEST(Statistics, MeanAndStandardError) {
  const MeanEstimate e = estimate_mean({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_NEAR(e.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(e.count, 4u);
  EXPECT_NEAR(e.ci95(), 1.96 * e.se, 1e-15);
}

TEST(Statistics, LogLogSlopeOfPowerLaw) {
  const std::vector<double> x{1, 2, 4, 8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v * v);
  EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-12);
}

TEST(Uniqueness, RegimeTable) {
  EXPECT_EQ(uniqueness_regime(2, 1.0, 1.0, 1.0).weight, UniquenessWeight::ladyzhenskaya);
  EXPECT_EQ(uniqueness_regime(2, 3.0, 1.0, 1.0).weight, UniquenessWeight::ladyzhenskaya);
  const UniquenessRegime fast = uniqueness_regime(3, 5.0, 1.0, 1.0);
  EXPECT_EQ(fast.weight, UniquenessWeight::constant_rate);
  EXPECT_GT(fast.rate, 0.0);
  EXPECT_EQ(uniqueness_regime(3, 3.0, 1.0, 0.5).weight, UniquenessWeight::none);
  EXPECT_THROW(uniqueness_regime(3, 2.0, 1.0, 1.0), RegimeRefused);
  try {
    uniqueness_regime(3, 3.0, 0.5, 0.5);
    FAIL();
  } catch (const RegimeRefused& e) {
    EXPECT_NE(std::string(e.what()).find("2βμ ≥ 1 for r = 3"), std::string::npos);
  }
}

TEST(Ledger, DeterministicResidualShrinksLinearly) {
  PathConfig c = small_config();
  c.horizon = 0.25;
  const ResidualStudy st =
      ledger_residual_study(c, 2.0 * direction_preset(c.model.basis, "taylor-green"), {1.0 / 64, 1.0 / 128, 1.0 / 256});
  for (std::size_t i = 1; i < st.residuals.size(); ++i) EXPECT_LT(st.residuals[i], st.residuals[i - 1]);
  EXPECT_GE(st.slope, 0.9);
}

TEST(Ledger, ReplayedLedgerHasOneRowPerOutput) {
  PathConfig c = small_config();
  c.model.sigma = {SigmaFamily::Kind::additive, 0.2, 0.0};
  c.model.jumps.rate = 10.0;
  c.model.gamma.c0 = 0.3;
  const Trajectory tr = simulate_path(c, direction_preset(c.model.basis, "taylor-green"));
  const EnergyLedger l = energy_ledger(tr, c);
  ASSERT_EQ(l.rows.size(), tr.states.size());
  for (std::size_t k = 0; k < l.rows.size(); ++k) {
    EXPECT_DOUBLE_EQ(l.rows[k].time, tr.times[k]);
    EXPECT_DOUBLE_EQ(l.rows[k].energy, h_norm2(tr.states[k]));
  }
  EXPECT_EQ(l.rows.front().residual, 0.0);
  EXPECT_EQ(l.jumps, tr.noise.jump_times.size());
  EXPECT_LT(l.max_jump_defect, 1e-12);
  // Energy identity holds up to O(dt).
  EXPECT_LT(std::abs(l.rows.back().residual), 0.05);
}

TEST(Ledger, MissingRecordIsRejected) {
  PathConfig c = small_config();
  c.record_noise = false;
  c.model.sigma = {SigmaFamily::Kind::additive, 0.2, 0.0};
  const Trajectory tr = simulate_path(c, direction_preset(c.model.basis, "taylor-green"));
  EXPECT_THROW(energy_ledger(tr, c), std::invalid_argument);
}

TEST(Uniqueness, TwinTestPassesInTwoDimensions) {
  PathConfig c = small_config();
  c.model.sigma = {SigmaFamily::Kind::additive, 0.2, 0.0};
  const SpectralField u0 = direction_preset(c.model.basis, "taylor-green");
  const UniquenessReport rep =
      gronwall_uniqueness_test(c, [&](std::uint64_t) { return u0; }, 1e-6, 6, 0.0, 0.05, 2);
  EXPECT_TRUE(rep.zero_separation.passed);
  EXPECT_TRUE(rep.envelope.passed) << rep.envelope.detail;
  EXPECT_TRUE(rep.scaling.passed) << rep.scaling.detail;
  EXPECT_TRUE(rep.passed);
}

TEST(Convergence, ConsecutiveDifferencesShrink) {
  auto make = [](int n) {
    PathConfig c = small_config();
    c.model.basis = Basis::build(2, n);
    c.model.gamma.direction = direction_preset(c.model.basis, "lowest");
    c.model.sigma = {SigmaFamily::Kind::additive, 0.5, 0.0};
    c.scheme.kind = SchemeKind::exponential_tamed;
    return c;
  };
  const ConvergenceReport rep = galerkin_convergence_study(
      make, [](const BasisPtr& b) { return direction_preset(b, "taylor-green"); }, {3, 5, 8}, 0.0);
  EXPECT_TRUE(rep.monotone);
  EXPECT_EQ(rep.sup_differences.size(), 2u);
  EXPECT_THROW(galerkin_convergence_study(make, [](const BasisPtr& b) { return SpectralField(b); }, {4}, 1.0),
               std::invalid_argument);
}

}  // namespace
}  // namespace scbf
