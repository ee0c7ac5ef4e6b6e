#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "scbf/integrator.hpp"

namespace scbf {
namespace {

PathConfig base_config(int d = 2, int n = 5) {
  PathConfig c;
  c.model.basis = Basis::build(d, n);
  c.model.ops.r = 3.0;
  c.model.gamma.direction = direction_preset(c.model.basis, "lowest");
  c.scheme.dt = 1e-3;
  c.horizon = 0.1;
  c.output_dt = 0.02;
  c.seed = 7;
  return c;
}

PathConfig noisy_config() {
  PathConfig c = base_config();
  c.model.sigma = {SigmaFamily::Kind::bounded_multiplicative, 0.3, 0.5};
  c.model.jumps.rate = 20.0;
  c.model.gamma.c0 = 0.2;
  c.model.gamma.c1 = 0.1;
  return c;
}

SpectralField tg(const PathConfig& c) { return direction_preset(c.model.basis, "taylor-green"); }

TEST(Integrator, ExponentialSchemeSolvesStokesExactly) {
  PathConfig c = base_config();
  c.model.terms.convection = false;
  c.model.terms.absorption = false;
  c.scheme.kind = SchemeKind::exponential_tamed;
  c.horizon = 0.5;
  c.scheme.dt = 0.01;
  CounterStream rng(StreamKey{1, 0, Channel::corpus});
  const SpectralField u0 = random_field(c.model.basis, rng);
  const Trajectory tr = simulate_path(c, u0);
  const Basis& b = *c.model.basis;
  for (std::size_t m = 0; m < u0.size(); ++m) {
    const Complex expect = std::exp(-c.model.ops.mu * b.norm2(b.wavevector_of(m)) * 0.5) * u0[m];
    EXPECT_NEAR(std::abs(tr.states.back()[m] - expect), 0.0, 1e-14 * (1.0 + std::abs(u0[m])));
  }
}

TEST(Integrator, DeterministicEnergyDecays) {
  PathConfig c = base_config();
  c.output_dt = 0.002;
  const Trajectory tr = simulate_path(c, 2.0 * tg(c));
  for (std::size_t k = 1; k < tr.states.size(); ++k) {
    EXPECT_LT(h_norm2(tr.states[k]), h_norm2(tr.states[k - 1]));
  }
}

TEST(Integrator, RepeatedRunsAreBitwiseIdentical) {
  for (const PathConfig& c : {base_config(), noisy_config()}) {
    const Trajectory a = simulate_path(c, tg(c));
    const Trajectory b = simulate_path(c, tg(c));
    EXPECT_TRUE(a == b);
  }
}

TEST(Integrator, NoiseRecordReplayIsBitwise) {
  PathConfig c = noisy_config();
  c.seed = 123;
  const Trajectory a = simulate_path(c, tg(c));
  EXPECT_FALSE(a.noise.increments.empty());
  PathConfig other = c;
  other.seed = 999;  // replay must ignore the keyed streams
  const Trajectory b = simulate_path(other, tg(c), nullptr, &a.noise);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.times, b.times);
}

TEST(Integrator, ReplayOfShortRecordFails) {
  PathConfig c = noisy_config();
  Trajectory a = simulate_path(c, tg(c));
  a.noise.increments.resize(a.noise.increments.size() / 2);
  EXPECT_THROW(simulate_path(c, tg(c), nullptr, &a.noise), std::invalid_argument);
}

TEST(Integrator, OutputTimesCoverHorizon) {
  PathConfig c = base_config();
  const auto t = output_times(c);
  ASSERT_EQ(t.size(), 6u);
  EXPECT_DOUBLE_EQ(t.front(), 0.0);
  EXPECT_DOUBLE_EQ(t.back(), 0.1);
  c.output_dt = 0.0;
  EXPECT_EQ(output_times(c).size(), 2u);
  c.horizon = 0.0;
  const Trajectory tr = simulate_path(c, tg(c));
  EXPECT_EQ(tr.states.size(), 1u);
}

TEST(Integrator, JumpsLandOnTheStoredTimes) {
  PathConfig c = noisy_config();
  c.model.sigma.kind = SigmaFamily::Kind::none;
  c.model.terms = {false, false, false};
  c.model.gamma.c1 = 0.0;
  // Pure compensated compound Poisson: u(T) - u(0) = c0 (sum z_i - rate T m1) g.
  const Trajectory tr = simulate_path(c, SpectralField(c.model.basis));
  double sum = 0.0;
  for (double z : tr.noise.marks) sum += z;
  const double expect = c.model.gamma.c0 * (sum - c.model.jumps.m1() * c.horizon);
  EXPECT_NEAR(inner(tr.states.back(), c.model.gamma.direction), expect, 1e-13);
}

TEST(Integrator, FineNoiseGridSumsToCoarse) {
  // Additive noise, no drift: u(T) is the Brownian path at T whatever dt.
  PathConfig c = base_config();
  c.model.terms = {false, false, false};
  c.model.sigma = {SigmaFamily::Kind::additive, 1.0, 0.0};
  c.noise_dt = 1e-3;
  c.scheme.dt = 1e-3;
  const Trajectory fine = simulate_path(c, SpectralField(c.model.basis));
  c.scheme.dt = 5e-3;
  const Trajectory coarse = simulate_path(c, SpectralField(c.model.basis));
  EXPECT_LT(h_norm(fine.states.back() - coarse.states.back()), 1e-14);
}

TEST(Integrator, GuardTripStopsThePath) {
  PathConfig c = base_config();
  c.scheme.guard = 0.5;
  const Trajectory tr = simulate_path(c, 2.0 * tg(c));
  EXPECT_EQ(tr.status, RunStatus::guard_tripped);
  EXPECT_EQ(tr.states.size(), 1u);
  EXPECT_LT(tr.trip_time, c.horizon);
}

TEST(Integrator, CrnTwinsWithEqualDataCoincide) {
  const PathConfig c = noisy_config();
  const auto [a, b] = simulate_pair_crn(c, tg(c), tg(c));
  EXPECT_TRUE(a == b);
}

TEST(Integrator, ValidationMessagesNameTheField) {
  PathConfig c = base_config();
  c.scheme.dt = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = base_config();
  c.horizon = 0.1005;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("dt"), std::string::npos);
  }
  c = base_config();
  c.noise_dt = 3e-4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = base_config();
  c.model.sigma = {SigmaFamily::Kind::additive, 1.0, 0.0};
  c.model.q.s = 0.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(100, 3,
                            [](std::size_t i) {
                              if (i == 50) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Integrator, EnsembleIsIndependentOfJobCount) {
  const PathConfig c = noisy_config();
  std::vector<double> a(16), b(16);
  for (auto [out, jobs] : {std::pair{&a, 1}, std::pair{&b, 4}}) {
    parallel_for(16, jobs, [&, out](std::size_t i) {
      PathConfig ci = c;
      ci.trajectory = i;
      (*out)[i] = h_norm2(simulate_path(ci, tg(c)).states.back());
    });
  }
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace scbf
