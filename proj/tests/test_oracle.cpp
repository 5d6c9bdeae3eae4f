#include <gtest/gtest.h>

#include <cmath>

#include "uavsec/oracle.hpp"
#include "test_util.hpp"

using namespace uavsec;
using namespace uavsec::oracle;

TEST(Sampler, UnitMeanOverMillionDraws) {
  FadingSampler s(kDefaultSeed, 0);
  RunningStats st;
  for (int i = 0; i < 1000000; ++i) st.push(s());
  EXPECT_NEAR(st.estimate().mean, 1.0, 0.005);
}

TEST(Sampler, StreamsAreReproducibleAndDistinct) {
  FadingSampler a(kDefaultSeed, 3), b(kDefaultSeed, 3), c(kDefaultSeed, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    differs = differs || x != z;
  }
  EXPECT_TRUE(differs);
}

TEST(Rate, NoJammingIsDeterministic) {
  Scenario s = testutil::small_scenario(1);
  s.radio.pe = 0.0;
  const Vec2 q(-100, 300);
  const auto e = mc_rate_estimate(q, 1e-3, s, 1000, kDefaultSeed + 1);
  EXPECT_NEAR(e.mean, legit_rate_lb(q, 1e-3, s), 1e-12);
  EXPECT_EQ(e.stderr_, 0.0);
}

TEST(Rate, JensenDirectionSingleLink) {
  Scenario s = testutil::small_scenario(1);
  s.users = {{-100, 500}};
  s.eves = {{{-150, 650}, 10.0}};
  s.radio.pe = 1e-3;
  const Vec2 q(-100, 450);
  const auto e = mc_rate_estimate(q, 1e-3, s, 100000, kDefaultSeed + 2);
  EXPECT_GE(e.mean, legit_rate_lb(q, 1e-3, s) - 3.0 * e.stderr_);
}

TEST(Rate, StandardErrorShrinksLikeRootN) {
  Scenario s = testutil::small_scenario(1);
  s.radio.pe = 1e-3;
  const Vec2 q(-100, 450);
  const auto e1 = mc_rate_estimate(q, 1e-3, s, 50000, kDefaultSeed + 3);
  const auto e2 = mc_rate_estimate(q, 1e-3, s, 100000, kDefaultSeed + 3);
  const double ratio = e1.stderr_ / e2.stderr_;
  EXPECT_NEAR(ratio, std::sqrt(2.0), 0.1);
}

TEST(Interference, NoJammingEqualsDirectTerm) {
  Scenario s = testutil::small_scenario(1);
  s.radio.pe = 0.0;
  const Vec2 q(-50, 100);
  const auto e = mc_interference_estimate(q, 2e-3, s, 0, 1000, kDefaultSeed + 4);
  EXPECT_EQ(e.mean, 2e-3 * a2g_gain(q, s.primaries[0], s.altitude, s.radio));
  EXPECT_EQ(e.stderr_, 0.0);
}

TEST(Interference, BoundAtLeastMeanTableGeometry) {
  const Scenario s = testutil::small_scenario(1);
  const Vec2 q(-50, 100);
  for (std::size_t r = 0; r < s.num_primaries(); ++r) {
    const auto e = mc_interference_estimate(q, 1e-4, s, r, 100000, kDefaultSeed + 5 + r);
    EXPECT_GE(interference_bound(q, 1e-4, s, r) / (e.mean - 3.0 * e.stderr_), 1.0);
  }
}

TEST(Interference, JammingMeanMatchesUnitMeanIdentity) {
  const Scenario s = testutil::small_scenario(1);
  const Vec2 q(-50, 100);
  const auto e = mc_interference_estimate(q, 0.0, s, 1, 1000000, kDefaultSeed + 9);
  double expected = 0.0;
  for (const auto& ev : s.eves)
    expected += s.radio.pe * s.radio.beta0 * std::pow(std::abs((s.primaries[1] - ev.estimate).norm() - ev.radius), -s.radio.alpha);
  EXPECT_NEAR(e.mean / expected, 1.0, 0.01);
}

TEST(SlotGrid, SingleUserPeaksAboveUser) {
  Scenario s;
  s.users = {{37, -12}};
  s.eves = {{{5000, 5000}, 10.0}};
  s.altitude = 100.0;
  s.radio.pe = 0.0;
  const Lattice lat{-100, 100, -100, 100, 41, 41};
  const auto g = grid_oracle_trajectory_slot(1e-3, s, lat);
  ASSERT_EQ(g.best.size(), 1u);
  EXPECT_EQ(g.best[0], Vec2(35, -10));
}

TEST(SlotGrid, MirrorLayoutReportsBothPeaks) {
  Scenario s;
  s.users = {{-100, 0}, {100, 0}};
  s.eves = {{{0, 150}, 10.0}, {{0, -150}, 10.0}};
  s.altitude = 100.0;
  s.radio.pe = 0.0;
  const Lattice lat{-200, 200, -200, 200, 41, 41};
  const auto g = grid_oracle_trajectory_slot(1e-3, s, lat, 1e-9);
  ASSERT_GE(g.best.size(), 2u);
  bool mirrored = false;
  for (const auto& a : g.best)
    for (const auto& b : g.best) mirrored = mirrored || (a.x() == -b.x() && a.y() == b.y() && a.x() != 0.0);
  EXPECT_TRUE(mirrored);
}

TEST(SlotGrid, SkipsUncertaintyDiscs) {
  Scenario s;
  s.users = {{0, 0}};
  s.eves = {{{0, 0}, 30.0}};
  s.altitude = 100.0;
  const Lattice lat{-50, 50, -50, 50, 11, 11};
  const auto g = grid_oracle_trajectory_slot(1e-3, s, lat);
  for (const auto& q : g.best) EXPECT_GE(q.norm(), 30.0);
}

TEST(PowerGrid, FindsUncoupledOptimum) {
  Scenario s = testutil::small_scenario(2);
  s.primaries.clear();
  s.gamma_it.clear();
  s.see_min = 0.0;
  s.p_max = 1e-3;
  s.q_start = {-100, 450};
  s.q_end = {-100, 460};
  const Trajectory q = straight_line(s);
  PowerProfile ref{{0.0, 0.0}};
  const auto g = grid_oracle_power(q, s, ref, 1001);
  ASSERT_TRUE(g.feasible);
  // With p_ref = 0 the slot objective is log2(1 + a p) - b p / ln 2,
  // maximized at p = 1/b - 1/a.
  const LinkConstants links = link_constants(s);
  for (std::size_t i = 0; i < 2; ++i) {
    const double a = legit_gain_sum(q.points[i], s, links), b = eve_gain_sum(q.points[i], s);
    const double p_star = std::clamp(1.0 / b - 1.0 / a, 0.0, s.p_max);
    EXPECT_NEAR(g.best_p[i], p_star, g.grid_step);
  }
}
