#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uavsec/model.hpp"
#include "test_util.hpp"

using namespace uavsec;

TEST(Channel, AirToGroundGainByHand) {
  RadioConstants rc;
  // 30-40-50 triangle, H = 100: 1e-6 / (2500 + 10000)
  EXPECT_DOUBLE_EQ(a2g_gain({0, 0}, {30, 40}, 100.0, rc), 1e-6 / 12500.0);
}

TEST(Channel, WorstCaseEveGainUsesNearestDiscPoint) {
  RadioConstants rc;
  const Eavesdropper e{{30, 40}, 10.0};
  EXPECT_DOUBLE_EQ(worst_case_eve_gain({0, 0}, e, 100.0, rc), 1e-6 / (40.0 * 40.0 + 1e4));
  // Radius zero reduces to the plain air-to-ground gain.
  EXPECT_DOUBLE_EQ(worst_case_eve_gain({0, 0}, {{30, 40}, 0.0}, 100.0, rc), a2g_gain({0, 0}, {30, 40}, 100.0, rc));
}

TEST(Channel, InsideDiscThrowsWithIndex) {
  RadioConstants rc;
  try {
    worst_case_eve_gain({0, 0}, {{3, 4}, 10.0}, 100.0, rc, 7);
    FAIL() << "expected EveExclusionViolated";
  } catch (const EveExclusionViolated& e) {
    EXPECT_EQ(e.eve_index, 7u);
  }
  // On the boundary is allowed.
  EXPECT_NO_THROW(worst_case_eve_gain({0, 0}, {{6, 8}, 10.0}, 100.0, rc));
}

TEST(Channel, GroundToGroundCoefficient) {
  RadioConstants rc;
  rc.alpha = 2.2;
  const double a = std::abs(std::hypot(100.0, 0.0) - 10.0);
  EXPECT_NEAR(worst_case_g2g_gain_coeff({0, 0}, {{100, 0}, 10.0}, rc), 1e-6 * std::pow(a, -2.2), 1e-25);
  EXPECT_THROW(worst_case_g2g_gain_coeff({0, 0}, {{10, 0}, 10.0}, rc), DegenerateDistance);
}

TEST(Rates, LegitLowerBoundIndependentFormula) {
  const Scenario s = testutil::small_scenario(4);
  const Vec2 q(-20, 70);
  const double p = 0.01;
  double sum = 0.0;
  for (const auto& w : s.users) {
    double jam = 0.0;
    for (const auto& e : s.eves) jam += s.radio.pe * s.radio.beta0 * std::pow(std::abs((w - e.estimate).norm() - e.radius), -s.radio.alpha);
    sum += p * s.radio.beta0 / ((q - w).squaredNorm() + s.altitude * s.altitude) / (jam + s.radio.sigma2);
  }
  EXPECT_NEAR(legit_rate_lb(q, p, s), std::log2(1.0 + sum), 1e-12);
}

TEST(Rates, SecrecyIsClampedDifference) {
  const Scenario s = testutil::small_scenario(4);
  for (const Vec2 q : {Vec2(-100, 300), Vec2(0, 0), Vec2(-150, 600)}) {
    const double p = 0.002;
    const double raw = legit_rate_lb(q, p, s) - eve_rate(q, p, s);
    EXPECT_DOUBLE_EQ(secrecy_rate(q, p, s), std::max(0.0, raw));
  }
}

TEST(Rates, ZeroPowerGivesZeroRatesAndUndefinedSee) {
  const Scenario s = testutil::small_scenario(5);
  PowerProfile p;
  p.powers.assign(5, 0.0);
  const Solution sol = evaluate_solution(straight_line(s), p, s);
  EXPECT_EQ(sol.wasr, 0.0);
  EXPECT_FALSE(sol.see.has_value());
}

TEST(Rates, MonotoneInPowerProperty) {
  const Scenario s = testutil::small_scenario(4);
  std::mt19937_64 rng(0xC0FFEE + 1);
  std::uniform_real_distribution<double> ux(-400, 200), uy(-300, 900), up(0, 1);
  for (int i = 0; i < 500; ++i) {
    const Vec2 q(ux(rng), uy(rng));
    bool inside = false;
    for (const auto& e : s.eves) inside = inside || (q - e.estimate).norm() < e.radius;
    if (inside) continue;
    double p1 = up(rng), p2 = up(rng);
    if (p1 > p2) std::swap(p1, p2);
    EXPECT_LE(legit_rate_lb(q, p1, s), legit_rate_lb(q, p2, s));
    EXPECT_LE(eve_rate(q, p1, s), eve_rate(q, p2, s));
    for (std::size_t r = 0; r < s.num_primaries(); ++r)
      EXPECT_LE(interference_bound(q, p1, s, r), interference_bound(q, p2, s, r));
  }
}

TEST(Rates, EveRateGrowsWithMoreEavesdroppers) {
  Scenario s = testutil::small_scenario(4);
  const Vec2 q(-80, 200);
  const double before = eve_rate(q, 0.01, s);
  s.eves.push_back({{300, 300}, 5.0});
  EXPECT_GE(eve_rate(q, 0.01, s), before);
}

TEST(Solution, AggregatesRecomputeFromSlots) {
  const Scenario s = testutil::small_scenario(8);
  PowerProfile p;
  for (int i = 0; i < 8; ++i) p.powers.push_back(1e-3 * (i + 1));
  const Solution sol = evaluate_solution(straight_line(s), p, s);
  double r = 0.0, w = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(sol.per_slot[i].rate_secrecy, std::max(0.0, sol.per_slot[i].rate_legit_lb - sol.per_slot[i].rate_eve));
    r += sol.per_slot[i].rate_secrecy;
    w += p.powers[i];
  }
  EXPECT_NEAR(sol.wasr, r / 8.0, 1e-9 * std::max(1.0, r));
  ASSERT_TRUE(sol.see.has_value());
  EXPECT_NEAR(*sol.see, r / w, 1e-9 * (r / w));
}

TEST(Solution, LengthMismatchThrows) {
  const Scenario s = testutil::small_scenario(4);
  PowerProfile p;
  p.powers.assign(3, 0.0);
  EXPECT_THROW(evaluate_solution(straight_line(s), p, s), std::invalid_argument);
}

TEST(Scenario, ValidationNamesTheProblem) {
  Scenario s = testutil::small_scenario(4);
  s.v_max = 1.0;
  try {
    s.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("unreachable"), std::string::npos);
  }
  s = testutil::small_scenario(4);
  s.radio.alpha = 2.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = testutil::small_scenario(4);
  s.gamma_it.pop_back();
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Scenario, RhoZeroIsRecomputed) {
  RadioConstants rc;
  rc.beta0 = 2e-6;
  rc.sigma2 = 4e-14;
  EXPECT_EQ(rc.rho0(), 2e-6 / 4e-14);
}

TEST(Units, ConversionsMatchHandValues) {
  EXPECT_NEAR(dbm_to_watts(-110.0), 1e-14, 1e-26);
  EXPECT_NEAR(db_to_linear(-60.0), 1e-6, 1e-18);
  EXPECT_NEAR(dbm_to_watts(30.0), 1.0, 1e-12);
  for (double x : {-130.0, -97.5, -80.0, 0.0, 23.0}) EXPECT_NEAR(watts_to_dbm(dbm_to_watts(x)), x, 1e-12 * std::max(1.0, std::abs(x)));
}

TEST(Audit, StraightLineWithZeroPowerIsFeasible) {
  const Scenario s = testutil::small_scenario(6);
  PowerProfile p;
  p.powers.assign(6, 0.0);
  const ConstraintAudit a = audit_solution(evaluate_solution(straight_line(s), p, s), s);
  EXPECT_TRUE(a.feasible());
  EXPECT_LE(a.endpoints, kTolEq);
}

TEST(Audit, DetectsSpeedAndPowerViolations) {
  const Scenario s = testutil::small_scenario(4);
  Trajectory t = straight_line(s);
  t.points[1] += Vec2(500, 0);
  PowerProfile p;
  p.powers.assign(4, 2.0 * s.p_max);
  const ConstraintAudit a = audit_solution(evaluate_solution(t, p, s), s);
  EXPECT_GT(a.speed, 0.0);
  EXPECT_GT(a.power_box, 0.0);
  EXPECT_FALSE(a.feasible());
}
