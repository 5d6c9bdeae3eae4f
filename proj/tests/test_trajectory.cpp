#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uavsec/bcd.hpp"
#include "uavsec/oracle.hpp"
#include "uavsec/trajectory.hpp"
#include "test_util.hpp"

using namespace uavsec;

namespace {

// Eavesdropper slack at q from the first-order bound around q_ref, with the
// plain (unsmoothed) norm.
double xi_bound(const Vec2& q, const Vec2& q_ref, const Eavesdropper& e, double h2) {
  const Vec2 g = q_ref - e.estimate;
  const double lin = g.squaredNorm() + 2.0 * g.dot(q - q_ref);
  return h2 + e.radius * e.radius - 2.0 * e.radius * (q - e.estimate).norm() + lin;
}

}  // namespace

TEST(Bound, LowerBoundsExactRateAtBindingSlacksProperty) {
  const Scenario s = testutil::small_scenario(1);
  const double h2 = s.altitude * s.altitude;
  std::mt19937_64 rng(0xC0FFEE + 31);
  std::uniform_real_distribution<double> ux(-500, 300), uy(-300, 900), lp(-6.0, 0.0), step(-80, 80);
  int checked = 0;
  while (checked < 1000) {
    const Vec2 qr(ux(rng), uy(rng));
    const Vec2 q = qr + Vec2(step(rng), step(rng));
    bool inside = false;
    for (const auto& e : s.eves) inside = inside || (q - e.estimate).norm() < e.radius || (qr - e.estimate).norm() < e.radius;
    if (inside) continue;
    Trajectory ref{{qr}};
    PowerProfile p{{std::pow(10.0, lp(rng))}};
    const auto pt = make_program_point(p, ref, s);
    Eigen::VectorXd zeta(3), xi(2);
    for (int k = 0; k < 3; ++k) zeta(k) = (q - s.users[static_cast<std::size_t>(k)]).squaredNorm() + h2;
    for (int m = 0; m < 2; ++m) xi(m) = std::max(xi_bound(q, qr, s.eves[static_cast<std::size_t>(m)], h2), 0.5 * h2);
    const double lb = slot_rate_lower_bound(pt, 0, zeta, xi);
    const double exact = slot_rate_exact(pt, 0, q, s);
    EXPECT_LE(lb, exact + 1e-12 * std::max(1.0, std::abs(exact)));
    // The exact slack form agrees with the model's rates.
    EXPECT_NEAR(exact, legit_rate_lb(q, p.powers[0], s) - eve_rate(q, p.powers[0], s), 1e-9);
    ++checked;
  }
}

TEST(Bound, TightAtReference) {
  const Scenario s = testutil::small_scenario(1);
  const double h2 = s.altitude * s.altitude;
  const Vec2 qr(-120, 320);
  Trajectory ref{{qr}};
  PowerProfile p{{2e-3}};
  const auto pt = make_program_point(p, ref, s);
  Eigen::VectorXd zeta(3), xi(2);
  for (int k = 0; k < 3; ++k) zeta(k) = (qr - s.users[static_cast<std::size_t>(k)]).squaredNorm() + h2;
  for (int m = 0; m < 2; ++m) xi(m) = xi_bound(qr, qr, s.eves[static_cast<std::size_t>(m)], h2);
  EXPECT_NEAR(slot_rate_lower_bound(pt, 0, zeta, xi), slot_rate_exact(pt, 0, qr, s), 1e-12);
}

TEST(Program, SeedIsNearlyFeasible) {
  const Scenario s = testutil::small_scenario(10);
  PowerProfile p;
  p.powers.assign(10, 1e-4);
  const auto tp = build_trajectory_program(p, straight_line(s), s);
  EXPECT_LE(convex::max_violation(tp.program, tp.seed), 1e-4);
  EXPECT_EQ(tp.program.dim, tp.layout.dim());
}

TEST(Program, RedundantInterferenceRowsAreDropped) {
  Scenario s = testutil::small_scenario(6);
  PowerProfile p;
  p.powers.assign(6, 1e-6);  // beta0 * p / H^2 = 1e-16 << Gamma
  const auto tp = build_trajectory_program(p, straight_line(s), s);
  EXPECT_TRUE(tp.layout.primaries.empty());
  p.powers.assign(6, 1e-2);
  const auto tp2 = build_trajectory_program(p, straight_line(s), s);
  EXPECT_EQ(tp2.layout.primaries.size(), 3u);
}

TEST(Solve, AscentFeasibilityAndEndpoints) {
  const Scenario s = testutil::small_scenario(12);
  const auto [q, p] = initialize(s, BcdConfig{});
  const auto res = solve_trajectory(p, q, s);
  EXPECT_GE(res.exact_objective, res.reference_objective);
  const ConstraintAudit a = audit_solution(evaluate_solution(res.trajectory, p, s), s);
  EXPECT_TRUE(a.feasible()) << a.max_violation();
  EXPECT_LE(a.endpoints, kTolEq);
  EXPECT_LE(a.speed, kTolFeas);
}

TEST(Solve, ReferenceInsideDiscIsRejected) {
  Scenario s = testutil::small_scenario(3);
  s.q_start = {-150, 705};
  s.q_end = {-150, 760};
  PowerProfile p;
  p.powers.assign(3, 1e-4);
  EXPECT_THROW(solve_trajectory(p, straight_line(s), s), ReferenceInfeasible);
}

TEST(Solve, FreeWaypointReachesSlotLandscapeMaximum) {
  // One user, one distant eavesdropper, no interference or SEE limits, and a
  // speed limit large enough that the middle waypoint can go anywhere.
  Scenario s;
  s.users = {{0, 0}};
  s.eves = {{{900, 900}, 10.0}};
  s.altitude = 100.0;
  s.q_start = {-400, -300};
  s.q_end = {-400, -300};
  s.n_slots = 3;
  s.v_max = 2000.0;
  s.p_max = 1.0;
  s.see_min = 0.0;
  s.radio.pe = 1e-5;
  PowerProfile p{{1e-3, 1e-3, 1e-3}};
  BcdConfig cfg;
  cfg.epsilon = 1e-9;
  cfg.max_iters = 40;
  cfg.init_power = p;
  const BcdResult r = run_benchmark(s, Scheme::FPOT, cfg);
  oracle::Lattice lat{-200, 200, -200, 200, 81, 81};
  const auto g = oracle::grid_oracle_trajectory_slot(1e-3, s, lat);
  const double rate = oracle::slot_secrecy(r.solution.trajectory.points[1], 1e-3, s);
  // Lattice spacing 5 m; the landscape is flat at the top, so half a cell
  // costs far less than 1e-3.
  EXPECT_GE(rate, g.best_rate - 1e-3);
  EXPECT_LT((r.solution.trajectory.points[1] - s.users[0]).norm(), 5.0);
}
