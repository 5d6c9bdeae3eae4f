#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uavsec/convex.hpp"
#include "uavsec/power.hpp"
#include "uavsec/trajectory.hpp"
#include "canned.hpp"
#include "test_util.hpp"

using namespace uavsec;
using convex::Index;
using convex::Matrix;
using convex::Vector;

using canned::log_term;
using canned::vec;

TEST(Canned, ClosedFormOptima) {
  for (const auto& c : canned::cases()) {
    const auto r = convex::solve(c.program, c.start);
    EXPECT_EQ(r.status, convex::Status::Converged) << c.name;
    for (Index i = 0; i < c.x_star.size(); ++i) EXPECT_NEAR(r.x_opt(i), c.x_star(i), 1e-6) << c.name;
    EXPECT_NEAR(r.obj, c.obj_star, 1e-6) << c.name;
  }
}

TEST(PhaseOne, RecoversFromInfeasibleStart) {
  // Same LP, started outside the feasible set.
  convex::ConvexProgram p;
  p.dim = 2;
  p.objective.push_back(convex::linear_term({0, 1}, vec({3.0, 2.0}), 0.0));
  p.inequalities.push_back(convex::linear_term({0, 1}, vec({1.0, 1.0}), -4.0));
  p.inequalities.push_back(convex::linear_term({0, 1}, vec({1.0, 3.0}), -6.0));
  p.lower = Vector::Zero(2);
  p.upper = Vector::Constant(2, INFINITY);
  const auto r = convex::solve(p, vec({10.0, 10.0}));
  EXPECT_EQ(r.status, convex::Status::Converged);
  EXPECT_NEAR(r.obj, 12.0, 1e-6);
}

TEST(PhaseOne, ReportsInfeasibleProgram) {
  // x <= -1 and x >= 1
  convex::ConvexProgram p;
  p.dim = 1;
  p.objective.push_back(convex::linear_term({0}, vec({1.0}), 0.0));
  p.inequalities.push_back(convex::linear_term({0}, vec({1.0}), 1.0));
  p.inequalities.push_back(convex::linear_term({0}, vec({-1.0}), 1.0));
  const auto r = convex::solve(p, vec({0.0}));
  EXPECT_EQ(r.status, convex::Status::Infeasible);
}

TEST(Barrier, CenteringValueIncreasesWithinEachStage) {
  convex::ConvexProgram p;
  p.dim = 2;
  p.objective = {log_term(0), log_term(1)};
  p.inequalities.push_back(convex::linear_term({0, 1}, vec({1.0, 2.0}), -1.0));
  convex::SolverOptions o;
  int stage = -1;
  bool ascending = true;
  double last = -INFINITY;
  o.on_step = [&](int s, double v) {
    if (s != stage) {
      stage = s;
      last = -INFINITY;
      return;
    }
    ascending = ascending && v >= last - 1e-12 * std::max(1.0, std::abs(last));
    last = v;
  };
  const auto r = convex::solve(p, vec({0.1, 0.1}), o);
  EXPECT_EQ(r.status, convex::Status::Converged);
  EXPECT_TRUE(ascending);
  EXPECT_NEAR(r.x_opt(0), 0.5, 1e-6);
  EXPECT_NEAR(r.x_opt(1), 0.25, 1e-6);
}

// Gradient checks on the terms the two subproblems actually build.

TEST(Gradients, PowerProgramTermsMatchFiniteDifferences) {
  const Scenario s = testutil::small_scenario(6);
  const Trajectory q = straight_line(s);
  const PowerCoefficients c = build_power_coeffs(q, s);
  std::mt19937_64 rng(0xC0FFEE + 11);
  std::uniform_real_distribution<double> u(0.0, 1e-2);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    PowerProfile ref;
    for (int i = 0; i < 6; ++i) ref.powers.push_back(u(rng));
    Scenario s2 = s;
    s2.gamma_it.assign(3, 1e-12);
    const auto prog = build_power_program(c, s2, ref);
    Vector x(6);
    for (int i = 0; i < 6; ++i) x(i) = u(rng) + 1e-4;
    for (const auto& t : prog.objective) {
      EXPECT_LE(testutil::gradient_error(t, convex::detail::gather(x, t.support)), 1e-4) << t.label;
      ++checked;
    }
    for (const auto& t : prog.inequalities) {
      EXPECT_LE(testutil::gradient_error(t, convex::detail::gather(x, t.support)), 1e-4) << t.label;
      ++checked;
    }
  }
  EXPECT_GE(checked, 600);
}

TEST(Gradients, TrajectoryProgramTermsMatchFiniteDifferences) {
  const Scenario s = testutil::small_scenario(6);
  const Trajectory ref = straight_line(s);
  PowerProfile p;
  p.powers.assign(6, 5e-4);
  const auto tp = build_trajectory_program(p, ref, s);
  std::mt19937_64 rng(0xC0FFEE + 12);
  std::normal_distribution<double> nq(0.0, 20.0);
  std::uniform_real_distribution<double> rel(0.9, 1.1);
  for (int trial = 0; trial < 100; ++trial) {
    Vector x = tp.seed;
    for (std::size_t i = 0; i < 6; ++i) {
      x(tp.layout.q(i, 0)) += nq(rng);
      x(tp.layout.q(i, 1)) += nq(rng);
    }
    for (Index j = 12; j < x.size(); ++j) x(j) *= rel(rng);
    for (const auto& t : tp.program.objective)
      EXPECT_LE(testutil::gradient_error(t, convex::detail::gather(x, t.support)), 1e-4) << t.label;
    for (const auto& t : tp.program.inequalities)
      EXPECT_LE(testutil::gradient_error(t, convex::detail::gather(x, t.support)), 1e-4) << t.label;
  }
}
