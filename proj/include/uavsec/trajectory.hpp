#pragma once

// Trajectory block: for fixed power the secrecy rate is bounded from below
// through slack variables
//   zeta_k(n) >= |q(n) - w_Dk|^2 + H^2          (user path loss)
//   xi_m(n)   <= (|q(n) - w_hat_m| - r_m)^2 + H^2 (eavesdropper path loss)
//   dt_r(n)   <= |q(n) - w_Ur|^2                 (primary distance)
// with the nonconvex sides replaced by first-order bounds at q_ref. The
// resulting program is concave in (q, zeta, xi, dt).
//
// Variable layout: [q (2N) | zeta (N*K) | xi (N*M) | dt (N*R_active)].

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "uavsec/convex.hpp"
#include "uavsec/errors.hpp"
#include "uavsec/model.hpp"

namespace uavsec {

/// Smoothing radius for |q - w_hat| inside solver callbacks (meters).
inline constexpr double kNormSmoothing = 1e-3;
/// xi floor as a fraction of H^2.
inline constexpr double kXiFloorFraction = 0.5;
/// dt floor as a fraction of -H^2; keeps 1/(dt + H^2) bounded.
inline constexpr double kDtFloorFraction = 0.5;

struct TrajectoryProgramPoint {
  Trajectory q_ref;
  Eigen::MatrixXd f1;        // K x N
  Eigen::VectorXd f2;        // N
  Eigen::MatrixXd zeta_ref;  // K x N, |q_ref - w_Dk|^2 + H^2
};

struct TrajectoryLayout {
  std::size_t n = 0, k = 0, m = 0;
  std::vector<std::size_t> primaries;  // primaries whose interference row is kept

  convex::Index q(std::size_t slot, int axis) const { return static_cast<convex::Index>(2 * slot + static_cast<std::size_t>(axis)); }
  convex::Index zeta(std::size_t slot, std::size_t user) const { return static_cast<convex::Index>(2 * n + slot * k + user); }
  convex::Index xi(std::size_t slot, std::size_t eve) const { return static_cast<convex::Index>(2 * n + n * k + slot * m + eve); }
  convex::Index dt(std::size_t slot, std::size_t j) const {
    return static_cast<convex::Index>(2 * n + n * k + n * m + slot * primaries.size() + j);
  }
  convex::Index dim() const { return static_cast<convex::Index>(2 * n + n * k + n * m + n * primaries.size()); }
};

struct TrajectoryProgram {
  convex::ConvexProgram program;
  TrajectoryLayout layout;
  TrajectoryProgramPoint point;
  convex::Vector seed;  // q_ref with (nearly) binding slacks
};

inline TrajectoryProgramPoint make_program_point(const PowerProfile& power, const Trajectory& q_ref,
                                                 const Scenario& scen) {
  const std::size_t n = scen.n_slots, k = scen.num_users();
  const LinkConstants links = link_constants(scen);
  const double rho0 = scen.radio.rho0();
  const double h2 = scen.altitude * scen.altitude;
  TrajectoryProgramPoint pt;
  pt.q_ref = q_ref;
  pt.f1.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  pt.f2.resize(static_cast<Eigen::Index>(n));
  pt.zeta_ref.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double p = power.powers[i];
    pt.f2(static_cast<Eigen::Index>(i)) = rho0 * p;
    for (std::size_t u = 0; u < k; ++u) {
      // P / (pe * sum_m A^-alpha + 1/rho0) == P * beta0 / impairment_k
      pt.f1(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) =
          p * scen.radio.beta0 / links.user_impairment[u];
      pt.zeta_ref(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) =
          (q_ref.points[i] - scen.users[u]).squaredNorm() + h2;
    }
  }
  return pt;
}

/// Lower bound of the slot-n secrecy rate in the slack variables.
inline double slot_rate_lower_bound(const TrajectoryProgramPoint& pt, std::size_t slot,
                                    const Eigen::Ref<const Eigen::VectorXd>& zeta,
                                    const Eigen::Ref<const Eigen::VectorXd>& xi) {
  constexpr double ln2 = std::numbers::ln2;
  const auto s = static_cast<Eigen::Index>(slot);
  double big_f = 0.0, corr = 0.0, g = 0.0;
  for (Eigen::Index u = 0; u < pt.f1.rows(); ++u) {
    const double zr = pt.zeta_ref(u, s);
    big_f += pt.f1(u, s) / zr;
    corr += pt.f1(u, s) / (zr * zr) * (zeta(u) - zr);
  }
  for (Eigen::Index e = 0; e < xi.size(); ++e) g += pt.f2(s) / xi(e);
  return std::log2(1.0 + big_f) - std::log2(1.0 + g) - corr / (ln2 * (1.0 + big_f));
}

/// Exact slot-n secrecy rate before clamping, written in the slack form.
inline double slot_rate_exact(const TrajectoryProgramPoint& pt, std::size_t slot, const Vec2& q, const Scenario& scen) {
  const auto s = static_cast<Eigen::Index>(slot);
  const double h2 = scen.altitude * scen.altitude;
  double legit = 0.0, eve = 0.0;
  for (std::size_t u = 0; u < scen.num_users(); ++u)
    legit += pt.f1(static_cast<Eigen::Index>(u), s) / ((q - scen.users[u]).squaredNorm() + h2);
  for (const auto& e : scen.eves) {
    const double gap = (q - e.estimate).norm() - e.radius;
    eve += pt.f2(s) / (gap * gap + h2);
  }
  return std::log2(1.0 + legit) - std::log2(1.0 + eve);
}

namespace detail {

/// Evaluation of slot_rate_lower_bound with derivatives over [zeta(n), xi(n)].
inline std::optional<convex::Evaluation> slot_bound_eval(const TrajectoryProgramPoint& pt, std::size_t slot,
                                                         std::size_t k, std::size_t m, double scale,
                                                         const convex::Vector& local, bool deriv) {
  constexpr double ln2 = std::numbers::ln2;
  const auto s = static_cast<Eigen::Index>(slot);
  const auto ki = static_cast<Eigen::Index>(k), mi = static_cast<Eigen::Index>(m);
  double g = 0.0;
  for (Eigen::Index e = 0; e < mi; ++e) {
    const double xi = local(ki + e);
    if (!(xi > 0.0)) return std::nullopt;
    g += pt.f2(s) / xi;
  }
  double big_f = 0.0;
  for (Eigen::Index u = 0; u < ki; ++u) big_f += pt.f1(u, s) / pt.zeta_ref(u, s);
  convex::Evaluation ev;
  ev.value = scale * slot_rate_lower_bound(pt, slot, local.head(ki), local.tail(mi));
  if (deriv) {
    ev.gradient.resize(ki + mi);
    ev.hessian = convex::Matrix::Zero(ki + mi, ki + mi);
    for (Eigen::Index u = 0; u < ki; ++u) {
      const double zr = pt.zeta_ref(u, s);
      ev.gradient(u) = -scale * pt.f1(u, s) / (zr * zr) / (ln2 * (1.0 + big_f));
    }
    // -log2(1 + G), G = sum f2 / xi
    const double h1 = -1.0 / (ln2 * (1.0 + g));
    const double h2 = 1.0 / (ln2 * (1.0 + g) * (1.0 + g));
    convex::Vector dg(mi);
    for (Eigen::Index e = 0; e < mi; ++e) {
      const double xi = local(ki + e);
      dg(e) = -pt.f2(s) / (xi * xi);
    }
    for (Eigen::Index e = 0; e < mi; ++e) {
      ev.gradient(ki + e) = scale * h1 * dg(e);
      for (Eigen::Index f = 0; f < mi; ++f) ev.hessian(ki + e, ki + f) = scale * h2 * dg(e) * dg(f);
      const double xi = local(ki + e);
      ev.hessian(ki + e, ki + e) += scale * h1 * 2.0 * pt.f2(s) / (xi * xi * xi);
    }
  }
  return ev;
}

/// Farthest any waypoint of slot `slot` can be from w, given the speed limit.
inline double reach_bound(const Scenario& scen, std::size_t slot, const Vec2& w) {
  const double step = scen.max_step();
  const double from_start = (scen.q_start - w).norm() + static_cast<double>(slot) * step;
  const double from_end = (scen.q_end - w).norm() + static_cast<double>(scen.n_slots - 1 - slot) * step;
  return std::min(from_start, from_end);
}

}  // namespace detail

/// True if primary r's interference constraint holds for every trajectory.
inline bool interference_row_redundant(const PowerProfile& power, const Scenario& scen, std::size_t r,
                                       double jamming) {
  const double gamma = scen.gamma_it[r];
  if (std::isinf(gamma)) return true;
  double worst = 0.0;
  for (double p : power.powers) worst += p * scen.radio.beta0 / (scen.altitude * scen.altitude);
  return worst / static_cast<double>(power.size()) + jamming <= gamma;
}

inline TrajectoryProgram build_trajectory_program(const PowerProfile& power, const Trajectory& q_ref,
                                                  const Scenario& scen) {
  using convex::Evaluation;
  using convex::Index;
  using convex::Matrix;
  using convex::Term;
  using convex::Vector;

  const std::size_t n = scen.n_slots, k = scen.num_users(), m = scen.num_eves();
  if (q_ref.size() != n || power.size() != n)
    throw std::invalid_argument("build_trajectory_program: length does not match n_slots");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = 0; e < m; ++e) {
      const double d = (q_ref.points[i] - scen.eves[e].estimate).norm();
      if (d < scen.eves[e].radius)
        throw ReferenceInfeasible("reference waypoint " + std::to_string(i) + " lies inside the uncertainty disc of eavesdropper " +
                                  std::to_string(e));
    }

  const double h2 = scen.altitude * scen.altitude;
  const double inv_n = 1.0 / static_cast<double>(n);
  const LinkConstants links = link_constants(scen);

  TrajectoryProgram tp;
  tp.point = make_program_point(power, q_ref, scen);
  TrajectoryLayout& lay = tp.layout;
  lay.n = n;
  lay.k = k;
  lay.m = m;
  for (std::size_t r = 0; r < scen.num_primaries(); ++r)
    if (!interference_row_redundant(power, scen, r, links.primary_jamming[r])) lay.primaries.push_back(r);

  convex::ConvexProgram& prog = tp.program;
  prog.dim = lay.dim();
  const double inf = std::numeric_limits<double>::infinity();
  prog.lower = Vector::Constant(prog.dim, -inf);
  prog.upper = Vector::Constant(prog.dim, inf);

  const auto pt = std::make_shared<const TrajectoryProgramPoint>(tp.point);

  // Objective: mean slot lower bound.
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Index> support;
    for (std::size_t u = 0; u < k; ++u) support.push_back(lay.zeta(i, u));
    for (std::size_t e = 0; e < m; ++e) support.push_back(lay.xi(i, e));
    prog.objective.push_back(Term{support,
                                  [pt, i, k, m, inv_n](const Vector& x, bool deriv) {
                                    return detail::slot_bound_eval(*pt, i, k, m, inv_n, x, deriv);
                                  },
                                  "rate_lb"});
  }

  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& qr = q_ref.points[i];
    // (i) user slack: (|q - w|^2 + H^2 - zeta) / H^2 <= 0, zeta capped by reachability.
    for (std::size_t u = 0; u < k; ++u) {
      const Vec2 w = scen.users[u];
      Matrix q = Matrix::Zero(3, 3);
      q(0, 0) = q(1, 1) = 2.0 / h2;
      Vector c(3);
      c << -2.0 * w.x() / h2, -2.0 * w.y() / h2, -1.0 / h2;
      prog.inequalities.push_back(
          convex::quadratic_term({lay.q(i, 0), lay.q(i, 1), lay.zeta(i, u)}, q, c, (w.squaredNorm() + h2) / h2, "user_slack"));
      const double reach = detail::reach_bound(scen, i, w);
      prog.upper(lay.zeta(i, u)) = 2.0 * (reach * reach + h2);
    }
    // (ii) eavesdropper slack against the first-order lower bound of |q - w_hat|^2.
    for (std::size_t e = 0; e < m; ++e) {
      const Vec2 w = scen.eves[e].estimate;
      const double r = scen.eves[e].radius;
      const Vec2 g = qr - w;
      const double base = h2 + r * r + g.squaredNorm();
      prog.inequalities.push_back(Term{
          {lay.q(i, 0), lay.q(i, 1), lay.xi(i, e)},
          [w, r, g, qr, base, h2](const Vector& x, bool deriv) -> std::optional<Evaluation> {
            const Vec2 q(x(0), x(1));
            const Vec2 d = q - w;
            const double s = std::sqrt(d.squaredNorm() + kNormSmoothing * kNormSmoothing);
            Evaluation ev;
            ev.value = (x(2) - base + 2.0 * r * s - 2.0 * g.dot(q - qr)) / h2;
            if (deriv) {
              ev.gradient.resize(3);
              ev.gradient.head<2>() = (2.0 * r * d / s - 2.0 * g) / h2;
              ev.gradient(2) = 1.0 / h2;
              ev.hessian = Matrix::Zero(3, 3);
              ev.hessian.topLeftCorner<2, 2>() =
                  2.0 * r * (Eigen::Matrix2d::Identity() / s - d * d.transpose() / (s * s * s)) / h2;
            }
            return ev;
          },
          "eve_slack"});
      // (iii) positivity floor.
      prog.lower(lay.xi(i, e)) = kXiFloorFraction * h2;
    }
    // (v) primary slack against the first-order lower bound of |q - w_U|^2.
    for (std::size_t j = 0; j < lay.primaries.size(); ++j) {
      const Vec2 w = scen.primaries[lay.primaries[j]];
      const Vec2 g = qr - w;
      Vector c(3);
      c << -2.0 * g.x() / h2, -2.0 * g.y() / h2, 1.0 / h2;
      const double off = (-g.squaredNorm() + 2.0 * g.dot(qr)) / h2;
      prog.inequalities.push_back(convex::linear_term({lay.q(i, 0), lay.q(i, 1), lay.dt(i, j)}, c, off, "primary_slack"));
      prog.lower(lay.dt(i, j)) = -kDtFloorFraction * h2;
    }
  }

  // (iv) interference, relative to the threshold.
  for (std::size_t j = 0; j < lay.primaries.size(); ++j) {
    const std::size_t r = lay.primaries[j];
    const double gamma = scen.gamma_it[r];
    const double jam = links.primary_jamming[r];
    std::vector<Index> support;
    Vector coef(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      support.push_back(lay.dt(i, j));
      coef(static_cast<Index>(i)) = scen.radio.beta0 * power.powers[i] * inv_n / gamma;
    }
    prog.inequalities.push_back(Term{
        support,
        [coef, h2, jam, gamma](const Vector& x, bool deriv) -> std::optional<Evaluation> {
          Evaluation ev;
          double v = (jam - gamma) / gamma;
          const Index nn = x.size();
          if (deriv) {
            ev.gradient.resize(nn);
            ev.hessian = Matrix::Zero(nn, nn);
          }
          for (Index i = 0; i < nn; ++i) {
            const double den = x(i) + h2;
            if (!(den > 0.0)) return std::nullopt;
            v += coef(i) / den;
            if (deriv) {
              ev.gradient(i) = -coef(i) / (den * den);
              ev.hessian(i, i) = 2.0 * coef(i) / (den * den * den);
            }
          }
          ev.value = v;
          return ev;
        },
        "interference"});
  }

  // (vi) secrecy energy efficiency: (psi * sum P - sum slot bounds) / N <= 0.
  if (scen.see_min > 0.0) {
    std::vector<Index> support;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t u = 0; u < k; ++u) support.push_back(lay.zeta(i, u));
      for (std::size_t e = 0; e < m; ++e) support.push_back(lay.xi(i, e));
    }
    double psi_power = 0.0;
    for (double p : power.powers) psi_power += scen.see_min * p;
    const std::size_t block = k + m;
    prog.inequalities.push_back(Term{
        support,
        [pt, n, k, m, block, inv_n, psi_power](const Vector& x, bool deriv) -> std::optional<Evaluation> {
          const auto bi = static_cast<Index>(block);
          Evaluation ev;
          ev.value = inv_n * psi_power;
          if (deriv) {
            ev.gradient.resize(x.size());
            ev.hessian = Matrix::Zero(x.size(), x.size());
          }
          for (std::size_t i = 0; i < n; ++i) {
            const Vector local = x.segment(static_cast<Index>(i) * bi, bi);
            auto slot = detail::slot_bound_eval(*pt, i, k, m, inv_n, local, deriv);
            if (!slot) return std::nullopt;
            ev.value -= slot->value;
            if (deriv) {
              ev.gradient.segment(static_cast<Index>(i) * bi, bi) = -slot->gradient;
              ev.hessian.block(static_cast<Index>(i) * bi, static_cast<Index>(i) * bi, bi, bi) = -slot->hessian;
            }
          }
          return ev;
        },
        "see"});
  }

  // (vii) endpoints and speed limit.
  const Index eq_rows = n == 1 ? 2 : 4;
  prog.eq_a = Matrix::Zero(eq_rows, prog.dim);
  prog.eq_b = Vector::Zero(eq_rows);
  prog.eq_a(0, lay.q(0, 0)) = 1.0;
  prog.eq_a(1, lay.q(0, 1)) = 1.0;
  prog.eq_b << scen.q_start.x(), scen.q_start.y(), Vector::Zero(eq_rows - 2);
  if (n > 1) {
    prog.eq_a(2, lay.q(n - 1, 0)) = 1.0;
    prog.eq_a(3, lay.q(n - 1, 1)) = 1.0;
    prog.eq_b(2) = scen.q_end.x();
    prog.eq_b(3) = scen.q_end.y();
  }
  const double step = scen.max_step();
  for (std::size_t i = 1; i < n; ++i) {
    convex::Cone cone;
    cone.support = {lay.q(i - 1, 0), lay.q(i - 1, 1), lay.q(i, 0), lay.q(i, 1)};
    cone.a = Matrix::Zero(2, 4);
    cone.a(0, 0) = cone.a(1, 1) = -1.0 / step;
    cone.a(0, 2) = cone.a(1, 3) = 1.0 / step;
    cone.b = Vector::Zero(2);
    cone.c = Vector::Zero(4);
    cone.d = 1.0;
    cone.label = "speed";
    prog.cones.push_back(std::move(cone));
  }

  // Seed: q_ref with slacks just inside their bounds.
  tp.seed = Vector::Zero(prog.dim);
  const double nudge = 1e-6 * h2;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& qr = q_ref.points[i];
    tp.seed(lay.q(i, 0)) = qr.x();
    tp.seed(lay.q(i, 1)) = qr.y();
    for (std::size_t u = 0; u < k; ++u)
      tp.seed(lay.zeta(i, u)) = tp.point.zeta_ref(static_cast<Index>(u), static_cast<Index>(i)) + nudge;
    for (std::size_t e = 0; e < m; ++e) {
      const Vec2 d = qr - scen.eves[e].estimate;
      const double r = scen.eves[e].radius;
      const double s = std::sqrt(d.squaredNorm() + kNormSmoothing * kNormSmoothing);
      const double rhs = h2 + r * r - 2.0 * r * s + d.squaredNorm();
      tp.seed(lay.xi(i, e)) = std::max(rhs - nudge, kXiFloorFraction * h2 + nudge);
    }
    for (std::size_t j = 0; j < lay.primaries.size(); ++j)
      tp.seed(lay.dt(i, j)) = std::max((qr - scen.primaries[lay.primaries[j]]).squaredNorm() - nudge,
                                       -kDtFloorFraction * h2 + nudge);
  }
  return tp;
}

inline Trajectory extract_trajectory(const TrajectoryLayout& lay, const convex::Vector& x) {
  Trajectory t;
  t.points.reserve(lay.n);
  for (std::size_t i = 0; i < lay.n; ++i) t.points.emplace_back(x(lay.q(i, 0)), x(lay.q(i, 1)));
  return t;
}

struct TrajectorySolveResult {
  Trajectory trajectory;
  double objective = 0.0;            // mean slot lower bound reported by the solver
  double exact_objective = 0.0;      // WASR at `trajectory`
  double reference_objective = 0.0;  // WASR at q_ref
  convex::SolverReport report;
  int shrink_steps = 0;
  bool kept_reference = false;
};

/// Exact (clamped) WASR plus an exact feasibility audit of (q, power).
inline std::pair<double, bool> exact_trajectory_score(const Trajectory& q, const PowerProfile& power,
                                                      const Scenario& scen) {
  try {
    const Solution sol = evaluate_solution(q, power, scen);
    const ConstraintAudit audit = audit_solution(sol, scen);
    return {sol.wasr, audit.feasible()};
  } catch (const EveExclusionViolated&) {
    return {-std::numeric_limits<double>::infinity(), false};
  }
}

/// Solves the trajectory block for fixed power around q_ref.
inline TrajectorySolveResult solve_trajectory(const PowerProfile& power, const Trajectory& q_ref, const Scenario& scen,
                                              const convex::SolverOptions& opts = {}) {
  TrajectoryProgram tp = build_trajectory_program(power, q_ref, scen);
  TrajectorySolveResult res;
  res.reference_objective = exact_trajectory_score(q_ref, power, scen).first;
  res.report = convex::solve(tp.program, tp.seed, opts);
  res.objective = res.report.obj;

  const bool usable = res.report.status != convex::Status::Infeasible &&
                      res.report.status != convex::Status::NumericalFailure &&
                      res.report.max_violation <= opts.tol_feas;
  res.trajectory = q_ref;
  res.kept_reference = true;
  res.exact_objective = res.reference_objective;
  if (!usable) return res;

  const Trajectory target = extract_trajectory(tp.layout, res.report.x_opt);
  // Step back toward q_ref while a waypoint sits inside an uncertainty disc.
  double frac = 1.0;
  for (int attempt = 0; attempt <= 10; ++attempt, frac *= 0.5) {
    Trajectory cand;
    cand.points.reserve(scen.n_slots);
    for (std::size_t i = 0; i < scen.n_slots; ++i)
      cand.points.push_back(q_ref.points[i] + frac * (target.points[i] - q_ref.points[i]));
    bool excluded = true;
    for (const auto& q : cand.points)
      for (const auto& e : scen.eves)
        if ((q - e.estimate).norm() < e.radius) excluded = false;
    if (!excluded) continue;
    res.shrink_steps = attempt;
    const auto [score, feasible] = exact_trajectory_score(cand, power, scen);
    if (feasible && score >= res.reference_objective) {
      res.trajectory = std::move(cand);
      res.exact_objective = score;
      res.kept_reference = false;
    }
    return res;
  }
  throw ReferenceInfeasible("optimized trajectory stays inside an uncertainty disc after 10 step halvings");
}

}  // namespace uavsec
