#pragma once

// Transmit-power block: for a fixed trajectory the secrecy rate of slot n is
//   log2(1 + a_n p) - log2(1 + b_n p),
// whose second log is replaced by its tangent at the reference power. The
// resulting concave program is solved with the barrier engine.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "uavsec/convex.hpp"
#include "uavsec/errors.hpp"
#include "uavsec/model.hpp"

namespace uavsec {

struct PowerCoefficients {
  std::vector<double> a;          // effective legitimate SINR per watt
  std::vector<double> b;          // colluding eavesdropper SNR per watt
  Eigen::MatrixXd it_rows;        // R x N, h_SUr(n)
  std::vector<double> it_const;   // R, mean jamming received by each primary
};

inline PowerCoefficients build_power_coeffs(const Trajectory& traj, const Scenario& scen) {
  const std::size_t n = traj.size();
  const LinkConstants links = link_constants(scen);
  PowerCoefficients c;
  c.a.resize(n);
  c.b.resize(n);
  c.it_rows.resize(static_cast<Eigen::Index>(scen.num_primaries()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& q = traj.points[i];
    c.a[i] = legit_gain_sum(q, scen, links);
    c.b[i] = eve_gain_sum(q, scen);
    for (std::size_t r = 0; r < scen.num_primaries(); ++r)
      c.it_rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) =
          a2g_gain(q, scen.primaries[r], scen.altitude, scen.radio);
  }
  c.it_const = links.primary_jamming;
  return c;
}

/// log2(1 + a p) - log2(1 + b p), the secrecy rate before clamping.
inline double secrecy_unclamped(double p, double a, double b) {
  return std::log2(1.0 + a * p) - std::log2(1.0 + b * p);
}

/// Concave minorant of secrecy_unclamped, tight at p_ref.
inline double surrogate_secrecy(double p, double p_ref, double a, double b) {
  const double denom = 1.0 + b * p_ref;
  return std::log2(1.0 + a * p) - std::log2(denom) - b / (std::numbers::ln2 * denom) * (p - p_ref);
}

/// Mean of secrecy_unclamped over the horizon.
inline double mean_secrecy_unclamped(const PowerCoefficients& c, const PowerProfile& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += secrecy_unclamped(p.powers[i], c.a[i], c.b[i]);
  return s / static_cast<double>(p.size());
}

/// Mean of the clamped secrecy rate, i.e. the WASR for this trajectory.
inline double mean_secrecy_clamped(const PowerCoefficients& c, const PowerProfile& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::max(0.0, secrecy_unclamped(p.powers[i], c.a[i], c.b[i]));
  return s / static_cast<double>(p.size());
}

inline double mean_surrogate(const PowerCoefficients& c, const PowerProfile& p, const PowerProfile& p_ref) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += surrogate_secrecy(p.powers[i], p_ref.powers[i], c.a[i], c.b[i]);
  return s / static_cast<double>(p.size());
}

/// Mean interference at primary r under power p.
inline double mean_interference(const PowerCoefficients& c, std::size_t r, const PowerProfile& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += c.it_rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) * p.powers[i];
  return s / static_cast<double>(p.size()) + c.it_const[r];
}

/// Throws InfeasibleScenario if the jamming alone breaks some threshold.
inline void check_jamming_budget(const Scenario& scen, const std::vector<double>& jamming) {
  for (std::size_t r = 0; r < scen.num_primaries(); ++r)
    if (jamming[r] >= scen.gamma_it[r])
      throw InfeasibleScenario("eavesdropper jamming alone (" + std::to_string(jamming[r]) +
                               " W) reaches the interference threshold of primary " + std::to_string(r) +
                               " (" + std::to_string(scen.gamma_it[r]) + " W)");
}

/// Uniformly scales p down until every interference constraint holds strictly.
inline PowerProfile repair_interference(const PowerCoefficients& c, const Scenario& scen, PowerProfile p) {
  for (double& x : p.powers) x = std::clamp(x, 0.0, scen.p_max);
  double scale = 1.0;
  for (std::size_t r = 0; r < scen.num_primaries(); ++r) {
    const double gamma = scen.gamma_it[r];
    if (std::isinf(gamma)) continue;
    const double own = mean_interference(c, r, p) - c.it_const[r];
    const double budget = gamma - c.it_const[r];
    if (own >= budget) scale = std::min(scale, budget / own * (1.0 - 1e-9));
  }
  if (scale < 1.0)
    for (double& x : p.powers) x *= scale;
  return p;
}

/// Assembles the power program around p_ref. Interference rows that cannot
/// bind under the power box are left out.
inline convex::ConvexProgram build_power_program(const PowerCoefficients& c, const Scenario& scen,
                                                 const PowerProfile& p_ref) {
  using convex::Evaluation;
  using convex::Index;
  using convex::Matrix;
  using convex::Vector;
  const std::size_t n = p_ref.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  constexpr double ln2 = std::numbers::ln2;

  convex::ConvexProgram prog;
  prog.dim = static_cast<Index>(n);
  prog.lower = Vector::Zero(prog.dim);
  prog.upper = Vector::Constant(prog.dim, scen.p_max);

  for (std::size_t i = 0; i < n; ++i) {
    const double a = c.a[i], b = c.b[i], pr = p_ref.powers[i];
    const double slope = b / (ln2 * (1.0 + b * pr));
    prog.objective.push_back(convex::Term{
        {static_cast<Index>(i)},
        [a, b, pr, slope, inv_n](const Vector& x, bool deriv) -> std::optional<Evaluation> {
          const double p = x(0);
          if (!(1.0 + a * p > 0.0)) return std::nullopt;
          Evaluation e;
          e.value = inv_n * surrogate_secrecy(p, pr, a, b);
          if (deriv) {
            const double den = 1.0 + a * p;
            e.gradient = Vector::Constant(1, inv_n * (a / (ln2 * den) - slope));
            e.hessian = Matrix::Constant(1, 1, -inv_n * a * a / (ln2 * den * den));
          }
          return e;
        },
        "surrogate"});
  }

  if (scen.see_min > 0.0) {
    // (psi * sum p - sum surrogate) / N <= 0
    std::vector<Index> support(n);
    for (std::size_t i = 0; i < n; ++i) support[i] = static_cast<Index>(i);
    const double psi = scen.see_min;
    prog.inequalities.push_back(convex::Term{
        support,
        [c, p_ref, psi, inv_n, n](const Vector& x, bool deriv) -> std::optional<Evaluation> {
          Evaluation e;
          double v = 0.0;
          if (deriv) {
            e.gradient.resize(static_cast<Index>(n));
            e.hessian = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(n));
          }
          for (std::size_t i = 0; i < n; ++i) {
            const double p = x(static_cast<Index>(i));
            const double a = c.a[i], b = c.b[i], pr = p_ref.powers[i];
            if (!(1.0 + a * p > 0.0)) return std::nullopt;
            v += psi * p - surrogate_secrecy(p, pr, a, b);
            if (deriv) {
              const double den = 1.0 + a * p;
              const auto ii = static_cast<Index>(i);
              e.gradient(ii) = inv_n * (psi - a / (ln2 * den) + b / (ln2 * (1.0 + b * pr)));
              e.hessian(ii, ii) = inv_n * a * a / (ln2 * den * den);
            }
          }
          e.value = inv_n * v;
          return e;
        },
        "see"});
  }

  for (std::size_t r = 0; r < scen.num_primaries(); ++r) {
    const double gamma = scen.gamma_it[r];
    if (std::isinf(gamma)) continue;
    const Vector row = c.it_rows.row(static_cast<Index>(r)).transpose();
    if (inv_n * row.sum() * scen.p_max + c.it_const[r] <= gamma) continue;
    // Scaled by 1/Gamma_r so the residual is relative.
    std::vector<Index> support(n);
    for (std::size_t i = 0; i < n; ++i) support[i] = static_cast<Index>(i);
    prog.inequalities.push_back(
        convex::linear_term(support, row * (inv_n / gamma), (c.it_const[r] - gamma) / gamma, "it"));
  }
  return prog;
}

struct PowerSolveResult {
  PowerProfile power;
  double objective = 0.0;            // mean surrogate at `power`
  double exact_objective = 0.0;      // mean unclamped secrecy at `power`
  double reference_objective = 0.0;  // mean unclamped secrecy at the (repaired) reference
  PowerProfile reference;
  convex::SolverReport report;
  bool kept_reference = false;
};

/// Solves the power block for a fixed trajectory, linearized at p_ref.
inline PowerSolveResult solve_power(const Trajectory& traj, const Scenario& scen, const PowerProfile& p_ref,
                                    const convex::SolverOptions& opts = {}) {
  if (traj.size() != scen.n_slots || p_ref.size() != scen.n_slots)
    throw std::invalid_argument("solve_power: trajectory/power length does not match n_slots");
  const PowerCoefficients c = build_power_coeffs(traj, scen);
  check_jamming_budget(scen, c.it_const);

  PowerSolveResult res;
  res.reference = repair_interference(c, scen, p_ref);
  res.reference_objective = mean_secrecy_unclamped(c, res.reference);

  const convex::ConvexProgram prog = build_power_program(c, scen, res.reference);
  const convex::Vector x0 = Eigen::Map<const convex::Vector>(res.reference.powers.data(),
                                                             static_cast<Eigen::Index>(scen.n_slots));
  res.report = convex::solve(prog, x0, opts);

  PowerProfile candidate;
  candidate.powers.resize(scen.n_slots);
  for (std::size_t i = 0; i < scen.n_slots; ++i)
    candidate.powers[i] = std::clamp(res.report.x_opt(static_cast<Eigen::Index>(i)), 0.0, scen.p_max);

  const bool usable = res.report.status != convex::Status::Infeasible &&
                      res.report.status != convex::Status::NumericalFailure &&
                      res.report.max_violation <= opts.tol_feas;
  const double cand_exact = mean_secrecy_unclamped(c, candidate);
  if (usable && cand_exact >= res.reference_objective &&
      mean_secrecy_clamped(c, candidate) >= mean_secrecy_clamped(c, res.reference)) {
    res.power = std::move(candidate);
  } else {
    res.power = res.reference;
    res.kept_reference = true;
  }
  res.exact_objective = mean_secrecy_unclamped(c, res.power);
  res.objective = mean_surrogate(c, res.power, res.reference);
  return res;
}

}  // namespace uavsec
