#pragma once

// Block coordinate ascent over power and trajectory, plus the frozen-block
// benchmark schemes and the interference-threshold sweep.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "uavsec/convex.hpp"
#include "uavsec/errors.hpp"
#include "uavsec/model.hpp"
#include "uavsec/power.hpp"
#include "uavsec/trajectory.hpp"

namespace uavsec {

enum class Scheme { FPFT, FPOT, OPFT, Proposed };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::FPFT: return "fpft";
    case Scheme::FPOT: return "fpot";
    case Scheme::OPFT: return "opft";
    case Scheme::Proposed: return "proposed";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& s) {
  if (s == "fpft") return Scheme::FPFT;
  if (s == "fpot") return Scheme::FPOT;
  if (s == "opft") return Scheme::OPFT;
  if (s == "proposed") return Scheme::Proposed;
  return std::nullopt;
}

inline bool optimizes_power(Scheme s) { return s == Scheme::OPFT || s == Scheme::Proposed; }
inline bool optimizes_trajectory(Scheme s) { return s == Scheme::FPOT || s == Scheme::Proposed; }

struct BcdConfig {
  double epsilon = 0.01;
  int max_iters = 50;
  std::optional<Trajectory> init_trajectory;  // straight line when empty
  double init_fraction = 0.5;                 // of p_max, used when init_power is empty
  std::optional<PowerProfile> init_power;
  // Extra threshold the initial power must respect at any UAV position.
  std::optional<double> init_worst_case_gamma;
  convex::SolverOptions solver;

  void validate() const {
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive, got " + std::to_string(epsilon));
    if (max_iters < 1) throw ValidationError("max_iters must be at least 1, got " + std::to_string(max_iters));
    if (!(init_fraction >= 0.0 && init_fraction <= 1.0))
      throw ValidationError("init_fraction must lie in [0, 1], got " + std::to_string(init_fraction));
  }
};

struct IterationRecord {
  int iter = 0;
  double wasr_exact = 0.0;
  double wasr_surrogate_power = std::numeric_limits<double>::quiet_NaN();
  double wasr_surrogate_traj = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> see;
  double max_it_violation = 0.0;
  std::optional<convex::SolverReport> power_report;
  std::optional<convex::SolverReport> traj_report;
  bool power_kept_reference = false;
  bool traj_kept_reference = false;
};

struct BcdTrace {
  double initial_wasr = 0.0;
  std::vector<IterationRecord> records;
  bool converged = false;
  std::string status = "ok";

  std::vector<double> wasr_history() const {
    std::vector<double> h{initial_wasr};
    for (const auto& r : records) h.push_back(r.wasr_exact);
    return h;
  }
};

namespace detail {

inline double unclamped_secrecy_sum(const PowerCoefficients& c, const PowerProfile& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += secrecy_unclamped(p.powers[i], c.a[i], c.b[i]);
  return s;
}

inline double power_sum(const PowerProfile& p) {
  double s = 0.0;
  for (double x : p.powers) s += x;
  return s;
}

}  // namespace detail

/// Flies to `via` at 95% of the speed limit, hovers, then flies to q_end.
/// Empty if the horizon is too short or a waypoint enters an uncertainty disc.
inline std::optional<Trajectory> detour_trajectory(const Scenario& scen, const Vec2& via) {
  const double step = 0.95 * scen.max_step();
  const auto n1 = static_cast<std::size_t>(std::ceil((via - scen.q_start).norm() / step));
  const auto n2 = static_cast<std::size_t>(std::ceil((scen.q_end - via).norm() / step));
  if (scen.n_slots < n1 + n2 + 1) return std::nullopt;
  Trajectory t;
  for (std::size_t i = 0; i <= n1; ++i)
    t.points.push_back(n1 == 0 ? scen.q_start
                               : Vec2(scen.q_start + (static_cast<double>(i) / static_cast<double>(n1)) * (via - scen.q_start)));
  while (t.points.size() < scen.n_slots - n2) t.points.push_back(t.points.back());
  for (std::size_t i = 1; i <= n2; ++i)
    t.points.push_back(via + (static_cast<double>(i) / static_cast<double>(n2)) * (scen.q_end - via));
  for (const auto& q : t.points)
    for (const auto& e : scen.eves)
      if ((q - e.estimate).norm() < e.radius) return std::nullopt;
  return t;
}

namespace detail {

inline void check_exclusion(const Trajectory& q, const Scenario& scen) {
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t m = 0; m < scen.num_eves(); ++m) {
      const double d = (q.points[i] - scen.eves[m].estimate).norm();
      if (d < scen.eves[m].radius)
        throw InfeasibleScenario("initial trajectory enters the uncertainty disc of eavesdropper " + std::to_string(m) +
                                 " at slot " + std::to_string(i) + " (distance " + std::to_string(d) + " m, radius " +
                                 std::to_string(scen.eves[m].radius) + " m)");
    }
}

/// Initial power for trajectory q: interference repair, then SEE repair.
inline PowerProfile initial_power(const Trajectory& q, const Scenario& scen, const BcdConfig& cfg,
                                  const LinkConstants& links) {
  PowerProfile p;
  if (cfg.init_power) {
    p = *cfg.init_power;
    if (p.size() != scen.n_slots) throw ValidationError("initial power length does not match n_slots");
  } else {
    p.powers.assign(scen.n_slots, cfg.init_fraction * scen.p_max);
  }
  const PowerCoefficients c = build_power_coeffs(q, scen);
  p = repair_interference(c, scen, p);

  if (cfg.init_worst_case_gamma) {
    const double gamma = *cfg.init_worst_case_gamma;
    double jam = 0.0;
    for (double j : links.primary_jamming) jam = std::max(jam, j);
    if (jam >= gamma) throw InfeasibleScenario("jamming alone reaches the common sweep threshold");
    const double mean_p = power_sum(p) / static_cast<double>(p.size());
    const double worst = scen.radio.beta0 / (scen.altitude * scen.altitude) * mean_p;
    if (worst + jam > gamma) {
      const double scale = (gamma - jam) / worst * (1.0 - 1e-9);
      for (double& x : p.powers) x *= scale;
    }
  }

  // Per-slot rate over power grows as power shrinks, so halving restores SEE.
  if (scen.see_min > 0.0) {
    auto see_ok = [&] { return unclamped_secrecy_sum(c, p) >= scen.see_min * power_sum(p); };
    if (!see_ok()) {
      for (std::size_t i = 0; i < p.size(); ++i)
        if (c.a[i] <= c.b[i]) p.powers[i] = 0.0;
      for (int halvings = 0; !see_ok() && halvings < 200; ++halvings)
        for (double& x : p.powers) x *= 0.5;
      if (!see_ok()) throw InfeasibleScenario("no scaled initial power meets the secrecy energy efficiency floor");
    }
  }
  return p;
}

inline bool secrecy_everywhere_zero(const Trajectory& q, const Scenario& scen) {
  const PowerCoefficients c = build_power_coeffs(q, scen);
  for (std::size_t i = 0; i < q.size(); ++i)
    if (c.a[i] > c.b[i]) return false;
  return true;
}

}  // namespace detail

/// Feasible starting pair for the ascent. The default trajectory is the
/// straight line; when it has zero secrecy rate in every slot, the best
/// detour hovering over a user (or over the user centroid) is used instead.
inline std::pair<Trajectory, PowerProfile> initialize(const Scenario& scen, const BcdConfig& cfg) {
  cfg.validate();
  try {
    scen.validate();
  } catch (const ValidationError& e) {
    throw InfeasibleScenario(e.what());
  }
  const LinkConstants links = link_constants(scen);
  check_jamming_budget(scen, links.primary_jamming);

  Trajectory q = cfg.init_trajectory ? *cfg.init_trajectory : straight_line(scen);
  if (q.size() != scen.n_slots) throw ValidationError("initial trajectory length does not match n_slots");
  detail::check_exclusion(q, scen);
  PowerProfile p = detail::initial_power(q, scen, cfg, links);

  if (!cfg.init_trajectory && detail::secrecy_everywhere_zero(q, scen)) {
    std::vector<Vec2> vias = scen.users;
    Vec2 centroid = Vec2::Zero();
    for (const auto& u : scen.users) centroid += u / static_cast<double>(scen.num_users());
    vias.push_back(centroid);
    double best = 0.0;
    for (const auto& via : vias) {
      const auto cand = detour_trajectory(scen, via);
      if (!cand) continue;
      try {
        const PowerProfile cp = detail::initial_power(*cand, scen, cfg, links);
        const double w = evaluate_solution(*cand, cp, scen).wasr;
        if (w > best) {
          best = w;
          q = *cand;
          p = cp;
        }
      } catch (const InfeasibleScenario&) {
      }
    }
  }

  const Solution sol = evaluate_solution(q, p, scen);
  const ConstraintAudit audit = audit_solution(sol, scen);
  if (!audit.feasible())
    throw InfeasibleScenario("initial point violates constraints by " + std::to_string(audit.max_violation()));
  return {q, p};
}

struct BcdResult {
  Solution solution;
  BcdTrace trace;
};

inline double max_it_violation(const ConstraintAudit& a) {
  double v = -std::numeric_limits<double>::infinity();
  for (double x : a.it) v = std::max(v, x);
  return a.it.empty() ? 0.0 : v;
}

/// Runs `scheme` from an explicit starting pair.
inline BcdResult run_from(const Scenario& scen, Scheme scheme, const BcdConfig& cfg, Trajectory q, PowerProfile p) {
  cfg.validate();
  BcdResult out;
  out.solution = evaluate_solution(q, p, scen);
  out.trace.initial_wasr = out.solution.wasr;
  if (scheme == Scheme::FPFT) {
    out.trace.converged = true;
    return out;
  }
  double prev = out.solution.wasr;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    IterationRecord rec;
    rec.iter = it;
    Trajectory q_next = q;
    PowerProfile p_next = p;
    try {
      if (optimizes_power(scheme)) {
        const PowerSolveResult pr = solve_power(q_next, scen, p_next, cfg.solver);
        p_next = pr.power;
        rec.wasr_surrogate_power = pr.objective;
        rec.power_report = pr.report;
        rec.power_kept_reference = pr.kept_reference;
      }
      if (optimizes_trajectory(scheme)) {
        const TrajectorySolveResult tr = solve_trajectory(p_next, q_next, scen, cfg.solver);
        q_next = tr.trajectory;
        rec.wasr_surrogate_traj = tr.objective;
        rec.traj_report = tr.report;
        rec.traj_kept_reference = tr.kept_reference;
      }
    } catch (const Error& e) {
      out.trace.status = e.what();
      break;
    }
    const Solution sol = evaluate_solution(q_next, p_next, scen);
    const ConstraintAudit audit = audit_solution(sol, scen);
    if (!audit.feasible(cfg.solver.tol_feas)) {
      out.trace.status = "iteration " + std::to_string(it) + " violates constraints by " +
                         std::to_string(audit.max_violation()) + "; returning the previous iterate";
      break;
    }
    if (sol.wasr < prev) {
      // Both blocks retain their reference on a decrease, so this is unreachable
      // unless the audit and the block checks disagree.
      out.trace.status = "iteration " + std::to_string(it) + " decreased the WASR; returning the previous iterate";
      break;
    }
    rec.wasr_exact = sol.wasr;
    rec.see = sol.see;
    rec.max_it_violation = max_it_violation(audit);
    out.trace.records.push_back(rec);
    q = std::move(q_next);
    p = std::move(p_next);
    out.solution = sol;
    const double gain = sol.wasr - prev;
    prev = sol.wasr;
    if (gain < cfg.epsilon) {
      out.trace.converged = true;
      break;
    }
  }
  return out;
}

inline BcdResult run_benchmark(const Scenario& scen, Scheme scheme, const BcdConfig& cfg) {
  auto [q, p] = initialize(scen, cfg);
  return run_from(scen, scheme, cfg, std::move(q), std::move(p));
}

inline BcdResult optimize(const Scenario& scen, const BcdConfig& cfg) {
  return run_benchmark(scen, Scheme::Proposed, cfg);
}

struct SweepRow {
  double gamma_w = 0.0;
  Scheme scheme = Scheme::Proposed;
  double wasr = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
  int iterations = 0;
  std::string status;
};

inline std::vector<Scheme> all_schemes() { return {Scheme::FPFT, Scheme::FPOT, Scheme::OPFT, Scheme::Proposed}; }

/// Largest jamming level at any primary; thresholds at or below it are infeasible.
inline double max_primary_jamming(const Scenario& scen) {
  double jam = 0.0;
  for (double j : link_constants(scen).primary_jamming) jam = std::max(jam, j);
  return jam;
}

/// Common starting point of a threshold sweep: the initialization for the
/// smallest feasible threshold, repaired for that threshold at any UAV position.
inline std::optional<std::pair<Trajectory, PowerProfile>> sweep_start(const Scenario& scen,
                                                                      const std::vector<double>& gammas_w,
                                                                      const BcdConfig& cfg) {
  const double jam = max_primary_jamming(scen);
  std::optional<double> smallest;
  for (double g : gammas_w)
    if (g > jam && (!smallest || g < *smallest)) smallest = g;
  if (!smallest) return std::nullopt;
  Scenario s0 = scen;
  s0.gamma_it.assign(scen.num_primaries(), *smallest);
  BcdConfig c0 = cfg;
  c0.init_worst_case_gamma = *smallest;
  return initialize(s0, c0);
}

/// Runs all four schemes for each threshold (applied to every primary).
/// Thresholds are visited in increasing order and every run starts from
/// sweep_start.
inline std::vector<SweepRow> sweep_it_threshold(const Scenario& scen, std::vector<double> gammas_w, const BcdConfig& cfg) {
  std::sort(gammas_w.begin(), gammas_w.end());
  const double jam = max_primary_jamming(scen);
  const auto init = sweep_start(scen, gammas_w, cfg);

  std::vector<SweepRow> rows;
  for (double g : gammas_w) {
    Scenario s = scen;
    s.gamma_it.assign(scen.num_primaries(), g);
    for (Scheme sch : all_schemes()) {
      SweepRow row;
      row.gamma_w = g;
      row.scheme = sch;
      if (g <= jam || !init) {
        row.status = "infeasible: jamming alone reaches the threshold";
        rows.push_back(row);
        continue;
      }
      try {
        const BcdResult r = run_from(s, sch, cfg, init->first, init->second);
        row.wasr = r.solution.wasr;
        row.feasible = audit_solution(r.solution, s).feasible(cfg.solver.tol_feas);
        row.iterations = static_cast<int>(r.trace.records.size());
        row.status = r.trace.status;
      } catch (const Error& e) {
        row.status = e.what();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace uavsec
