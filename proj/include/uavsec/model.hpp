#pragma once

// Channel, rate and interference model of the aerial underlay network.
//
// All quantities are SI and linear-scale: Watts, meters, seconds. Rates are
// per unit bandwidth (bits/s/Hz). dB and dBm only appear in the conversion
// helpers at the bottom of this file.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavsec/errors.hpp"

namespace uavsec {

using Vec2 = Eigen::Vector2d;

/// Smallest admissible worst-case ground distance |d_hat - r| (meters).
inline constexpr double kEpsDist = 1e-6;
/// Endpoint equality tolerance (meters).
inline constexpr double kTolEq = 1e-6;
/// Constraint residual tolerance.
inline constexpr double kTolFeas = 1e-6;
/// Relative tolerance for recomputation checks.
inline constexpr double kTolNum = 1e-9;

struct RadioConstants {
  double beta0 = 1e-6;   // channel power gain at 1 m
  double sigma2 = 1e-14; // noise power, W
  double alpha = 2.2;    // ground-to-ground path-loss exponent
  double pe = 0.0;       // per-eavesdropper jamming power, W

  double rho0() const { return beta0 / sigma2; }

  void validate() const {
    if (!(beta0 > 0.0) || !std::isfinite(beta0))
      throw ValidationError("radio.beta0 must be positive, got " + std::to_string(beta0));
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw ValidationError("radio.sigma2 must be positive, got " + std::to_string(sigma2));
    if (!(alpha > 2.0) || !std::isfinite(alpha))
      throw ValidationError("radio.alpha must exceed 2, got " + std::to_string(alpha));
    if (!(pe >= 0.0) || !std::isfinite(pe))
      throw ValidationError("radio.pe must be nonnegative, got " + std::to_string(pe));
  }
};

/// Estimated eavesdropper position and the radius of its uncertainty disc.
struct Eavesdropper {
  Vec2 estimate = Vec2::Zero();
  double radius = 0.0;
};

struct Scenario {
  std::vector<Vec2> users;
  std::vector<Vec2> primaries;
  std::vector<Eavesdropper> eves;
  double altitude = 100.0;
  Vec2 q_start = Vec2::Zero();
  Vec2 q_end = Vec2::Zero();
  std::size_t n_slots = 1;
  double slot_len = 1.0;
  double v_max = 1.0;
  double p_max = 1.0;
  std::vector<double> gamma_it;  // one threshold per primary, W; +inf disables
  double see_min = 0.0;
  RadioConstants radio;

  std::size_t num_users() const { return users.size(); }
  std::size_t num_primaries() const { return primaries.size(); }
  std::size_t num_eves() const { return eves.size(); }
  double max_step() const { return v_max * slot_len; }

  /// Throws ValidationError naming the first violated invariant.
  void validate() const {
    radio.validate();
    if (users.empty()) throw ValidationError("scenario needs at least one user (K >= 1)");
    if (eves.empty()) throw ValidationError("scenario needs at least one eavesdropper (M >= 1)");
    if (n_slots < 1) throw ValidationError("n_slots must be >= 1");
    if (!(altitude > 0.0)) throw ValidationError("altitude must be positive");
    if (!(slot_len > 0.0)) throw ValidationError("slot length must be positive");
    if (!(v_max > 0.0)) throw ValidationError("v_max must be positive");
    if (!(p_max > 0.0)) throw ValidationError("p_max must be positive");
    if (!(see_min >= 0.0)) throw ValidationError("see_min must be nonnegative");
    if (gamma_it.size() != primaries.size())
      throw ValidationError("gamma_it has " + std::to_string(gamma_it.size()) +
                            " entries but there are " + std::to_string(primaries.size()) +
                            " primaries");
    for (std::size_t r = 0; r < gamma_it.size(); ++r)
      if (!(gamma_it[r] > 0.0))
        throw ValidationError("gamma_it[" + std::to_string(r) + "] must be positive");
    for (std::size_t m = 0; m < eves.size(); ++m)
      if (!(eves[m].radius >= 0.0))
        throw ValidationError("eavesdropper " + std::to_string(m) + " has negative radius");
    // N waypoints span N-1 flight segments.
    const double span = (q_end - q_start).norm();
    const double reach = static_cast<double>(n_slots - 1) * max_step();
    if (span > reach + kTolEq)
      throw ValidationError("unreachable end point: distance " + std::to_string(span) +
                            " m exceeds (N-1)*v_max*slot = " + std::to_string(reach) + " m");
  }
};

struct Trajectory {
  std::vector<Vec2> points;
  std::size_t size() const { return points.size(); }
};

struct PowerProfile {
  std::vector<double> powers;
  std::size_t size() const { return powers.size(); }
};

struct SlotDiagnostics {
  double rate_legit_lb = 0.0;
  double rate_eve = 0.0;
  double rate_secrecy = 0.0;
  std::vector<double> interference;
};

struct Solution {
  Trajectory trajectory;
  PowerProfile power;
  std::vector<SlotDiagnostics> per_slot;
  double wasr = 0.0;
  /// Empty when the total transmit power is zero (ratio undefined).
  std::optional<double> see;
};

// ---------------------------------------------------------------------------
// Channel gains

/// Line-of-sight air-to-ground gain beta0 / (|q - w|^2 + H^2).
inline double a2g_gain(const Vec2& q, const Vec2& w, double altitude, const RadioConstants& radio) {
  return radio.beta0 / ((q - w).squaredNorm() + altitude * altitude);
}

/// Largest air-to-ground gain over every true position inside the disc.
inline double worst_case_eve_gain(const Vec2& q, const Eavesdropper& eve, double altitude,
                                  const RadioConstants& radio, std::size_t eve_index = 0) {
  const double d = (q - eve.estimate).norm();
  if (d < eve.radius) throw EveExclusionViolated(eve_index, d, eve.radius);
  const double gap = d - eve.radius;
  return radio.beta0 / (gap * gap + altitude * altitude);
}

/// Mean worst-case ground-to-ground gain beta0 * |d_hat - r|^-alpha.
inline double worst_case_g2g_gain_coeff(const Vec2& w_d, const Eavesdropper& eve,
                                        const RadioConstants& radio) {
  const double a = std::abs((w_d - eve.estimate).norm() - eve.radius);
  if (a <= kEpsDist)
    throw DegenerateDistance("uncertainty disc boundary touches a ground node (|d - r| = " +
                             std::to_string(a) + " m)");
  return radio.beta0 * std::pow(a, -radio.alpha);
}

/// Scenario-constant terms: jamming-plus-noise at each user and the
/// eavesdroppers' mean jamming at each primary.
struct LinkConstants {
  std::vector<double> user_impairment;  // pe * sum_m beta0 A_km^-alpha + sigma2
  std::vector<double> primary_jamming;  // pe * sum_m beta0 d_EmUr^-alpha
};

inline double user_impairment(const Scenario& scen, std::size_t k) {
  double sum = 0.0;
  for (const auto& eve : scen.eves) sum += worst_case_g2g_gain_coeff(scen.users[k], eve, scen.radio);
  return scen.radio.pe * sum + scen.radio.sigma2;
}

inline double primary_jamming(const Scenario& scen, std::size_t r) {
  double sum = 0.0;
  for (const auto& eve : scen.eves)
    sum += worst_case_g2g_gain_coeff(scen.primaries[r], eve, scen.radio);
  return scen.radio.pe * sum;
}

inline LinkConstants link_constants(const Scenario& scen) {
  LinkConstants c;
  c.user_impairment.reserve(scen.num_users());
  c.primary_jamming.reserve(scen.num_primaries());
  for (std::size_t k = 0; k < scen.num_users(); ++k) c.user_impairment.push_back(user_impairment(scen, k));
  for (std::size_t r = 0; r < scen.num_primaries(); ++r) c.primary_jamming.push_back(primary_jamming(scen, r));
  return c;
}

// ---------------------------------------------------------------------------
// Rates

/// Per-watt effective legitimate SINR sum_k h_SDk / impairment_k.
inline double legit_gain_sum(const Vec2& q, const Scenario& scen, const LinkConstants& links) {
  double sum = 0.0;
  for (std::size_t k = 0; k < scen.num_users(); ++k)
    sum += a2g_gain(q, scen.users[k], scen.altitude, scen.radio) / links.user_impairment[k];
  return sum;
}

/// Per-watt colluding eavesdropper SNR sum_m h_hat_SEm / sigma2.
inline double eve_gain_sum(const Vec2& q, const Scenario& scen) {
  double sum = 0.0;
  for (std::size_t m = 0; m < scen.num_eves(); ++m)
    sum += worst_case_eve_gain(q, scen.eves[m], scen.altitude, scen.radio, m);
  return sum / scen.radio.sigma2;
}

/// Jensen lower bound on the CoMP/MRC legitimate rate.
inline double legit_rate_lb(const Vec2& q, double p, const Scenario& scen, const LinkConstants& links) {
  if (p < 0.0) throw std::invalid_argument("transmit power must be nonnegative");
  return std::log2(1.0 + p * legit_gain_sum(q, scen, links));
}

inline double legit_rate_lb(const Vec2& q, double p, const Scenario& scen) {
  return legit_rate_lb(q, p, scen, link_constants(scen));
}

/// Rate of the colluding eavesdroppers with cross-interference cancelled.
inline double eve_rate(const Vec2& q, double p, const Scenario& scen) {
  if (p < 0.0) throw std::invalid_argument("transmit power must be nonnegative");
  return std::log2(1.0 + p * eve_gain_sum(q, scen));
}

inline double secrecy_rate(const Vec2& q, double p, const Scenario& scen, const LinkConstants& links) {
  return std::max(0.0, legit_rate_lb(q, p, scen, links) - eve_rate(q, p, scen));
}

inline double secrecy_rate(const Vec2& q, double p, const Scenario& scen) {
  return secrecy_rate(q, p, scen, link_constants(scen));
}

/// Jensen upper bound on the mean interference received by primary r.
inline double interference_bound(const Vec2& q, double p, const Scenario& scen, std::size_t r,
                                 const LinkConstants& links) {
  if (p < 0.0) throw std::invalid_argument("transmit power must be nonnegative");
  return p * a2g_gain(q, scen.primaries.at(r), scen.altitude, scen.radio) + links.primary_jamming.at(r);
}

inline double interference_bound(const Vec2& q, double p, const Scenario& scen, std::size_t r) {
  if (r >= scen.num_primaries()) throw std::out_of_range("primary index out of range");
  return p * a2g_gain(q, scen.primaries[r], scen.altitude, scen.radio) + primary_jamming(scen, r);
}

// ---------------------------------------------------------------------------
// Solutions

/// Per-slot diagnostics, WASR and SEE of a (trajectory, power) pair.
inline Solution evaluate_solution(const Trajectory& traj, const PowerProfile& power, const Scenario& scen) {
  const std::size_t n = scen.n_slots;
  if (traj.size() != n || power.size() != n)
    throw std::invalid_argument("trajectory/power length (" + std::to_string(traj.size()) + "/" +
                                std::to_string(power.size()) + ") does not match n_slots " +
                                std::to_string(n));
  const LinkConstants links = link_constants(scen);
  Solution sol;
  sol.trajectory = traj;
  sol.power = power;
  sol.per_slot.resize(n);
  double sum_rate = 0.0;
  double sum_power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& q = traj.points[i];
    const double p = power.powers[i];
    SlotDiagnostics& d = sol.per_slot[i];
    d.rate_legit_lb = legit_rate_lb(q, p, scen, links);
    d.rate_eve = eve_rate(q, p, scen);
    d.rate_secrecy = std::max(0.0, d.rate_legit_lb - d.rate_eve);
    d.interference.resize(scen.num_primaries());
    for (std::size_t r = 0; r < scen.num_primaries(); ++r)
      d.interference[r] = interference_bound(q, p, scen, r, links);
    sum_rate += d.rate_secrecy;
    sum_power += p;
  }
  sol.wasr = sum_rate / static_cast<double>(n);
  if (sum_power > 0.0) sol.see = sum_rate / sum_power;
  return sol;
}

/// Residuals of every constraint of the joint problem; a value <= 0 means
/// satisfied. Interference residuals are relative to the threshold.
struct ConstraintAudit {
  double see = 0.0;            // psi * sum p - sum R_sec  (bits/s/Hz)
  double power_box = 0.0;      // max(-p, p - p_max)       (W)
  std::vector<double> it;      // (mean I_r - Gamma_r) / Gamma_r
  double endpoints = 0.0;      // max endpoint distance     (m)
  double speed = 0.0;          // max |q(n)-q(n-1)| - v*dt  (m)
  double eve_exclusion = 0.0;  // max r_m - |q(n) - w_hat_m| (m)

  double max_violation() const {
    double v = std::max({see, power_box, endpoints, speed, eve_exclusion});
    for (double x : it) v = std::max(v, x);
    return v;
  }
  bool feasible(double tol = kTolFeas) const {
    return see <= tol && power_box <= tol && endpoints <= kTolEq && speed <= tol &&
           eve_exclusion <= 0.0 &&
           std::all_of(it.begin(), it.end(), [tol](double x) { return x <= tol; });
  }
};

inline ConstraintAudit audit_solution(const Solution& sol, const Scenario& scen) {
  ConstraintAudit a;
  const auto& pts = sol.trajectory.points;
  const auto& pw = sol.power.powers;
  const std::size_t n = pts.size();
  double sum_rate = 0.0;
  double sum_power = 0.0;
  a.power_box = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    a.power_box = std::max({a.power_box, -pw[i], pw[i] - scen.p_max});
    sum_rate += sol.per_slot[i].rate_secrecy;
    sum_power += pw[i];
  }
  a.see = scen.see_min * sum_power - sum_rate;
  a.it.resize(scen.num_primaries());
  for (std::size_t r = 0; r < scen.num_primaries(); ++r) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += sol.per_slot[i].interference[r];
    mean /= static_cast<double>(n);
    const double gamma = scen.gamma_it[r];
    a.it[r] = std::isinf(gamma) ? -1.0 : (mean - gamma) / gamma;
  }
  a.endpoints = n == 0 ? 0.0 : std::max((pts.front() - scen.q_start).norm(), (pts.back() - scen.q_end).norm());
  a.speed = -scen.max_step();
  for (std::size_t i = 1; i < n; ++i) a.speed = std::max(a.speed, (pts[i] - pts[i - 1]).norm() - scen.max_step());
  a.eve_exclusion = -std::numeric_limits<double>::infinity();
  for (const auto& q : pts)
    for (const auto& eve : scen.eves) a.eve_exclusion = std::max(a.eve_exclusion, eve.radius - (q - eve.estimate).norm());
  return a;
}

/// N waypoints evenly spaced from q_start to q_end.
inline Trajectory straight_line(const Scenario& scen) {
  Trajectory t;
  const std::size_t n = scen.n_slots;
  t.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    t.points.emplace_back(scen.q_start + s * (scen.q_end - scen.q_start));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Unit conversions

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

}  // namespace uavsec
