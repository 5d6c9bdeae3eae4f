#pragma once

// Brute-force and Monte-Carlo reference computations. The channel and rate
// formulas here are written out again from scratch and deliberately do not
// call into model.hpp or power.hpp, so a slip in one copy shows up as a
// disagreement with the other.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "uavsec/model.hpp"

namespace uavsec::oracle {

inline constexpr std::uint64_t kDefaultSeed = 0xC0FFEE;

/// Unit-mean exponential draws; one reproducible stream per (seed, stream id).
class FadingSampler {
 public:
  FadingSampler(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }
  double operator()() { return dist_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::exponential_distribution<double> dist_{1.0};
};

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// Welford accumulator; a constant input keeps the mean bit-exact.
class RunningStats {
 public:
  void push(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  Estimate estimate() const {
    Estimate e;
    e.mean = mean_;
    e.samples = n_;
    e.stderr_ = n_ > 1 ? std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_)) : 0.0;
    return e;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
};

namespace detail {

inline double ground_dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x() - b.x(), a.y() - b.y()); }

// |d_hat - r|^-alpha, the mean G2G path loss from the nearest point of the disc.
inline double g2g_loss(const Vec2& node, const Eavesdropper& e, double alpha) {
  return std::pow(std::fabs(ground_dist(node, e.estimate) - e.radius), -alpha);
}

inline double air_gain(const Vec2& q, const Vec2& w, double h, double beta0) {
  const double d = ground_dist(q, w);
  return beta0 / (d * d + h * h);
}

}  // namespace detail

/// Mean CoMP/MRC rate under fading of the eavesdropper jamming links.
inline Estimate mc_rate_estimate(const Vec2& q, double p, const Scenario& scen, std::size_t samples,
                                 std::uint64_t seed) {
  const auto& rc = scen.radio;
  const std::size_t k = scen.users.size(), m = scen.eves.size();
  std::vector<double> signal(k);
  std::vector<double> loss(k * m);
  for (std::size_t u = 0; u < k; ++u) {
    signal[u] = p * detail::air_gain(q, scen.users[u], scen.altitude, rc.beta0);
    for (std::size_t e = 0; e < m; ++e) loss[u * m + e] = rc.beta0 * detail::g2g_loss(scen.users[u], scen.eves[e], rc.alpha);
  }
  FadingSampler draw(seed, 1);
  RunningStats stats;
  for (std::size_t s = 0; s < samples; ++s) {
    double sinr = 0.0;
    for (std::size_t u = 0; u < k; ++u) {
      double jam = 0.0;
      for (std::size_t e = 0; e < m; ++e) jam += rc.pe * loss[u * m + e] * draw();
      sinr += signal[u] / (jam + rc.sigma2);
    }
    stats.push(std::log2(1.0 + sinr));
  }
  return stats.estimate();
}

/// Mean interference at primary r under fading of the jamming links.
inline Estimate mc_interference_estimate(const Vec2& q, double p, const Scenario& scen, std::size_t r,
                                         std::size_t samples, std::uint64_t seed) {
  const auto& rc = scen.radio;
  const Vec2& w = scen.primaries.at(r);
  const double own = p * detail::air_gain(q, w, scen.altitude, rc.beta0);
  std::vector<double> loss;
  for (const auto& e : scen.eves) loss.push_back(rc.beta0 * detail::g2g_loss(w, e, rc.alpha));
  FadingSampler draw(seed, 2);
  RunningStats stats;
  for (std::size_t s = 0; s < samples; ++s) {
    double jam = 0.0;
    for (double l : loss) jam += rc.pe * l * draw();
    stats.push(own + jam);
  }
  return stats.estimate();
}

// ---------------------------------------------------------------------------
// Power grid search

struct PowerGridResult {
  bool feasible = false;
  std::vector<double> best_p;
  double best_obj = -std::numeric_limits<double>::infinity();
  double grid_step = 0.0;
};

/// Exhaustive search of the linearized power program on a uniform grid of
/// `grid_pts` levels per slot. Cost is grid_pts^N unless the slots decouple.
inline PowerGridResult grid_oracle_power(const Trajectory& traj, const Scenario& scen, const PowerProfile& p_ref,
                                         std::size_t grid_pts) {
  const std::size_t n = traj.points.size();
  const auto& rc = scen.radio;
  const double h = scen.altitude;
  if (n > 4) throw std::invalid_argument("grid_oracle_power supports at most 4 slots");
  if (grid_pts < 2) throw std::invalid_argument("grid_oracle_power needs at least 2 grid points");

  // Per-slot effective SINR and eavesdropper SNR per watt.
  std::vector<double> a(n, 0.0), b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& q = traj.points[i];
    for (const auto& w : scen.users) {
      double jam = 0.0;
      for (const auto& e : scen.eves) jam += rc.pe * rc.beta0 * detail::g2g_loss(w, e, rc.alpha);
      a[i] += detail::air_gain(q, w, h, rc.beta0) / (jam + rc.sigma2);
    }
    for (const auto& e : scen.eves) {
      const double gap = detail::ground_dist(q, e.estimate) - e.radius;
      b[i] += rc.beta0 / (gap * gap + h * h) / rc.sigma2;
    }
  }
  auto surrogate = [&](std::size_t i, double p) {
    const double pr = p_ref.powers[i];
    return std::log2(1.0 + a[i] * p) - std::log2(1.0 + b[i] * pr) - b[i] * (p - pr) / (std::log(2.0) * (1.0 + b[i] * pr));
  };

  const double step = scen.p_max / static_cast<double>(grid_pts - 1);
  std::vector<std::vector<double>> obj(n, std::vector<double>(grid_pts));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < grid_pts; ++j) obj[i][j] = surrogate(i, static_cast<double>(j) * step);

  // Active interference rows.
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < scen.primaries.size(); ++r)
    if (std::isfinite(scen.gamma_it[r])) rows.push_back(r);
  std::vector<std::vector<double>> it_gain(rows.size(), std::vector<double>(n));
  std::vector<double> it_const(rows.size(), 0.0);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const Vec2& w = scen.primaries[rows[j]];
    for (std::size_t i = 0; i < n; ++i) it_gain[j][i] = detail::air_gain(traj.points[i], w, h, rc.beta0);
    for (const auto& e : scen.eves) it_const[j] += rc.pe * rc.beta0 * detail::g2g_loss(w, e, rc.alpha);
  }

  PowerGridResult res;
  res.grid_step = step;
  const double inv_n = 1.0 / static_cast<double>(n);

  if (scen.see_min == 0.0 && rows.empty()) {
    res.feasible = true;
    res.best_p.assign(n, 0.0);
    res.best_obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::max_element(obj[i].begin(), obj[i].end());
      res.best_p[i] = static_cast<double>(it - obj[i].begin()) * step;
      res.best_obj += inv_n * *it;
    }
    return res;
  }

  std::vector<std::size_t> idx(n, 0);
  while (true) {
    double f = 0.0, psum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      f += obj[i][idx[i]];
      psum += static_cast<double>(idx[i]) * step;
    }
    bool ok = scen.see_min * psum <= f;
    for (std::size_t j = 0; ok && j < rows.size(); ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += it_gain[j][i] * static_cast<double>(idx[i]) * step;
      ok = inv_n * mean + it_const[j] <= scen.gamma_it[rows[j]];
    }
    if (ok && inv_n * f > res.best_obj) {
      res.feasible = true;
      res.best_obj = inv_n * f;
      res.best_p.resize(n);
      for (std::size_t i = 0; i < n; ++i) res.best_p[i] = static_cast<double>(idx[i]) * step;
    }
    std::size_t d = 0;
    while (d < n && ++idx[d] == grid_pts) idx[d++] = 0;
    if (d == n) break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Per-slot trajectory landscape

struct Lattice {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  std::size_t nx = 2, ny = 2;
  double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
  double dy() const { return (y_max - y_min) / static_cast<double>(ny - 1); }
};

struct SlotGridResult {
  std::vector<Vec2> best;  // every lattice point tying for the maximum
  double best_rate = -std::numeric_limits<double>::infinity();
};

/// Clamped secrecy rate of one slot at ground position q with power p.
inline double slot_secrecy(const Vec2& q, double p, const Scenario& scen) {
  const auto& rc = scen.radio;
  double legit = 0.0, eve = 0.0;
  for (const auto& w : scen.users) {
    double jam = 0.0;
    for (const auto& e : scen.eves) jam += rc.pe * rc.beta0 * detail::g2g_loss(w, e, rc.alpha);
    legit += p * detail::air_gain(q, w, scen.altitude, rc.beta0) / (jam + rc.sigma2);
  }
  for (const auto& e : scen.eves) {
    const double gap = detail::ground_dist(q, e.estimate) - e.radius;
    eve += p * rc.beta0 / (gap * gap + scen.altitude * scen.altitude) / rc.sigma2;
  }
  return std::max(0.0, std::log2(1.0 + legit) - std::log2(1.0 + eve));
}

/// Argmax of the slot secrecy rate over a lattice, skipping uncertainty discs.
/// Values within `tie_tol` (relative) of the maximum are reported as ties.
inline SlotGridResult grid_oracle_trajectory_slot(double power_n, const Scenario& scen, const Lattice& lat,
                                                  double tie_tol = 1e-12) {
  SlotGridResult res;
  std::vector<std::pair<Vec2, double>> scored;
  for (std::size_t i = 0; i < lat.nx; ++i)
    for (std::size_t j = 0; j < lat.ny; ++j) {
      const Vec2 q(lat.x_min + static_cast<double>(i) * lat.dx(), lat.y_min + static_cast<double>(j) * lat.dy());
      bool inside = false;
      for (const auto& e : scen.eves) inside = inside || detail::ground_dist(q, e.estimate) < e.radius;
      if (inside) continue;
      const double v = slot_secrecy(q, power_n, scen);
      scored.emplace_back(q, v);
      res.best_rate = std::max(res.best_rate, v);
    }
  for (const auto& [q, v] : scored)
    if (v >= res.best_rate - tie_tol * std::max(1.0, std::fabs(res.best_rate))) res.best.push_back(q);
  return res;
}

}  // namespace uavsec::oracle
