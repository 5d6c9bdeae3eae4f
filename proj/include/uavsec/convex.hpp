#pragma once

// Log-barrier interior-point solver for smooth concave maximization.
//
//   maximize    sum_j f_j(x)                 (each f_j concave)
//   subject to  g_i(x) <= 0                  (each g_i convex)
//               lower <= x <= upper
//               ||A_c x + b_c|| <= c_c^T x + d_c
//               E x = e
//
// Every function is a Term over a small `support` of variable indices and
// reports its value, local gradient and local Hessian. The solver assembles
// a dense Newton system, scales it by its diagonal, factors it with LLT and
// handles the equalities through a Schur complement.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uavsec::convex {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct Evaluation {
  double value = 0.0;
  Vector gradient;  // indexed like Term::support
  Matrix hessian;   // support x support
};

/// Smooth function of x[support]. `eval` returns nullopt outside the
/// function's domain; derivatives are only filled when requested.
struct Term {
  std::vector<Index> support;
  std::function<std::optional<Evaluation>(const Vector& local, bool derivatives)> eval;
  std::string label;
};

/// Second-order cone ||a * x[support] + b|| <= c . x[support] + d.
struct Cone {
  std::vector<Index> support;
  Matrix a;
  Vector b;
  Vector c;
  double d = 0.0;
  std::string label;
};

struct ConvexProgram {
  Index dim = 0;
  std::vector<Term> objective;     // concave, summed
  std::vector<Term> inequalities;  // convex, each <= 0
  Vector lower;                    // empty or dim entries (-inf allowed)
  Vector upper;                    // empty or dim entries (+inf allowed)
  std::vector<Cone> cones;
  Matrix eq_a;                     // p x dim
  Vector eq_b;
};

enum class Status { Converged, MaxIter, Infeasible, NumericalFailure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIter: return "max_iter";
    case Status::Infeasible: return "infeasible";
    case Status::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct SolverOptions {
  double tol_gap = 1e-7;
  double tol_kkt = 1e-6;
  double tol_feas = 1e-6;
  int max_newton = 200;  // per barrier stage
  int max_stages = 60;
  double mu = 10.0;
  double t0 = 1.0;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double newton_tol = 1e-10;  // lambda^2 / 2
  /// Called with the (maximization-form) barrier value t*f - phi after every
  /// accepted Newton step, and with -1 before each new barrier stage.
  std::function<void(int stage, double barrier_value)> on_step;
  /// Internal hook: stop as soon as an accepted iterate satisfies it.
  std::function<bool(const Vector&)> early_stop;
};

struct SolverReport {
  Vector x_opt;
  double obj = 0.0;
  double max_violation = 0.0;
  double kkt_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  int stages = 0;
  Status status = Status::NumericalFailure;
  std::string message;
};

// ---------------------------------------------------------------------------

namespace detail {

inline Vector gather(const Vector& x, const std::vector<Index>& support) {
  Vector local(static_cast<Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) local(static_cast<Index>(i)) = x(support[i]);
  return local;
}

inline bool has_lower(const ConvexProgram& p, Index i) { return p.lower.size() > 0 && std::isfinite(p.lower(i)); }
inline bool has_upper(const ConvexProgram& p, Index i) { return p.upper.size() > 0 && std::isfinite(p.upper(i)); }

inline Index barrier_weight(const ConvexProgram& p) {
  Index m = static_cast<Index>(p.inequalities.size()) + 2 * static_cast<Index>(p.cones.size());
  for (Index i = 0; i < p.dim; ++i) m += (has_lower(p, i) ? 1 : 0) + (has_upper(p, i) ? 1 : 0);
  return m;
}

/// Cone slack pieces (u, s) at x.
inline std::pair<Vector, double> cone_parts(const Cone& c, const Vector& local) {
  return {c.a * local + c.b, c.c.dot(local) + c.d};
}

/// Barrier function Phi_t = -t f + phi and its derivatives.
class Barrier {
 public:
  explicit Barrier(const ConvexProgram& prog) : prog_(prog) {}

  /// Phi_t(x), or nullopt when x is not strictly feasible / out of domain.
  std::optional<double> value(const Vector& x, double t) const {
    double phi = 0.0;
    if (!constraint_barrier(x, phi, nullptr, nullptr)) return std::nullopt;
    double f = 0.0;
    for (const auto& term : prog_.objective) {
      auto ev = term.eval(gather(x, term.support), false);
      if (!ev || !std::isfinite(ev->value)) return std::nullopt;
      f += ev->value;
    }
    return -t * f + phi;
  }

  /// Fills gradient and Hessian of Phi_t; returns false when out of domain.
  bool derivatives(const Vector& x, double t, double& value, Vector& grad, Matrix& hess) const {
    grad.setZero(prog_.dim);
    hess.setZero(prog_.dim, prog_.dim);
    double phi = 0.0;
    if (!constraint_barrier(x, phi, &grad, &hess)) return false;
    double f = 0.0;
    for (const auto& term : prog_.objective) {
      auto ev = term.eval(gather(x, term.support), true);
      if (!ev || !std::isfinite(ev->value)) return false;
      f += ev->value;
      scatter(term.support, -t, ev->gradient, ev->hessian, grad, hess);
    }
    value = -t * f + phi;
    return grad.allFinite() && hess.allFinite();
  }

  bool strictly_feasible(const Vector& x) const {
    double phi = 0.0;
    return constraint_barrier(x, phi, nullptr, nullptr);
  }

  double objective(const Vector& x) const {
    double f = 0.0;
    for (const auto& term : prog_.objective) {
      auto ev = term.eval(gather(x, term.support), false);
      if (!ev) return std::numeric_limits<double>::quiet_NaN();
      f += ev->value;
    }
    return f;
  }

  /// Gradient of the objective alone.
  Vector objective_gradient(const Vector& x) const {
    Vector g = Vector::Zero(prog_.dim);
    for (const auto& term : prog_.objective) {
      auto ev = term.eval(gather(x, term.support), true);
      if (!ev) continue;
      for (std::size_t i = 0; i < term.support.size(); ++i) g(term.support[i]) += ev->gradient(static_cast<Index>(i));
    }
    return g;
  }

 private:
  static void scatter(const std::vector<Index>& support, double scale, const Vector& g, const Matrix& h,
                      Vector& grad, Matrix& hess) {
    const std::size_t n = support.size();
    for (std::size_t i = 0; i < n; ++i) {
      grad(support[i]) += scale * g(static_cast<Index>(i));
      for (std::size_t j = 0; j < n; ++j)
        hess(support[i], support[j]) += scale * h(static_cast<Index>(i), static_cast<Index>(j));
    }
  }

  // -ln(-g) for inequalities, box and cone log barriers.
  bool constraint_barrier(const Vector& x, double& phi, Vector* grad, Matrix* hess) const {
    const bool deriv = grad != nullptr;
    for (const auto& term : prog_.inequalities) {
      auto ev = term.eval(gather(x, term.support), deriv);
      if (!ev || !(ev->value < 0.0) || !std::isfinite(ev->value)) return false;
      const double s = -ev->value;
      phi -= std::log(s);
      if (deriv) {
        const std::size_t n = term.support.size();
        for (std::size_t i = 0; i < n; ++i) {
          const double gi = ev->gradient(static_cast<Index>(i));
          (*grad)(term.support[i]) += gi / s;
          for (std::size_t j = 0; j < n; ++j)
            (*hess)(term.support[i], term.support[j]) +=
                gi * ev->gradient(static_cast<Index>(j)) / (s * s) +
                ev->hessian(static_cast<Index>(i), static_cast<Index>(j)) / s;
        }
      }
    }
    for (Index i = 0; i < prog_.dim; ++i) {
      if (has_lower(prog_, i)) {
        const double s = x(i) - prog_.lower(i);
        if (!(s > 0.0)) return false;
        phi -= std::log(s);
        if (deriv) {
          (*grad)(i) -= 1.0 / s;
          (*hess)(i, i) += 1.0 / (s * s);
        }
      }
      if (has_upper(prog_, i)) {
        const double s = prog_.upper(i) - x(i);
        if (!(s > 0.0)) return false;
        phi -= std::log(s);
        if (deriv) {
          (*grad)(i) += 1.0 / s;
          (*hess)(i, i) += 1.0 / (s * s);
        }
      }
    }
    for (const auto& cone : prog_.cones) {
      const Vector local = gather(x, cone.support);
      const auto [u, s] = cone_parts(cone, local);
      const double gap = s * s - u.squaredNorm();
      if (!(s > 0.0) || !(gap > 0.0)) return false;
      phi -= std::log(gap);
      if (deriv) {
        // D = s^2 - |u|^2 ; grad D = 2 s c - 2 A^T u ; hess D = 2 c c^T - 2 A^T A
        const Vector dgap = 2.0 * s * cone.c - 2.0 * cone.a.transpose() * u;
        const Matrix hgap = 2.0 * cone.c * cone.c.transpose() - 2.0 * cone.a.transpose() * cone.a;
        const Vector g = -dgap / gap;
        const Matrix h = dgap * dgap.transpose() / (gap * gap) - hgap / gap;
        scatter(cone.support, 1.0, g, h, *grad, *hess);
      }
    }
    return std::isfinite(phi);
  }

  const ConvexProgram& prog_;
};

/// Least-norm correction of x onto {E x = e}.
inline Vector project_equalities(const ConvexProgram& prog, const Vector& x) {
  if (prog.eq_a.rows() == 0) return x;
  const Vector r = prog.eq_b - prog.eq_a * x;
  const Matrix aat = prog.eq_a * prog.eq_a.transpose();
  return x + prog.eq_a.transpose() * aat.ldlt().solve(r);
}

/// Newton direction for Phi_t under the equalities; returns false if the
/// system could not be factored.
inline bool newton_direction(const ConvexProgram& prog, const Vector& x, const Vector& grad, const Matrix& hess,
                             Vector& dx, Vector& hdx) {
  const Index n = prog.dim;
  Vector scale(n);
  for (Index i = 0; i < n; ++i) {
    const double d = hess(i, i);
    scale(i) = d > 1e-300 ? 1.0 / std::sqrt(d) : 1.0;
  }
  Matrix hs = scale.asDiagonal() * hess * scale.asDiagonal();
  const Vector gs = scale.cwiseProduct(grad);
  Eigen::LLT<Matrix> llt;
  double reg = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    if (reg > 0.0) {
      Matrix hr = hs;
      hr.diagonal().array() += reg;
      llt.compute(hr);
    } else {
      llt.compute(hs);
    }
    if (llt.info() == Eigen::Success) break;
    reg = reg == 0.0 ? 1e-12 : reg * 100.0;
    if (attempt == 11) return false;
  }
  Vector y;
  if (prog.eq_a.rows() > 0) {
    const Matrix as = prog.eq_a * scale.asDiagonal();
    const Vector resid = prog.eq_b - prog.eq_a * x;
    const Matrix hinv_at = llt.solve(as.transpose());
    const Vector hinv_g = llt.solve(gs);
    const Matrix schur = as * hinv_at;
    const Vector nu = schur.ldlt().solve(-as * hinv_g - resid);
    y = -(hinv_g + hinv_at * nu);
  } else {
    y = -llt.solve(gs);
  }
  dx = scale.cwiseProduct(y);
  hdx = hess * dx;
  return dx.allFinite();
}

}  // namespace detail

/// Worst constraint residual at x (<= 0 means strictly satisfied).
inline double max_violation(const ConvexProgram& prog, const Vector& x) {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& term : prog.inequalities) {
    auto ev = term.eval(detail::gather(x, term.support), false);
    v = std::max(v, ev ? ev->value : std::numeric_limits<double>::infinity());
  }
  for (Index i = 0; i < prog.dim; ++i) {
    if (detail::has_lower(prog, i)) v = std::max(v, prog.lower(i) - x(i));
    if (detail::has_upper(prog, i)) v = std::max(v, x(i) - prog.upper(i));
  }
  for (const auto& cone : prog.cones) {
    const auto [u, s] = detail::cone_parts(cone, detail::gather(x, cone.support));
    v = std::max(v, u.norm() - s);
  }
  if (prog.eq_a.rows() > 0) v = std::max(v, (prog.eq_a * x - prog.eq_b).cwiseAbs().maxCoeff());
  return v;
}

inline double evaluate_objective(const ConvexProgram& prog, const Vector& x) {
  return detail::Barrier(prog).objective(x);
}

inline std::optional<Vector> phase1_feasible_point(const ConvexProgram& prog, const Vector& x0,
                                                   const SolverOptions& opts = {});

/// Barrier-method maximization from x0 (a Phase-I search runs first when x0
/// is not strictly feasible).
inline SolverReport solve(const ConvexProgram& prog, const Vector& x0, const SolverOptions& opts = {}) {
  if (x0.size() != prog.dim) throw std::invalid_argument("x0 has wrong dimension");
  SolverReport rep;
  detail::Barrier barrier(prog);
  Vector x = detail::project_equalities(prog, x0);
  if (!barrier.strictly_feasible(x)) {
    auto start = phase1_feasible_point(prog, x, opts);
    if (!start) {
      rep.x_opt = x;
      rep.obj = std::numeric_limits<double>::quiet_NaN();
      rep.max_violation = max_violation(prog, x);
      rep.status = Status::Infeasible;
      rep.message = "phase I found no strictly feasible point";
      return rep;
    }
    x = *start;
  }

  const double m = static_cast<double>(detail::barrier_weight(prog));
  double t = opts.t0;
  Vector grad, dx, hdx;
  Matrix hess;
  double kkt = std::numeric_limits<double>::infinity();
  bool newton_cap_hit = false;
  bool early = false;

  for (int stage = 0; stage < opts.max_stages; ++stage) {
    rep.stages = stage + 1;
    if (opts.on_step) opts.on_step(stage, -1.0);
    for (int it = 0; it < opts.max_newton; ++it) {
      double phi = 0.0;
      if (!barrier.derivatives(x, t, phi, grad, hess)) {
        rep.status = Status::NumericalFailure;
        rep.message = "non-finite derivatives at a feasible iterate";
        rep.x_opt = x;
        rep.obj = barrier.objective(x);
        rep.max_violation = max_violation(prog, x);
        return rep;
      }
      if (!detail::newton_direction(prog, x, grad, hess, dx, hdx)) {
        rep.status = Status::NumericalFailure;
        rep.message = "Newton system could not be factored";
        rep.x_opt = x;
        rep.obj = barrier.objective(x);
        rep.max_violation = max_violation(prog, x);
        return rep;
      }
      const double slope = grad.dot(dx);
      const double lambda2 = -slope;
      kkt = hdx.cwiseAbs().maxCoeff() / t;
      if (lambda2 / 2.0 <= opts.newton_tol) break;
      if (it + 1 == opts.max_newton) newton_cap_hit = true;

      // Backtracking: stay strictly feasible, then Armijo (with a roundoff
      // allowance proportional to |Phi|).
      const double noise = 16.0 * std::numeric_limits<double>::epsilon() * (std::abs(phi) + 1.0);
      double step = 1.0;
      bool accepted = false;
      Vector trial;
      while (step > 1e-18) {
        trial = x + step * dx;
        const auto v = barrier.value(trial, t);
        if (v && *v <= phi + opts.armijo * step * slope + noise) {
          accepted = true;
          if (opts.on_step) opts.on_step(stage, -*v);
          break;
        }
        step *= opts.backtrack;
      }
      if (!accepted) break;  // precision floor: treat as centered
      x = trial;
      ++rep.iterations;
      if (opts.early_stop && opts.early_stop(x)) {
        early = true;
        break;
      }
    }
    if (early) break;
    if (m == 0.0 || m / t <= opts.tol_gap) break;
    t *= opts.mu;
  }

  rep.x_opt = x;
  rep.obj = barrier.objective(x);
  rep.gap = m / t;
  rep.max_violation = max_violation(prog, x);
  const double gscale = 1.0 + barrier.objective_gradient(x).cwiseAbs().maxCoeff();
  rep.kkt_residual = kkt / gscale;
  if (early) {
    rep.status = Status::Converged;
    rep.message = "early stop";
  } else if (!std::isfinite(rep.obj)) {
    rep.status = Status::NumericalFailure;
    rep.message = "objective is not finite at the final iterate";
  } else if (rep.gap <= opts.tol_gap && rep.max_violation <= opts.tol_feas && rep.kkt_residual <= opts.tol_kkt) {
    rep.status = Status::Converged;
  } else if (rep.gap > opts.tol_gap || newton_cap_hit) {
    rep.status = Status::MaxIter;
    rep.message = "iteration limit reached before the duality-gap target";
  } else {
    rep.status = Status::NumericalFailure;
    rep.message = "stationarity residual " + std::to_string(rep.kkt_residual) + " above tolerance";
  }
  return rep;
}

/// Strictly feasible point via the auxiliary problem
///   minimize s  s.t.  g_i(x) <= s,  box and cone constraints relaxed by s.
inline std::optional<Vector> phase1_feasible_point(const ConvexProgram& prog, const Vector& x0,
                                                   const SolverOptions& opts) {
  const Index n = prog.dim;
  detail::Barrier original(prog);

  const bool box_only = prog.inequalities.empty() && prog.cones.empty() && prog.eq_a.rows() == 0;
  if (box_only) {
    Vector x = x0.size() == n ? x0 : Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
      const bool lo = detail::has_lower(prog, i), hi = detail::has_upper(prog, i);
      if (lo && hi) {
        if (!(prog.lower(i) < prog.upper(i))) return std::nullopt;
        x(i) = 0.5 * (prog.lower(i) + prog.upper(i));
      } else if (lo) {
        x(i) = prog.lower(i) + 1.0;
      } else if (hi) {
        x(i) = prog.upper(i) - 1.0;
      }
    }
    return x;
  }

  Vector x = detail::project_equalities(prog, x0.size() == n ? x0 : Vector::Zero(n));
  if (original.strictly_feasible(x)) return x;

  const Index s_idx = n;
  ConvexProgram aux;
  aux.dim = n + 1;
  aux.objective.push_back(Term{{s_idx},
                               [](const Vector& local, bool deriv) -> std::optional<Evaluation> {
                                 Evaluation e;
                                 e.value = -local(0);
                                 if (deriv) {
                                   e.gradient = Vector::Constant(1, -1.0);
                                   e.hessian = Matrix::Zero(1, 1);
                                 }
                                 return e;
                               },
                               "phase1"});
  for (const auto& term : prog.inequalities) {
    Term wrapped;
    wrapped.support = term.support;
    wrapped.support.push_back(s_idx);
    wrapped.label = term.label;
    const auto inner = term.eval;
    const Index k = static_cast<Index>(term.support.size());
    wrapped.eval = [inner, k](const Vector& local, bool deriv) -> std::optional<Evaluation> {
      auto ev = inner(local.head(k), deriv);
      if (!ev) return std::nullopt;
      Evaluation e;
      e.value = ev->value - local(k);
      if (deriv) {
        e.gradient.resize(k + 1);
        e.gradient.head(k) = ev->gradient;
        e.gradient(k) = -1.0;
        e.hessian = Matrix::Zero(k + 1, k + 1);
        e.hessian.topLeftCorner(k, k) = ev->hessian;
      }
      return e;
    };
    aux.inequalities.push_back(std::move(wrapped));
  }
  auto bound_term = [s_idx](Index i, double bound, double sign) {
    // sign * (x_i - bound) - s <= 0
    return Term{{i, s_idx},
                [bound, sign](const Vector& local, bool deriv) -> std::optional<Evaluation> {
                  Evaluation e;
                  e.value = sign * (local(0) - bound) - local(1);
                  if (deriv) {
                    e.gradient = Eigen::Vector2d(sign, -1.0);
                    e.hessian = Matrix::Zero(2, 2);
                  }
                  return e;
                },
                "bound"};
  };
  for (Index i = 0; i < n; ++i) {
    if (detail::has_lower(prog, i)) aux.inequalities.push_back(bound_term(i, prog.lower(i), -1.0));
    if (detail::has_upper(prog, i)) aux.inequalities.push_back(bound_term(i, prog.upper(i), 1.0));
  }
  for (const auto& cone : prog.cones) {
    Cone c = cone;
    c.support.push_back(s_idx);
    c.a.conservativeResize(Eigen::NoChange, c.a.cols() + 1);
    c.a.col(c.a.cols() - 1).setZero();
    c.c.conservativeResize(c.c.size() + 1);
    c.c(c.c.size() - 1) = 1.0;
    aux.cones.push_back(std::move(c));
  }
  if (prog.eq_a.rows() > 0) {
    aux.eq_a = Matrix::Zero(prog.eq_a.rows(), n + 1);
    aux.eq_a.leftCols(n) = prog.eq_a;
    aux.eq_b = prog.eq_b;
  }

  double worst = max_violation(prog, x);
  if (!std::isfinite(worst)) return std::nullopt;  // x0 outside some function's domain
  for (const auto& cone : prog.cones) {
    const auto [u, s] = detail::cone_parts(cone, detail::gather(x, cone.support));
    worst = std::max(worst, -s);
  }
  Vector z(n + 1);
  z.head(n) = x;
  z(n) = std::max(worst, 0.0) + 1.0;

  SolverOptions o = opts;
  o.on_step = nullptr;
  o.early_stop = [&original, n](const Vector& zz) {
    return zz(n) < 0.0 && original.strictly_feasible(zz.head(n));
  };
  const SolverReport rep = solve(aux, z, o);
  const Vector xs = rep.x_opt.head(n);
  if (rep.x_opt(n) < 0.0 && original.strictly_feasible(xs)) return xs;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Term builders

/// a . x[support] + b
inline Term linear_term(std::vector<Index> support, Vector coeffs, double offset, std::string label = {}) {
  const Index k = static_cast<Index>(support.size());
  return Term{std::move(support),
              [coeffs = std::move(coeffs), offset, k](const Vector& local, bool deriv) -> std::optional<Evaluation> {
                Evaluation e;
                e.value = coeffs.dot(local) + offset;
                if (deriv) {
                  e.gradient = coeffs;
                  e.hessian = Matrix::Zero(k, k);
                }
                return e;
              },
              std::move(label)};
}

/// 0.5 x^T Q x + c^T x + r over the support.
inline Term quadratic_term(std::vector<Index> support, Matrix q, Vector c, double r, std::string label = {}) {
  return Term{std::move(support),
              [q = std::move(q), c = std::move(c), r](const Vector& local, bool deriv) -> std::optional<Evaluation> {
                Evaluation e;
                e.value = 0.5 * local.dot(q * local) + c.dot(local) + r;
                if (deriv) {
                  e.gradient = q * local + c;
                  e.hessian = q;
                }
                return e;
              },
              std::move(label)};
}

}  // namespace uavsec::convex
