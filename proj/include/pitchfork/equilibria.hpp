#pragma once

// Locating, counting and continuing zeros of V(., eps).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchfork/error.hpp"
#include "pitchfork/field.hpp"
#include "pitchfork/matrix.hpp"

namespace pitchfork {

/// x -> V(x, eps) - offset at a fixed parameter, with its Jacobian. Values at
/// removable singular points are regularized; Jacobians fall back to finite
/// differences there.
struct System {
  std::size_t dim = 0;
  std::function<Vec(std::span<const double>)> value;
  std::function<Matrix(std::span<const double>)> jacobian;
};

inline System slice(const FieldSpec& f, double eps, Vec offset = {}) {
  if (offset.empty()) offset.assign(f.dim, 0.0);
  System s;
  s.dim = f.dim;
  s.value = [&f, eps, offset](std::span<const double> x) {
    Vec v = eval_regularized(f, x, eps);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= offset[i];
    return v;
  };
  s.jacobian = [&f, eps](std::span<const double> x) { return jacobian_x(f, x, eps); };
  return s;
}

struct NewtonOptions {
  double tol_res = 1e-10;
  int max_iters = 100;
  /// Iterates farther than 10 * ball_radius from ball_center count as
  /// divergence; ball_radius <= 0 disables the check.
  Vec ball_center;
  double ball_radius = 0.0;
  /// Zeros found earlier; an iterate within known_radius of one of them
  /// stops with status `known`.
  const std::vector<Vec>* known = nullptr;
  double known_radius = 0.0;
};

enum class NewtonStatus { converged, known, singular, diverged, stalled, max_iters, eval_error };

inline const char* to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::known: return "reached a known zero";
    case NewtonStatus::singular: return "singular Jacobian";
    case NewtonStatus::diverged: return "diverged";
    case NewtonStatus::stalled: return "no progress";
    case NewtonStatus::max_iters: return "maximum iterations exceeded";
    case NewtonStatus::eval_error: return "evaluation failed";
  }
  return "?";
}

struct NewtonOutcome {
  NewtonStatus status = NewtonStatus::max_iters;
  Vec x;
  double residual = 0.0;
  int iters = 0;
};

/// Newton's method on `sys`. The iteration stops once the residual is four
/// orders below tol_res and the next step is negligible, or the step
/// stagnates; it has converged only in those cases and only if the final
/// residual is at most tol_res. Running out of iterations never counts as
/// convergence, which keeps flat near-zeros of degenerate fields out of the
/// zero set.
inline NewtonOutcome try_newton(const System& sys, std::span<const double> x0,
                                const NewtonOptions& opt) {
  NewtonOutcome out;
  out.x.assign(x0.begin(), x0.end());
  const double tight = opt.tol_res * 1e-4;
  bool stopped = false;
  // Even at a degenerate zero the residual keeps shrinking geometrically, so
  // an iteration whose best residual has not halved for a while is lost.
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  try {
    for (out.iters = 0; out.iters <= opt.max_iters; ++out.iters) {
      const Vec v = sys.value(out.x);
      out.residual = norm2(v);
      if (!std::isfinite(out.residual)) {
        out.status = NewtonStatus::eval_error;
        return out;
      }
      if (out.residual == 0.0) {
        stopped = true;
        break;
      }
      if (out.iters == opt.max_iters) break;
      if (out.residual <= 0.5 * best) {
        best = out.residual;
        since_best = 0;
      } else if (++since_best > 15) {
        out.status = NewtonStatus::stalled;
        return out;
      }
      const LU lu(sys.jacobian(out.x));
      if (lu.singular || lu.det() == 0.0) {
        out.status = out.residual <= tight ? NewtonStatus::converged : NewtonStatus::singular;
        return out;
      }
      const Vec step = lu.solve(v);
      // A small residual alone is not enough: in flat regions |V| drops below
      // any absolute threshold far from a zero, where the Newton step is
      // still large.
      if (out.residual <= tight && norm2(step) <= 1e-13 * (1.0 + norm2(out.x))) {
        stopped = true;
        break;
      }
      for (std::size_t i = 0; i < out.x.size(); ++i) out.x[i] -= step[i];
      if (opt.ball_radius > 0) {
        Vec d(out.x);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= opt.ball_center[i];
        if (norm2(d) > 10 * opt.ball_radius) {
          out.status = NewtonStatus::diverged;
          return out;
        }
      }
      if (norm2(step) <= 1e-14 * (1.0 + norm2(out.x))) {
        out.residual = norm2(sys.value(out.x));
        stopped = true;
        break;
      }
      if (opt.known)
        for (const Vec& z : *opt.known) {
          double d = 0.0;
          for (std::size_t i = 0; i < z.size(); ++i) d += (out.x[i] - z[i]) * (out.x[i] - z[i]);
          if (std::sqrt(d) <= opt.known_radius) {
            out.status = NewtonStatus::known;
            return out;
          }
        }
    }
  } catch (const NumericError&) {
    out.status = NewtonStatus::singular;
    return out;
  } catch (const EvalError&) {
    out.status = NewtonStatus::eval_error;
    return out;
  }
  out.status = (stopped && out.residual <= opt.tol_res) ? NewtonStatus::converged
                                                        : NewtonStatus::max_iters;
  return out;
}

/// A located zero of V(., eps).
struct Equilibrium {
  Vec x;
  double eps = 0.0;
  double residual = 0.0;
  std::optional<Spectrum> spectrum;  // absent when some eigenvalue is unclassifiable
  std::optional<int> index;          // sign det J, absent when degenerate
  bool degenerate = false;
  double det_j = 0.0;
  int newton_iters = 0;
};

/// Options shared by zero finding, counting and continuation.
struct ZeroOptions {
  double tol_res = 1e-10;
  double tol_zero = 1e-7;
  /// |det J| below det_tol * max(1, max|J_ij|)^n marks a zero as degenerate.
  double det_tol = 1e-8;
  int grid_per_axis = 0;  // 0: dimension-dependent default
  std::size_t seed_budget = 200000;
  int max_iters = 100;

  double cluster_radius() const { return 10.0 * std::sqrt(tol_res); }
};

inline int default_grid(std::size_t n) {
  switch (n) {
    case 1: return 2001;
    case 2: return 41;
    case 3: return 15;
    case 4: return 9;
    default: return 5;
  }
}

/// Fill in spectrum, degeneracy and sign index of a converged point.
inline Equilibrium describe(const FieldSpec& f, Vec x, double eps, double residual, int iters,
                            const ZeroOptions& opt) {
  Equilibrium e;
  e.x = std::move(x);
  e.eps = eps;
  e.residual = residual;
  e.newton_iters = iters;
  const Matrix j = jacobian_x(local_jet(f, e.x, eps, 1).jet);
  e.det_j = det(j);
  const double scale = std::pow(std::max(1.0, j.max_abs()), static_cast<double>(f.dim));
  e.degenerate = std::abs(e.det_j) <= opt.det_tol * scale;
  if (!e.degenerate) e.index = e.det_j > 0 ? 1 : -1;
  try {
    e.spectrum = eigenvalues(j, opt.tol_zero);
  } catch (const NumericError&) {
  }
  return e;
}

/// Newton's method on V(., eps); throws NumericError unless it converges.
inline Equilibrium newton(const FieldSpec& f, std::span<const double> x0, double eps,
                          double tol_res = 1e-10, int max_iters = 100) {
  NewtonOptions opt;
  opt.tol_res = tol_res;
  opt.max_iters = max_iters;
  opt.ball_center.assign(x0.begin(), x0.end());
  opt.ball_radius = std::max(1.0, norm2(x0));
  const NewtonOutcome r = try_newton(slice(f, eps), x0, opt);
  if (r.status != NewtonStatus::converged)
    throw NumericError(std::string("newton: ") + to_string(r.status));
  ZeroOptions z;
  z.tol_res = tol_res;
  return describe(f, r.x, eps, r.residual, r.iters, z);
}

namespace detail {

inline double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct Candidate {
  Vec x;
  double residual;
  int iters;
};

/// Newton from every point of a cube grid; converged points inside the ball,
/// clustered so that each cluster is represented by its smallest residual.
/// Seeds whose iterates reach an already found zero are cut short.
inline std::vector<Candidate> grid_zeros(const System& sys, std::span<const double> center,
                                         double r, const ZeroOptions& opt) {
  const std::size_t n = sys.dim;
  const int g = opt.grid_per_axis > 0 ? opt.grid_per_axis : default_grid(n);
  if (g < 3) throw Error("find_zeros_in_ball: grid_per_axis must be at least 3");
  const double total = static_cast<double>(n) * std::pow(static_cast<double>(g), static_cast<double>(n));
  if (total > static_cast<double>(opt.seed_budget))
    throw Error("find_zeros_in_ball: seed budget exceeded (" + std::to_string(static_cast<long long>(total)) +
                " > " + std::to_string(opt.seed_budget) + ")");
  NewtonOptions nopt;
  nopt.tol_res = opt.tol_res;
  nopt.max_iters = opt.max_iters;
  nopt.ball_center.assign(center.begin(), center.end());
  nopt.ball_radius = r;
  const double rad = opt.cluster_radius();
  std::vector<Vec> known;
  nopt.known = &known;
  nopt.known_radius = rad;

  std::vector<Candidate> found;
  std::vector<int> idx(n, 0);
  Vec seed(n);
  while (true) {
    for (std::size_t k = 0; k < n; ++k)
      seed[k] = center[k] - r + 2.0 * r * idx[k] / static_cast<double>(g - 1);
    const NewtonOutcome o = try_newton(sys, seed, nopt);
    if (o.status == NewtonStatus::converged && dist(o.x, center) <= r * (1 + 1e-12)) {
      if (std::none_of(known.begin(), known.end(), [&](const Vec& z) { return dist(z, o.x) <= rad; }))
        known.push_back(o.x);
      found.push_back({o.x, o.residual, o.iters});
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == g) idx[k++] = 0;
    if (k == n) break;
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const Candidate& a, const Candidate& b) { return a.residual < b.residual; });
  std::vector<Candidate> reps;
  for (const Candidate& c : found) {
    const bool dup = std::any_of(reps.begin(), reps.end(),
                                 [&](const Candidate& q) { return dist(q.x, c.x) <= rad; });
    if (!dup) reps.push_back(c);
  }
  std::sort(reps.begin(), reps.end(),
            [](const Candidate& a, const Candidate& b) { return a.x < b.x; });
  return reps;
}

}  // namespace detail

/// All zeros of V(., eps) - offset within distance r of center, ordered
/// lexicographically. Each one is re-verified by a fresh evaluation.
inline std::vector<Equilibrium> find_zeros_in_ball(const FieldSpec& f, std::span<const double> center,
                                                   double r, double eps,
                                                   const ZeroOptions& opt = {}, Vec offset = {}) {
  if (!(r > 0)) throw Error("find_zeros_in_ball: radius must be positive");
  const System sys = slice(f, eps, offset);
  std::vector<Equilibrium> out;
  for (auto& c : detail::grid_zeros(sys, center, r, opt)) {
    const double res = norm2(sys.value(c.x));
    if (res > opt.tol_res) continue;
    out.push_back(describe(f, std::move(c.x), eps, res, c.iters, opt));
  }
  return out;
}

/// Zero counts at eps0 - delta_eps and eps0 + delta_eps within radius r.
inline std::pair<int, int> count_two_sided(const FieldSpec& f, std::span<const double> x0,
                                           double eps0, double delta_eps, double r,
                                           const ZeroOptions& opt = {}) {
  const auto lo = find_zeros_in_ball(f, x0, r, eps0 - delta_eps, opt);
  const auto hi = find_zeros_in_ball(f, x0, r, eps0 + delta_eps, opt);
  return {static_cast<int>(lo.size()), static_cast<int>(hi.size())};
}

/// Root of u -> f(u, eps) inside the ball |u| <= |eps|^(1 - delta) by Newton
/// from u = 0. Contraction of the Newton map is checked by sampling |F'| at
/// 16 points of the ball (a diagnostic, not a proof).
inline double newton_scaled_1d(const std::function<double(double, double)>& f, double eps,
                               double delta, double tol = 1e-14, int max_iters = 100) {
  if (eps == 0.0) throw Error("newton_scaled_1d: eps must be nonzero");
  const double rho = std::pow(std::abs(eps), 1.0 - delta);
  const double hd = 1e-6 * rho;
  auto df = [&](double u) { return (f(u + hd, eps) - f(u - hd, eps)) / (2 * hd); };
  auto newton_map = [&](double u) { return u - f(u, eps) / df(u); };
  for (int k = 0; k < 16; ++k) {
    const double u = -rho + 2 * rho * k / 15.0;
    const double h = 1e-4 * rho;
    const double dF = (newton_map(u + h) - newton_map(u - h)) / (2 * h);
    if (!(std::abs(dF) < 1.0)) throw NumericError("newton_scaled_1d: Newton map is not contracting");
  }
  double u = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const double v = f(u, eps);
    if (std::abs(v) <= tol) return u;
    const double d = df(u);
    if (d == 0.0) throw NumericError("newton_scaled_1d: zero derivative");
    const double nu = u - v / d;
    if (std::abs(nu) > rho) throw NumericError("newton_scaled_1d: iteration left the ball");
    if (std::abs(nu - u) <= 1e-16 * (1 + std::abs(u))) return nu;
    u = nu;
  }
  return u;
}

/// Equilibria along an eps-graph, ordered by strictly increasing eps.
struct Branch {
  std::vector<Equilibrium> points;
  Equilibrium origin;
  std::string stop_below;  // why continuation towards eps_lo ended early, empty if it did not
  std::string stop_above;
};

struct ContinuationOptions {
  ZeroOptions zero;
  /// Branch points farther than `radius` from `center` end the branch
  /// (radius <= 0 disables).
  Vec center;
  double radius = 0.0;
  int max_halvings = 6;
};

namespace detail {

/// dx/deps = -J^{-1} V_eps, if J is invertible.
inline std::optional<Vec> branch_tangent(const FieldSpec& f, std::span<const double> x, double eps) {
  try {
    const Jet3 j = local_jet(f, x, eps, 1).jet;
    const LU lu(jacobian_x(j));
    if (lu.singular || lu.det() == 0.0) return std::nullopt;
    Vec ve(f.dim);
    for (std::size_t i = 0; i < f.dim; ++i) ve[i] = j.d1(i, f.dim);
    Vec t = lu.solve(ve);
    for (double& v : t) v = -v;
    return t;
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline std::vector<Equilibrium> continue_one_way(const FieldSpec& f, const Equilibrium& seed,
                                                 double target, double max_step,
                                                 const ContinuationOptions& opt,
                                                 std::string& reason) {
  std::vector<Equilibrium> pts;
  Equilibrium prev = seed;
  std::optional<Equilibrium> before;
  const double dir = target > seed.eps ? 1.0 : -1.0;
  NewtonOptions nopt;
  nopt.tol_res = opt.zero.tol_res;
  nopt.max_iters = 50;
  while (dir * (target - prev.eps) > 1e-14 * (1 + std::abs(target))) {
    double step = std::min(max_step, std::abs(target - prev.eps));
    bool accepted = false;
    for (int halving = 0; halving <= opt.max_halvings && !accepted; ++halving, step *= 0.5) {
      const double e = (halving == 0 && step >= std::abs(target - prev.eps)) ? target
                                                                             : prev.eps + dir * step;
      const double de = e - prev.eps;
      Vec pred = prev.x;
      if (auto t = branch_tangent(f, prev.x, prev.eps)) {
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += (*t)[i] * de;
      } else if (before) {
        const double s = de / (prev.eps - before->eps);
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += s * (prev.x[i] - before->x[i]);
      }
      nopt.ball_center = pred;
      nopt.ball_radius = std::max(std::abs(de), 1e-8);
      const NewtonOutcome o = try_newton(slice(f, e), pred, nopt);
      if (o.status != NewtonStatus::converged) continue;
      // Reject corrections that jump to a different branch.
      const double jump = dist(o.x, pred);
      const double allowed = 0.5 * (dist(pred, prev.x) + std::abs(de)) + 10 * std::sqrt(opt.zero.tol_res);
      if (jump > allowed) continue;
      Equilibrium next = describe(f, o.x, e, o.residual, o.iters, opt.zero);
      if (opt.radius > 0 && dist(next.x, opt.center) > opt.radius) {
        reason = "left the ball at eps = " + format_double(e);
        return pts;
      }
      before = prev;
      prev = next;
      pts.push_back(std::move(next));
      accepted = true;
    }
    if (!accepted) {
      reason = "fold or loss of convergence near eps = " + format_double(prev.eps);
      return pts;
    }
  }
  return pts;
}

}  // namespace detail

/// Natural-parameter continuation of a converged seed over [eps_lo, eps_hi]
/// with a tangent predictor, Newton corrector and step halving.
inline Branch continue_branch(const FieldSpec& f, const Equilibrium& seed, double eps_lo, double eps_hi,
                              double max_step, const ContinuationOptions& opt = {}) {
  if (!(max_step > 0)) throw Error("continue_branch: max_step must be positive");
  if (seed.eps < eps_lo - 1e-14 || seed.eps > eps_hi + 1e-14)
    throw Error("continue_branch: seed parameter outside the range");
  Branch b;
  b.origin = seed;
  auto below = detail::continue_one_way(f, seed, eps_lo, max_step, opt, b.stop_below);
  auto above = detail::continue_one_way(f, seed, eps_hi, max_step, opt, b.stop_above);
  b.points.assign(below.rbegin(), below.rend());
  b.points.push_back(seed);
  b.points.insert(b.points.end(), above.begin(), above.end());
  return b;
}

}  // namespace pitchfork
