#pragma once

// Topological index of isolated zeros.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pitchfork/equilibria.hpp"
#include "pitchfork/error.hpp"
#include "pitchfork/field.hpp"
#include "pitchfork/matrix.hpp"

namespace pitchfork {

enum class IndexMethod { sign_det, one_dim, product, winding, perturbation_sum };

inline const char* to_string(IndexMethod m) {
  switch (m) {
    case IndexMethod::sign_det: return "sign-det";
    case IndexMethod::one_dim: return "one-dim";
    case IndexMethod::product: return "product";
    case IndexMethod::winding: return "winding";
    case IndexMethod::perturbation_sum: return "perturbation-sum";
  }
  return "?";
}

struct IndexResult {
  int value = 0;
  IndexMethod method = IndexMethod::sign_det;
  int samples = 0;          // boundary samples (winding) or zeros summed (perturbation)
  std::string certificate;  // human-readable witness
  Vec eta;                  // perturbation used, if any
};

inline IndexResult index_nondegenerate(const Matrix& j, double tol = 1e-12) {
  const double d = det(j);
  const double scale = std::pow(std::max(1.0, j.max_abs()), static_cast<double>(j.rows()));
  if (std::abs(d) <= tol * scale) throw NumericError("index_nondegenerate: singular Jacobian");
  IndexResult r;
  r.value = d > 0 ? 1 : -1;
  r.method = IndexMethod::sign_det;
  r.certificate = "det J = " + format_double(d);
  return r;
}

/// Index of the zero u0 of a scalar function from the signs at u0 -+ r.
inline IndexResult index_1d(const std::function<double(double)>& f, double u0, double r,
                            double tol = 1e-300) {
  const double lo = f(u0 - r), hi = f(u0 + r);
  if (!(std::abs(lo) > tol) || !(std::abs(hi) > tol))
    throw NumericError("index_1d: boundary value below tolerance (inconclusive radius)");
  IndexResult res;
  res.method = IndexMethod::one_dim;
  res.samples = 2;
  res.value = (lo < 0 && hi > 0) ? 1 : (lo > 0 && hi < 0) ? -1 : 0;
  res.certificate = "f(u0-r) = " + format_double(lo) + ", f(u0+r) = " + format_double(hi);
  return res;
}

/// Index of a zero with a one-dimensional center direction, from the index
/// of the reduced field and the hyperbolic block: the sign of det M is
/// (-1)^(number of eigenvalues with negative real part).
inline int index_product(int ind_center, int stable_count) {
  return (stable_count % 2 == 0) ? ind_center : -ind_center;
}

/// Degree of V / |V| on the circle of radius r around center. Starting from
/// `samples` equally spaced arcs, every arc whose halves turn by more than
/// pi / 4 is bisected (to depth 24), so near-zeros close to the circle are
/// resolved.
inline IndexResult winding_2d(const FieldSpec& f, std::span<const double> center, double eps,
                              double r, int samples = 256) {
  if (f.dim != 2) throw Error("winding_2d: field must be two-dimensional");
  if (samples < 64) throw Error("winding_2d: at least 64 samples required");
  const double two_pi = 2 * std::numbers::pi;
  int evals = 0;
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0, max_turn = 0.0;
  auto angle = [&](double t) {
    const Vec x{center[0] + r * std::cos(t), center[1] + r * std::sin(t)};
    const Vec v = eval_regularized(f, x, eps);
    const double mag = std::hypot(v[0], v[1]);
    ++evals;
    vmin = std::min(vmin, mag);
    vmax = std::max(vmax, mag);
    return std::atan2(v[1], v[0]);
  };
  auto wrap = [&](double d) { return d - two_pi * std::round(d / two_pi); };
  // Angle increment over [t0, t1], given the directions at both ends. An arc
  // is accepted when both halves turn by at most pi / 4 and agree with it.
  auto arc = [&](auto&& self, double t0, double a0, double t1, double a1, int depth) -> double {
    const double d = wrap(a1 - a0);
    const double tm = 0.5 * (t0 + t1);
    const double am = angle(tm);
    const double d1 = wrap(am - a0), d2 = wrap(a1 - am);
    if ((std::abs(d1) <= std::numbers::pi / 4 && std::abs(d2) <= std::numbers::pi / 4 &&
         std::abs(d1 + d2 - d) < 1e-9) ||
        depth == 24) {
      max_turn = std::max({max_turn, std::abs(d1), std::abs(d2)});
      return d1 + d2;
    }
    return self(self, t0, a0, tm, am, depth + 1) + self(self, tm, am, t1, a1, depth + 1);
  };
  double total = 0.0;
  const double a_start = angle(0.0);
  double t_prev = 0.0, a_prev = a_start;
  for (int k = 1; k <= samples; ++k) {
    const double t = two_pi * k / samples;
    const double a = k == samples ? a_start : angle(t);
    total += arc(arc, t_prev, a_prev, t, a, 0);
    t_prev = t;
    a_prev = a;
  }
  if (!(vmin > 1e-14 * std::max(1.0, vmax))) throw NumericError("winding_2d: zero on the boundary circle");
  const double w = total / two_pi;
  if (!(std::abs(w - std::round(w)) < 0.2 && max_turn < std::numbers::pi / 2))
    throw NumericError("winding_2d: unresolved winding; increase r or samples");
  IndexResult res;
  res.value = static_cast<int>(std::lround(w));
  res.method = IndexMethod::winding;
  res.samples = evals;
  res.certificate = "winding " + format_double(w) + " with " + std::to_string(evals) +
                    " samples, min |V| = " + format_double(vmin);
  return res;
}

namespace detail {

/// Boundary points of the sphere of radius r: both ends in 1D, a regular
/// polygon in 2D, random points otherwise.
inline std::vector<Vec> sphere_samples(std::span<const double> center, double r, std::uint64_t seed) {
  const std::size_t n = center.size();
  std::vector<Vec> pts;
  if (n == 1) {
    pts.push_back({center[0] - r});
    pts.push_back({center[0] + r});
  } else if (n == 2) {
    for (int k = 0; k < 256; ++k) {
      const double t = 2 * std::numbers::pi * k / 256;
      pts.push_back({center[0] + r * std::cos(t), center[1] + r * std::sin(t)});
    }
  } else {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 4096; ++k) {
      Vec d(n);
      for (double& v : d) v = nd(gen);
      const double s = norm2(d);
      for (std::size_t i = 0; i < n; ++i) d[i] = center[i] + r * d[i] / s;
      pts.push_back(std::move(d));
    }
  }
  return pts;
}

inline Vec random_unit(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Vec d(n);
  double s = 0.0;
  do {
    for (double& v : d) v = nd(gen);
    s = norm2(d);
  } while (s == 0.0);
  for (double& v : d) v /= s;
  return d;
}

}  // namespace detail

/// Sum of sign det J over the zeros of V - eta in the ball, for two
/// independent small generic eta; the two sums must agree.
inline IndexResult index_by_perturbation(const FieldSpec& f, std::span<const double> center, double eps,
                                         double r, std::uint64_t seed = 1, const ZeroOptions& opt = {}) {
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (const Vec& p : detail::sphere_samples(center, r, seed)) {
    const double m = norm2(eval_regularized(f, p, eps));
    vmin = std::min(vmin, m);
    vmax = std::max(vmax, m);
  }
  if (!(vmin > 1e-14 * std::max(1.0, vmax)))
    throw NumericError("index_by_perturbation: zero on the boundary sphere");
  const double mag = 1e-3 * vmin;
  int sums[2] = {0, 0};
  int counts[2] = {0, 0};
  Vec etas[2];
  for (int draw = 0; draw < 2; ++draw) {
    Vec eta = detail::random_unit(f.dim, seed * 2654435761u + static_cast<std::uint64_t>(draw) + 1);
    for (double& v : eta) v *= mag;
    const auto zeros = find_zeros_in_ball(f, center, r, eps, opt, eta);
    for (const auto& z : zeros) {
      if (!z.index) throw NumericError("index_by_perturbation: perturbed field has a degenerate zero");
      sums[draw] += *z.index;
    }
    counts[draw] = static_cast<int>(zeros.size());
    etas[draw] = std::move(eta);
  }
  if (sums[0] != sums[1])
    throw NumericError("index_by_perturbation: perturbations disagree (" + std::to_string(sums[0]) +
                       " vs " + std::to_string(sums[1]) + ")");
  IndexResult res;
  res.value = sums[0];
  res.method = IndexMethod::perturbation_sum;
  res.samples = counts[0];
  res.eta = etas[0];
  res.certificate = std::to_string(counts[0]) + " and " + std::to_string(counts[1]) +
                    " zeros of V - eta (|eta| = " + format_double(mag) + ")";
  return res;
}

/// Sum of indices of all zeros in the ball: sign det over the zeros when all
/// are nondegenerate, otherwise the perturbation degree.
inline int ball_index_sum(const FieldSpec& f, const std::vector<Equilibrium>& zeros,
                          std::span<const double> center, double eps, double r, std::uint64_t seed = 1,
                          const ZeroOptions& opt = {}) {
  int s = 0;
  for (const auto& z : zeros) {
    if (!z.index) return index_by_perturbation(f, center, eps, r, seed, opt).value;
    s += *z.index;
  }
  return s;
}

}  // namespace pitchfork
