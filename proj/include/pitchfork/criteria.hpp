#pragma once

// Conditions P0-P3 at a candidate point and the bifurcation verdict.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchfork/centerman.hpp"
#include "pitchfork/equilibria.hpp"
#include "pitchfork/error.hpp"
#include "pitchfork/field.hpp"
#include "pitchfork/index.hpp"
#include "pitchfork/matrix.hpp"

namespace pitchfork {

struct Tolerances {
  double tol_res = 1e-10;
  double tol_zero = 1e-7;
  double tol_p1 = 1e-7;
  double tol_p2 = 1e-7;
  double tol_p3 = 1e-6;
  double tol_kernel = 1e-8;
};

struct AnalysisOptions {
  Tolerances tol;
  double radius = 0.5;
  /// Half-width of the parameter window for the zero counts; chosen from the
  /// P2 witness when absent.
  std::optional<double> delta_eps;
  std::uint64_t seed = 1;
  int grid_per_axis = 0;

  ZeroOptions zero_options() const {
    ZeroOptions z;
    z.tol_res = tol.tol_res;
    z.tol_zero = tol.tol_zero;
    z.grid_per_axis = grid_per_axis;
    return z;
  }
};

struct P0Report {
  double residual = 0.0;
  std::optional<Spectrum> spectrum;
  bool simple_nonhyp = false;
  bool isolated = false;
  int absorbed = 0;               // numerical zeros merged into the x0 cluster
  double isolation_radius = 0.0;  // resolution of the isolation check
  double index_radius = 0.0;
  std::optional<int> index;
  std::optional<IndexResult> primary;
  std::optional<IndexResult> winding;
  std::optional<IndexResult> boundary;  // 1D degree from the signs at x0 -+ r
  std::optional<IndexResult> perturbation;
  bool pass = false;
  std::vector<std::string> notes;
};

struct P1Report {
  Vec v_l;
  double vl_dVeps = 0.0;
  bool pass = false;
};

struct P2Report {
  bool applicable = false;
  Vec omega;
  double directional_deriv = 0.0;
  Vec det_grad;
  std::vector<Vec> kernel;
  Vec kernel_values;  // det_grad . kernel[k]
  /// det_grad annihilates the kernel directions with zero last component,
  /// so the witness does not depend on the choice of omega.
  bool well_posed = true;
  double spread = 0.0;
  bool pass = false;
  std::string note;
};

struct P3Report {
  bool available = false;
  double value = 0.0;
  double via_manifold = 0.0;
  double d_uu_det = 0.0;
  double dy_det_term = 0.0;
  bool pass = false;
  std::string note;
};

struct ConditionReport {
  P0Report p0;
  P1Report p1;
  P2Report p2;
  P3Report p3;
  Tolerances tol;
};

namespace detail {

inline double dist_to(std::span<const double> a, std::span<const double> b) { return dist(a, b); }

/// Index of the reduced center field along u -> x0 + A (u, h20 u^2): the
/// radius shrinks until the curve stays in the index ball and the reduced
/// field has no sign change away from u = 0.
inline IndexResult center_product_index(const FieldSpec& f, const NormalForm& nf, const CenterCoeffs& cc,
                                        double r_idx) {
  auto fr = [&](double u) { return reduced_value(f, nf, cc, u); };
  auto curve_dist = [&](double u) {
    Vec w(nf.n, 0.0);
    w[0] = u;
    for (std::size_t k = 0; k + 1 < nf.n; ++k) w[k + 1] = cc.h20[k] * u * u;
    return norm2(nf.A * std::span<const double>(w));
  };
  double rc = std::min(r_idx, 0.1) / std::max(norm2(nf.A.col(0)), 1e-300);
  std::string why = "no admissible radius";
  for (int halving = 0; halving < 20; ++halving, rc *= 0.5) {
    if (std::max(curve_dist(rc), curve_dist(-rc)) > r_idx) continue;
    try {
      const IndexResult one = index_1d(fr, 0.0, rc);
      bool clean = true;
      for (int side : {-1, 1}) {
        const double ref = fr(side * rc);
        for (int k = 1; k < 64 && clean; ++k) {
          const double u = side * rc * k / 64.0;
          const double v = fr(u);
          if (v == 0.0 || (v > 0) != (ref > 0)) clean = false;
        }
      }
      if (!clean) {
        why = "reduced field changes sign inside the radius";
        continue;
      }
      IndexResult res = one;
      const int stable = nf.spectrum.stable_count;
      res.value = index_product(one.value, stable);
      res.method = IndexMethod::product;
      res.certificate = "reduced index " + std::to_string(one.value) + " at u-radius " + format_double(rc) +
                        " (" + one.certificate + "), " + std::to_string(stable) +
                        " stable hyperbolic eigenvalues";
      return res;
    } catch (const NumericError& e) {
      why = e.what();
    }
  }
  throw NumericError("center index: " + why);
}

}  // namespace detail

inline P0Report check_p0(const FieldSpec& f, std::span<const double> x0, double eps0, double r,
                         const AnalysisOptions& opt = {}) {
  if (!(r > 0)) throw Error("check_p0: radius must be positive");
  P0Report p;
  p.residual = norm2(eval_regularized(f, x0, eps0));
  if (!(p.residual <= opt.tol.tol_res))
    throw Error("not an equilibrium: |V(x0, eps0)| = " + format_double(p.residual));
  const ZeroOptions zopt = opt.zero_options();

  const Matrix J = jacobian_x(local_jet(f, x0, eps0, 1).jet);
  try {
    p.spectrum = eigenvalues(J, opt.tol.tol_zero);
    p.simple_nonhyp = p.spectrum->zero_count == 1;
    if (!p.simple_nonhyp)
      p.notes.push_back(std::to_string(p.spectrum->zero_count) + " zero eigenvalues");
  } catch (const NumericError& e) {
    p.notes.push_back(e.what());
  }

  // Zeros within r_iso of x0 are below the resolution of the check (flat
  // fields have many numerical zeros there) and are merged into x0; a
  // degenerate zero between r_iso and 4 r_iso signals an accumulating or
  // continuous zero set and makes x0 non-isolated.
  const double r_iso = std::max(10.0 * zopt.cluster_radius(), 0.01 * r);
  p.isolation_radius = r_iso;
  const auto wide = find_zeros_in_ball(f, x0, r, eps0, zopt);
  const auto fine = find_zeros_in_ball(f, x0, std::min(r, 4.0 * r_iso), eps0, zopt);
  double d_min = std::numeric_limits<double>::infinity();
  bool crowded = false;
  for (const auto* set : {&wide, &fine})
    for (const auto& z : *set) {
      const double d = detail::dist_to(z.x, x0);
      if (d <= r_iso) {
        if (set == &fine && d > zopt.cluster_radius()) ++p.absorbed;
        continue;
      }
      if (d <= 4.0 * r_iso && z.degenerate) crowded = true;
      d_min = std::min(d_min, d);
    }
  p.isolated = !crowded;
  if (p.absorbed > 0)
    p.notes.push_back(std::to_string(p.absorbed) + " numerical zeros within " + format_double(r_iso) +
                      " merged into x0");
  p.index_radius = std::min(r, 0.5 * d_min);

  if (p.simple_nonhyp) {
    try {
      const NormalForm nf = normalize(f, x0, eps0, opt.tol.tol_zero);
      const CenterCoeffs cc = center_coeffs(nf);
      p.primary = detail::center_product_index(f, nf, cc, p.index_radius);
    } catch (const NumericError& e) {
      p.notes.push_back(std::string("center index unavailable: ") + e.what());
    }
  }
  if (f.dim == 2) {
    try {
      p.winding = winding_2d(f, x0, eps0, p.index_radius);
    } catch (const NumericError& e) {
      p.notes.push_back(std::string("winding unavailable: ") + e.what());
    }
  }
  if (f.dim == 1) {
    try {
      auto v = [&](double x) { return eval_regularized(f, Vec{x}, eps0)[0]; };
      p.boundary = index_1d(v, x0[0], p.index_radius, 1e-14);
    } catch (const NumericError& e) {
      p.notes.push_back(std::string("boundary index unavailable: ") + e.what());
    }
  }
  if (!p.winding && !p.boundary) {
    try {
      p.perturbation = index_by_perturbation(f, x0, eps0, p.index_radius, opt.seed, zopt);
    } catch (const Error& e) {
      p.notes.push_back(std::string("perturbation index unavailable: ") + e.what());
    }
  }
  for (const auto* check : {&p.winding, &p.boundary, &p.perturbation}) {
    if (!check->has_value()) continue;
    if (!p.index) p.index = (*check)->value;
    if (p.primary && (*check)->value != p.primary->value)
      throw NumericError("inconsistent index oracles: product " + std::to_string(p.primary->value) + ", " +
                         to_string((*check)->method) + " " + std::to_string((*check)->value));
  }
  if (p.primary) p.index = p.primary->value;
  p.pass = p.simple_nonhyp && p.isolated && p.index && *p.index != 0;
  return p;
}

inline P1Report check_p1(const FieldSpec& f, std::span<const double> x0, double eps0,
                         const Tolerances& tol = {}) {
  const Jet3 j = local_jet(f, x0, eps0, 1).jet;
  const std::size_t n = f.dim;
  const SVD svd(jacobian_x(j).transpose());
  P1Report p;
  p.v_l = svd.v.col(n - 1);
  canonical_sign(p.v_l);
  for (std::size_t i = 0; i < n; ++i) p.vl_dVeps += p.v_l[i] * j.d1(i, n);
  p.pass = std::abs(p.vl_dVeps) <= tol.tol_p1;
  return p;
}

inline P2Report check_p2(const FieldSpec& f, std::span<const double> x0, double eps0,
                         const Tolerances& tol = {}) {
  const LocalJet lj = local_jet(f, x0, eps0, 2);
  const std::size_t n = f.dim;
  P2Report p;
  if (lj.valid_order < 2) {
    p.note = "second derivatives unavailable: " + lj.note;
    return p;
  }
  const Matrix ext = jacobian_ext(lj.jet);
  p.kernel = kernel_right(ext, tol.tol_kernel);
  p.det_grad = det_gradient(lj.jet);
  for (const Vec& k : p.kernel) p.kernel_values.push_back(dot(p.det_grad, k));

  // Minimum-norm kernel element with last component 1.
  Vec last(p.kernel.size());
  for (std::size_t k = 0; k < p.kernel.size(); ++k) last[k] = p.kernel[k][n];
  const double ln = norm2(last);
  if (!(ln >= 1e-8)) {
    p.note = "P2 inapplicable: no kernel vector with nonzero parameter component";
    return p;
  }
  p.applicable = true;
  p.omega.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < p.kernel.size(); ++k)
    for (std::size_t i = 0; i <= n; ++i) p.omega[i] += last[k] / (ln * ln) * p.kernel[k][i];
  p.omega[n] = 1.0;
  p.directional_deriv = dot(p.det_grad, p.omega);

  if (p.kernel.size() > 1) {
    const Matrix lrow(1, last.size(), last);
    for (const Vec& z : kernel_right(lrow, 1e-12)) {
      Vec w(n + 1, 0.0);
      for (std::size_t k = 0; k < p.kernel.size(); ++k)
        for (std::size_t i = 0; i <= n; ++i) w[i] += z[k] * p.kernel[k][i];
      p.spread = std::max(p.spread, std::abs(dot(p.det_grad, w)));
    }
    p.well_posed = p.spread <= tol.tol_p2;
    if (!p.well_posed) p.note = "witness depends on the kernel representative";
  }
  p.pass = !p.well_posed || std::abs(p.directional_deriv) > tol.tol_p2;
  return p;
}

inline P3Report check_p3(const FieldSpec& f, std::span<const double> x0, double eps0,
                         const Tolerances& tol = {}) {
  P3Report p;
  try {
    const NormalForm nf = normalize(f, x0, eps0, tol.tol_zero);
    if (nf.valid_order < 3) {
      p.note = "third derivatives unavailable: " + nf.note;
      return p;
    }
    const CenterCoeffs cc = center_coeffs(nf);
    const P3Parts parts = p3_value(nf);
    p.value = parts.value;
    p.d_uu_det = parts.d_uu_det;
    p.dy_det_term = parts.dy_det_term;
    p.via_manifold = p3_via_manifold(nf, cc);
    p.available = true;
  } catch (const NumericError& e) {
    p.note = std::string("normalization failed: ") + e.what();
    return p;
  }
  p.pass = std::abs(p.value) > tol.tol_p3 && std::abs(p.via_manifold) > tol.tol_p3 &&
           (p.value > 0) == (p.via_manifold > 0);
  return p;
}

enum class Verdict {
  pitchfork_1to3,
  pitchfork_3to1,
  pitchfork_type_1tok,
  pitchfork_type_kto1,
  saddle_node_likely,
  no_bifurcation,
  inconsistent,
  undetermined,
};

struct Classification {
  Verdict verdict = Verdict::undetermined;
  int k = 0;  // branch count for the pitchfork-type verdicts
  std::string theory_basis;
  std::pair<int, int> counts{0, 0};
  double delta_eps = 0.0;
  std::optional<double> F_ue;  // reduced mixed derivative, sign of the index flip
  std::vector<std::string> notes;
};

inline std::string to_string(const Classification& c) {
  switch (c.verdict) {
    case Verdict::pitchfork_1to3: return "Pitchfork 1->3";
    case Verdict::pitchfork_3to1: return "Pitchfork 3->1";
    case Verdict::pitchfork_type_1tok: return "PitchforkType 1->" + std::to_string(c.k);
    case Verdict::pitchfork_type_kto1: return "PitchforkType " + std::to_string(c.k) + "->1";
    case Verdict::saddle_node_likely: return "SaddleNodeLikely";
    case Verdict::no_bifurcation: return "NoBifurcationDetected";
    case Verdict::inconsistent: return "Inconsistent";
    case Verdict::undetermined: return "Undetermined";
  }
  return "?";
}

inline bool is_pitchfork(Verdict v) {
  return v == Verdict::pitchfork_1to3 || v == Verdict::pitchfork_3to1 || v == Verdict::pitchfork_type_1tok ||
         v == Verdict::pitchfork_type_kto1;
}

/// Parameter half-window for the zero counts: wider when the transversality
/// witness is small.
inline double default_delta_eps(const Tolerances& tol, double directional_deriv) {
  return 10.0 * std::sqrt(tol.tol_zero) / std::clamp(std::abs(directional_deriv), 0.1, 10.0);
}

/// Verdict from the four conditions and the zero counts at eps0 -+ delta.
inline Verdict verdict_from(const ConditionReport& rep, std::pair<int, int> counts, int& k,
                            std::string& basis) {
  const auto [lo, hi] = counts;
  const int kmin = std::min(lo, hi), kmax = std::max(lo, hi);
  k = 0;
  if (rep.p0.pass && rep.p1.pass && rep.p2.pass) {
    if (kmin == 1 && kmax >= 3) {
      if (rep.p3.available && rep.p3.pass) {
        basis = "P0-P3: 1->3 or 3->1";
        if (kmax != 3) return Verdict::inconsistent;
        return lo == 1 ? Verdict::pitchfork_1to3 : Verdict::pitchfork_3to1;
      }
      basis = "P0-P2: 1->k or k->1 with k >= 3";
      k = kmax;
      return lo == 1 ? Verdict::pitchfork_type_1tok : Verdict::pitchfork_type_kto1;
    }
    basis = "P0-P2 hold but the counts show no fork";
    return Verdict::inconsistent;
  }
  if (!rep.p0.pass && rep.p0.index && *rep.p0.index == 0 && std::abs(hi - lo) == 2) {
    basis = "zero index with a pair of zeros created or destroyed";
    return Verdict::saddle_node_likely;
  }
  if (lo == hi) {
    basis = "conditions fail and the counts agree";
    return Verdict::no_bifurcation;
  }
  basis = "conditions fail and the counts change";
  return Verdict::undetermined;
}

struct Analysis {
  ConditionReport report;
  Classification classification;
};

/// All four conditions, the zero counts and the verdict. Numerical failures
/// of any stage give an Undetermined verdict with notes.
inline Analysis classify(const FieldSpec& f, std::span<const double> x0, double eps0,
                         const AnalysisOptions& opt = {}) {
  Analysis a;
  a.report.tol = opt.tol;
  Classification& c = a.classification;
  try {
    a.report.p0 = check_p0(f, x0, eps0, opt.radius, opt);
    a.report.p1 = check_p1(f, x0, eps0, opt.tol);
    a.report.p2 = check_p2(f, x0, eps0, opt.tol);
    a.report.p3 = check_p3(f, x0, eps0, opt.tol);
  } catch (const NumericError& e) {
    c.verdict = Verdict::undetermined;
    c.notes.push_back(e.what());
    return a;
  }
  for (const auto& s : a.report.p0.notes) c.notes.push_back("P0: " + s);
  if (!a.report.p2.note.empty()) c.notes.push_back("P2: " + a.report.p2.note);
  if (!a.report.p3.note.empty()) c.notes.push_back("P3: " + a.report.p3.note);

  c.delta_eps = opt.delta_eps ? *opt.delta_eps : default_delta_eps(opt.tol, a.report.p2.directional_deriv);
  try {
    c.counts = count_two_sided(f, x0, eps0, c.delta_eps, opt.radius, opt.zero_options());
  } catch (const Error& e) {
    c.verdict = Verdict::undetermined;
    c.notes.push_back(std::string("zero count failed: ") + e.what());
    return a;
  }
  c.verdict = verdict_from(a.report, c.counts, c.k, c.theory_basis);

  if (a.report.p0.simple_nonhyp) {
    try {
      const NormalForm nf = normalize(f, x0, eps0, opt.tol.tol_zero);
      c.F_ue = reduced_derivs(nf, center_coeffs(nf)).F_ue;
    } catch (const NumericError&) {
    }
  }
  if (c.verdict == Verdict::pitchfork_type_1tok || c.verdict == Verdict::pitchfork_type_kto1)
    c.notes.push_back("branch count is a lower bound at this radius");
  return a;
}

}  // namespace pitchfork
