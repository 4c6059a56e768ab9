#pragma once

// Block normal form at a simple non-hyperbolic zero, Taylor coefficients of
// the center manifold of the extended system (eps' = 0), the reduced
// scalar field, and the second-order determinant condition.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pitchfork/error.hpp"
#include "pitchfork/field.hpp"
#include "pitchfork/matrix.hpp"

namespace pitchfork {

/// Coordinates w = (u, y) with x = x0 + A w. In these coordinates the
/// system reads u' = F(u, y, eps), y' = M y + G(u, y, eps).
struct NormalForm {
  std::size_t n = 0;
  Matrix A;
  Matrix A_inv;
  Matrix M;  // (n-1) x (n-1)
  Vec shift;
  double eps0 = 0.0;
  Vec v_l;  // unit left null vector of D_x V
  Vec v_r;  // unit right null vector of D_x V
  Spectrum spectrum;
  Jet3 jet;          // V at (x0, eps0), original coordinates
  Jet3 transformed;  // w -> A^{-1} V(x0 + A w, eps) at w = 0
  bool exact = true;
  int valid_order = 3;
  double block_residual = 0.0;  // largest off-block entry of the transformed Jacobian
  std::string note;
};

namespace detail {

/// Normalize a row: largest entry of magnitude 1, first nonzero positive.
inline void normalize_row(Vec& v) {
  const double s = norm_inf(v);
  if (s == 0.0) throw NumericError("normalize: zero basis vector");
  for (double& x : v) x /= s;
  canonical_sign(v);
}

/// Jet of w -> L V(x0 + R w, eps): every derivative slot except eps is
/// contracted with R, and the component index with L.
inline Jet3 transform_jet(const Jet3& j, const Matrix& L, const Matrix& R) {
  const std::size_t n = j.n, m = j.m();
  Matrix B(m, m);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) B(a, b) = R(a, b);
  B(n, n) = 1.0;

  // Contract the last slot of a flat tensor with `rank` derivative slots.
  auto contract_slot = [&](const Vec& t, std::size_t rank, std::size_t slot) {
    Vec out(t.size(), 0.0);
    std::size_t inner = 1;
    for (std::size_t s = slot + 1; s < rank; ++s) inner *= m;
    const std::size_t outer = t.size() / (inner * m);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) {
          const double w = B(b, a);
          if (w == 0.0) continue;
          for (std::size_t in = 0; in < inner; ++in)
            out[(o * m + a) * inner + in] += w * t[(o * m + b) * inner + in];
        }
    return out;
  };
  auto mix_components = [&](const Vec& t) {
    const std::size_t block = t.size() / n;
    Vec out(t.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < n; ++p) {
        const double w = L(i, p);
        if (w == 0.0) continue;
        for (std::size_t k = 0; k < block; ++k) out[i * block + k] += w * t[p * block + k];
      }
    return out;
  };

  Jet3 out = j;
  out.value = L * std::span<const double>(j.value);
  out.d1v = mix_components(contract_slot(j.d1v, 1, 0));
  if (j.order >= 2) {
    Vec t = j.d2v;
    for (std::size_t s = 0; s < 2; ++s) t = contract_slot(t, 2, s);
    out.d2v = mix_components(t);
  }
  if (j.order >= 3) {
    Vec t = j.d3v;
    for (std::size_t s = 0; s < 3; ++s) t = contract_slot(t, 3, s);
    out.d3v = mix_components(t);
  }
  return out;
}

}  // namespace detail

/// Block normal form at (x0, eps0). The first row of A^{-1} is the left null
/// vector of D_x V, the others a basis of its row space; each row is scaled
/// to unit max-norm with a positive leading entry, so a field already in
/// block form gets A = I.
inline NormalForm normalize(const FieldSpec& f, std::span<const double> x0, double eps0,
                            double tol_zero = 1e-7) {
  NormalForm nf;
  nf.n = f.dim;
  nf.shift.assign(x0.begin(), x0.end());
  nf.eps0 = eps0;
  const LocalJet lj = local_jet(f, x0, eps0, 3);
  nf.jet = lj.jet;
  nf.exact = lj.exact;
  nf.valid_order = lj.valid_order;
  nf.note = lj.note;
  if (nf.valid_order < 1) throw NumericError("normalize: no reliable Jacobian at the point");

  const std::size_t n = f.dim;
  const Matrix J = jacobian_x(nf.jet);
  nf.spectrum = eigenvalues(J, tol_zero);
  if (nf.spectrum.zero_count != 1)
    throw NumericError("normalize: zero eigenvalue is not simple (" +
                       std::to_string(nf.spectrum.zero_count) + " zero eigenvalues)");

  const SVD svd(J);
  const SVD svdt(J.transpose());
  nf.v_r = svd.v.col(n - 1);
  nf.v_l = svdt.v.col(n - 1);
  canonical_sign(nf.v_r);
  canonical_sign(nf.v_l);

  Matrix Ainv(n, n);
  {
    Vec row = nf.v_l;
    detail::normalize_row(row);
    for (std::size_t c = 0; c < n; ++c) Ainv(0, c) = row[c];
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    Vec row = svd.v.col(k);
    detail::normalize_row(row);
    for (std::size_t c = 0; c < n; ++c) Ainv(k + 1, c) = row[c];
  }
  const double cond = condition_number(Ainv);
  if (!(cond <= 1e8)) throw NumericError("normalize: ill-conditioned change of basis");
  nf.A_inv = Ainv;
  nf.A = inverse(Ainv);
  nf.transformed = detail::transform_jet(nf.jet, nf.A_inv, nf.A);

  const Matrix Jw = jacobian_x(nf.transformed);
  nf.M = Jw.block(1, 1, n - 1, n - 1);
  double off = std::abs(Jw(0, 0));
  for (std::size_t k = 1; k < n; ++k) off = std::max({off, std::abs(Jw(0, k)), std::abs(Jw(k, 0))});
  nf.block_residual = off;
  return nf;
}

/// y = h(u, eps) = h01 eps + h20 u^2 + h11 u eps + h02 eps^2 + O(3).
struct CenterCoeffs {
  Vec h01;
  Vec h20;
  Vec h11;
  Vec h02;
  double F_eps = 0.0;  // linear eps-coefficient of the center equation
  int order = 2;
};

namespace detail {

/// Second derivative of component i of the transformed field along the
/// slot-vectors a and b.
inline double d2_along(const Jet3& j, std::size_t i, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t p = 0; p < j.m(); ++p) {
    if (a[p] == 0.0) continue;
    for (std::size_t q = 0; q < j.m(); ++q)
      if (b[q] != 0.0) s += j.d2(i, p, q) * a[p] * b[q];
  }
  return s;
}

}  // namespace detail

/// Order-2 Taylor coefficients of the center manifold of the extended system,
/// matched order by order in the invariance equation
/// h_u F(u, h, eps) = M h + G(u, h, eps).
inline CenterCoeffs center_coeffs(const NormalForm& nf) {
  if (nf.transformed.order < 2) throw NumericError("center_coeffs: order-2 jet required");
  const Jet3& j = nf.transformed;
  const std::size_t n = nf.n, m = n + 1, ny = n - 1;
  CenterCoeffs cc;
  cc.F_eps = j.d1(0, n);
  if (ny == 0) return cc;
  const LU lu(nf.M);
  if (lu.singular) throw NumericError("center_coeffs: hyperbolic block is singular");

  Vec rhs(ny);
  for (std::size_t k = 0; k < ny; ++k) rhs[k] = -j.d1(k + 1, n);
  cc.h01 = lu.solve(rhs);

  Vec eu(m, 0.0), de(m, 0.0);
  eu[0] = 1.0;
  for (std::size_t k = 0; k < ny; ++k) de[k + 1] = cc.h01[k];
  de[n] = 1.0;

  for (std::size_t k = 0; k < ny; ++k) rhs[k] = -0.5 * detail::d2_along(j, k + 1, eu, eu);
  cc.h20 = lu.solve(rhs);
  for (std::size_t k = 0; k < ny; ++k)
    rhs[k] = 2.0 * cc.h20[k] * cc.F_eps - detail::d2_along(j, k + 1, eu, de);
  cc.h11 = lu.solve(rhs);
  for (std::size_t k = 0; k < ny; ++k)
    rhs[k] = cc.h11[k] * cc.F_eps - 0.5 * detail::d2_along(j, k + 1, de, de);
  cc.h02 = lu.solve(rhs);
  return cc;
}

/// Derivatives at the origin of the reduced field f(u, eps) = F(u, h(u, eps), eps).
struct ReducedField {
  double F_ue = 0.0;          // d2f / du deps
  double F_ue_partial = 0.0;  // d2F / du deps without the manifold coupling
  double F_uu = 0.0;
  double F_uuu = std::numeric_limits<double>::quiet_NaN();
  bool third_order = false;  // F_uuu available
};

inline ReducedField reduced_derivs(const NormalForm& nf, const CenterCoeffs& cc) {
  const Jet3& j = nf.transformed;
  const std::size_t n = nf.n;
  ReducedField rf;
  rf.F_ue_partial = j.d2(0, 0, n);
  rf.F_ue = rf.F_ue_partial;
  for (std::size_t k = 0; k + 1 < n; ++k) rf.F_ue += j.d2(0, 0, k + 1) * cc.h01[k];
  rf.F_uu = j.d2(0, 0, 0);
  if (j.order >= 3 && nf.valid_order >= 3) {
    rf.F_uuu = j.d3(0, 0, 0, 0);
    for (std::size_t k = 0; k + 1 < n; ++k) rf.F_uuu += 6.0 * j.d2(0, 0, k + 1) * cc.h20[k];
    rf.third_order = true;
  }
  return rf;
}

/// D_uu det + D_y det . (-M^{-1} G_uu) in normal-form coordinates, with the
/// two summands reported separately.
struct P3Parts {
  double value = 0.0;
  double d_uu_det = 0.0;
  double dy_det_term = 0.0;
};

inline P3Parts p3_value(const NormalForm& nf) {
  if (nf.transformed.order < 3 || nf.valid_order < 3)
    throw NumericError("p3_value: reliable order-3 jets required");
  const Jet3& j = nf.transformed;
  const std::size_t n = nf.n, ny = n - 1;
  P3Parts out;
  out.d_uu_det = det_hessian(j)(0, 0);
  if (ny > 0) {
    const Vec g = det_gradient(j);
    Vec guu(ny);
    for (std::size_t k = 0; k < ny; ++k) guu[k] = j.d2(k + 1, 0, 0);
    const Vec s = solve(nf.M, guu);
    for (std::size_t k = 0; k < ny; ++k) out.dy_det_term -= g[k + 1] * s[k];
  }
  out.value = out.d_uu_det + out.dy_det_term;
  return out;
}

/// (det D_x V o c)''(0) along the center curve c(u) = x0 + A (u, h20 u^2),
/// evaluated with original-coordinate derivatives.
inline double p3_via_manifold(const NormalForm& nf, const CenterCoeffs& cc) {
  if (nf.jet.order < 3 || nf.valid_order < 3)
    throw NumericError("p3_via_manifold: reliable order-3 jets required");
  const std::size_t n = nf.n;
  const Matrix H = det_hessian(nf.jet);
  const Vec g = det_gradient(nf.jet);
  const Vec a0 = nf.A.col(0);
  Vec w(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) w[k + 1] = 2.0 * cc.h20[k];
  const Vec c2 = nf.A * std::span<const double>(w);
  double v = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) v += a0[a] * H(a, b) * a0[b];
    v += g[a] * c2[a];
  }
  return v;
}

/// The reduced scalar field at eps0 along the approximate center curve:
/// u -> [A^{-1} V(x0 + A (u, h20 u^2), eps0)]_0.
inline double reduced_value(const FieldSpec& f, const NormalForm& nf, const CenterCoeffs& cc, double u) {
  const std::size_t n = nf.n;
  Vec w(n, 0.0);
  w[0] = u;
  for (std::size_t k = 0; k + 1 < n; ++k) w[k + 1] = cc.h20[k] * u * u;
  Vec x = nf.A * std::span<const double>(w);
  for (std::size_t i = 0; i < n; ++i) x[i] += nf.shift[i];
  const Vec v = eval_regularized(f, x, nf.eps0);
  return dot(nf.A_inv.row(0), v);
}

}  // namespace pitchfork
