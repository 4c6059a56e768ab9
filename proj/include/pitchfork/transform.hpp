#pragma once

// Changes of coordinates applied symbolically to a field.

#include <span>
#include <vector>

#include "pitchfork/error.hpp"
#include "pitchfork/expr.hpp"
#include "pitchfork/field.hpp"
#include "pitchfork/matrix.hpp"

namespace pitchfork {

/// The field in coordinates z = T x + a eps (eps unchanged):
/// z' = T V(T^{-1}(z - a eps), eps).
inline FieldSpec transform_field(const FieldSpec& f, const Matrix& T, std::span<const double> a) {
  const std::size_t n = f.dim;
  if (T.rows() != n || T.cols() != n || a.size() != n)
    throw Error("transform_field: shape mismatch");
  const Matrix Ti = inverse(T);
  FieldSpec out;
  out.dim = n;
  out.param_name = f.param_name;
  out.var_names = f.var_names;
  for (std::size_t i = 0; i < n; ++i) {
    ExprBuilder b;
    const int e = b.variable(static_cast<int>(n));
    std::vector<int> z(n);
    for (std::size_t j = 0; j < n; ++j)
      z[j] = a[j] == 0.0 ? b.variable(static_cast<int>(j))
                         : b.binary(Op::sub, b.variable(static_cast<int>(j)),
                                    b.binary(Op::mul, b.constant(a[j]), e));
    std::vector<int> slots(n + 1);
    for (std::size_t q = 0; q < n; ++q) {
      int acc = -1;
      for (std::size_t j = 0; j < n; ++j) {
        if (Ti(q, j) == 0.0) continue;
        const int term = b.binary(Op::mul, b.constant(Ti(q, j)), z[j]);
        acc = acc < 0 ? term : b.binary(Op::add, acc, term);
      }
      slots[q] = acc < 0 ? b.constant(0.0) : acc;
    }
    slots[n] = e;
    int acc = -1;
    for (std::size_t p = 0; p < n; ++p) {
      if (T(i, p) == 0.0) continue;
      const int term = b.binary(Op::mul, b.constant(T(i, p)), b.inline_expr(f.exprs[p], slots));
      acc = acc < 0 ? term : b.binary(Op::add, acc, term);
    }
    const int root = acc < 0 ? b.constant(0.0) : acc;
    out.exprs.push_back(std::move(b).build(root));
  }
  out.source = unparse_field(out);
  return out;
}

/// Image of a point under z = T x + a eps.
inline Vec transform_point(const Matrix& T, std::span<const double> a, std::span<const double> x, double eps) {
  Vec z = T * x;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += a[i] * eps;
  return z;
}

/// c V for a nonzero constant c.
inline FieldSpec scale_field(const FieldSpec& f, double c) {
  if (c == 0.0) throw Error("scale_field: factor must be nonzero");
  FieldSpec out = f;
  out.exprs.clear();
  const std::size_t m = f.dim + 1;
  for (const Expr& e : f.exprs) {
    ExprBuilder b;
    std::vector<int> slots(m);
    for (std::size_t s = 0; s < m; ++s) slots[s] = b.variable(static_cast<int>(s));
    const int root = b.binary(Op::mul, b.constant(c), b.inline_expr(e, slots));
    out.exprs.push_back(std::move(b).build(root));
  }
  out.source = unparse_field(out);
  return out;
}

}  // namespace pitchfork
