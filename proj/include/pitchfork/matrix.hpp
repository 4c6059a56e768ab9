#pragma once

// Dense linear algebra for small matrices and derivatives of det(D_x V).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pitchfork/error.hpp"
#include "pitchfork/field.hpp"

namespace pitchfork {

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), a_(std::move(entries)) {
    if (a_.size() != rows * cols) throw Error("Matrix: entry count does not match shape");
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
      if (r.size() != cols_) throw Error("Matrix: ragged initializer");
      a_.insert(a_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diag(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
  const std::vector<double>& data() const { return a_; }

  Vec row(std::size_t i) const { return Vec(a_.begin() + i * cols_, a_.begin() + (i + 1) * cols_); }
  Vec col(std::size_t j) const {
    Vec c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  /// Copy of the block [r0, r0+nr) x [c0, c0+nc).
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    Matrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }

  /// The matrix with row r and column c deleted.
  Matrix minor(std::size_t r, std::size_t c) const {
    Matrix m(rows_ - 1, cols_ - 1);
    for (std::size_t i = 0, ii = 0; i < rows_; ++i) {
      if (i == r) continue;
      for (std::size_t j = 0, jj = 0; j < cols_; ++j) {
        if (j == c) continue;
        m(ii, jj++) = (*this)(i, j);
      }
      ++ii;
    }
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw Error("Matrix: shape mismatch in product");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vec operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols_ != x.size()) throw Error("Matrix: shape mismatch in product");
    Vec y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < a.cols_; ++j) y[i] += a(i, j) * x[j];
    return y;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw Error("Matrix: shape mismatch in sum");
    for (std::size_t i = 0; i < a.a_.size(); ++i) a.a_[i] += b.a_[i];
    return a;
  }

  friend Matrix operator-(Matrix a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw Error("Matrix: shape mismatch in sum");
    for (std::size_t i = 0; i < a.a_.size(); ++i) a.a_[i] -= b.a_[i];
    return a;
  }

  friend Matrix operator*(double s, Matrix a) {
    for (double& v : a.a_) v *= s;
    return a;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// LU factorization with partial pivoting (PA = LU, stored in place).
struct LU {
  Matrix lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;

  explicit LU(Matrix m) : lu(std::move(m)) {
    if (!lu.square()) throw Error("LU: matrix is not square");
    const std::size_t n = lu.rows();
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
      if (lu(p, k) == 0.0) {
        singular = true;
        continue;
      }
      if (p != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu(p, j), lu(k, j));
        std::swap(perm[p], perm[k]);
        sign = -sign;
      }
      for (std::size_t i = k + 1; i < n; ++i) {
        const double f = lu(i, k) / lu(k, k);
        lu(i, k) = f;
        for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      }
    }
  }

  double det() const {
    double d = sign;
    for (std::size_t i = 0; i < lu.rows(); ++i) d *= lu(i, i);
    return d;
  }

  Vec solve(std::span<const double> b) const {
    if (singular) throw NumericError("singular matrix");
    const std::size_t n = lu.rows();
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[perm[i]];
      for (std::size_t j = 0; j < i; ++j) s -= lu(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
      x[i] = s / lu(i, i);
    }
    return x;
  }
};

inline double det(const Matrix& m) {
  if (!m.square()) throw Error("det: matrix is not square");
  if (m.rows() == 0) return 1.0;
  return LU(m).det();
}

inline Vec solve(const Matrix& m, std::span<const double> b) { return LU(m).solve(b); }

inline Matrix inverse(const Matrix& m) {
  LU lu(m);
  const std::size_t n = m.rows();
  Matrix inv(n, n);
  Vec e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    const Vec c = lu.solve(e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = c[i];
  }
  return inv;
}

/// Transposed cofactor matrix; well defined when m is singular.
inline Matrix adjugate(const Matrix& m) {
  if (!m.square()) throw Error("adjugate: matrix is not square");
  const std::size_t n = m.rows();
  Matrix adj(n, n);
  if (n == 0) return adj;
  if (n == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double c = det(m.minor(j, i));
      adj(i, j) = ((i + j) % 2 == 0) ? c : -c;
    }
  return adj;
}

/// Directional derivative of adj at m along b: entry (i,j) is the derivative
/// of the cofactor C(j,i), obtained from Jacobi's formula on the minor.
inline Matrix adjugate_derivative(const Matrix& m, const Matrix& b) {
  const std::size_t n = m.rows();
  Matrix d(n, n);
  if (n <= 1) return d;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Matrix mm = m.minor(j, i);
      const Matrix bm = b.minor(j, i);
      const double c = (adjugate(mm) * bm).trace();
      d(i, j) = ((i + j) % 2 == 0) ? c : -c;
    }
  return d;
}

/// Thin SVD by one-sided Jacobi: m = U diag(s) V^T with V square (cols x cols).
/// Singular values are sorted in decreasing order.
struct SVD {
  Vec s;
  Matrix u;  // rows x cols
  Matrix v;  // cols x cols

  explicit SVD(const Matrix& m) {
    const std::size_t r = m.rows(), c = m.cols();
    Matrix a = m;
    Matrix vv = Matrix::identity(c);
    const double tiny = std::numeric_limits<double>::min();
    for (int sweep = 0; sweep < 60; ++sweep) {
      double off = 0.0;
      for (std::size_t p = 0; p + 1 < c; ++p)
        for (std::size_t q = p + 1; q < c; ++q) {
          double alpha = 0.0, beta = 0.0, gamma = 0.0;
          for (std::size_t i = 0; i < r; ++i) {
            alpha += a(i, p) * a(i, p);
            beta += a(i, q) * a(i, q);
            gamma += a(i, p) * a(i, q);
          }
          if (std::abs(gamma) <= 1e-300 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta))
            continue;
          off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta + tiny));
          const double zeta = (beta - alpha) / (2.0 * gamma);
          const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
          const double cs = 1.0 / std::sqrt(1.0 + t * t);
          const double sn = cs * t;
          for (std::size_t i = 0; i < r; ++i) {
            const double ap = a(i, p), aq = a(i, q);
            a(i, p) = cs * ap - sn * aq;
            a(i, q) = sn * ap + cs * aq;
          }
          for (std::size_t i = 0; i < c; ++i) {
            const double vp = vv(i, p), vq = vv(i, q);
            vv(i, p) = cs * vp - sn * vq;
            vv(i, q) = sn * vp + cs * vq;
          }
        }
      if (off <= 1e-15) break;
    }
    Vec norms(c);
    for (std::size_t j = 0; j < c; ++j) {
      double ss = 0.0;
      for (std::size_t i = 0; i < r; ++i) ss += a(i, j) * a(i, j);
      norms[j] = std::sqrt(ss);
    }
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });
    s.resize(c);
    u = Matrix(r, c);
    v = Matrix(c, c);
    for (std::size_t k = 0; k < c; ++k) {
      const std::size_t j = order[k];
      s[k] = norms[j];
      for (std::size_t i = 0; i < c; ++i) v(i, k) = vv(i, j);
      if (norms[j] > 0)
        for (std::size_t i = 0; i < r; ++i) u(i, k) = a(i, j) / norms[j];
    }
  }

  double sigma_max() const { return s.empty() ? 0.0 : s.front(); }
};

/// First nonzero (above 1e-12 of the max) component made positive.
inline void canonical_sign(Vec& v) {
  const double scale = norm_inf(v);
  for (double x : v)
    if (std::abs(x) > 1e-12 * scale) {
      if (x < 0)
        for (double& y : v) y = -y;
      return;
    }
}

/// Orthonormal basis of the numerical null space {v : m v = 0}: right singular
/// vectors whose singular value is at most tol * sigma_max.
inline std::vector<Vec> kernel_right(const Matrix& m, double tol = 1e-8) {
  const SVD svd(m);
  const double cut = tol * svd.sigma_max();
  std::vector<Vec> out;
  for (std::size_t k = 0; k < svd.s.size(); ++k)
    if (svd.s[k] <= cut) {
      Vec v = svd.v.col(k);
      canonical_sign(v);
      out.push_back(std::move(v));
    }
  return out;
}

/// Basis of {w : w^T m = 0}.
inline std::vector<Vec> kernel_left(const Matrix& m, double tol = 1e-8) {
  return kernel_right(m.transpose(), tol);
}

/// 2-norm condition number (infinite when singular).
inline double condition_number(const Matrix& m) {
  const SVD svd(m);
  const double lo = svd.s.empty() ? 0.0 : svd.s.back();
  return lo == 0.0 ? std::numeric_limits<double>::infinity() : svd.sigma_max() / lo;
}

struct Spectrum {
  std::vector<std::complex<double>> eigenvalues;  // sorted by (re, im)
  int zero_count = 0;
  int unstable_count = 0;
  int stable_count = 0;
};

namespace detail {

/// Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.
inline std::vector<std::complex<double>> hqr(Matrix h) {
  const int n = static_cast<int>(h.rows());
  auto a = [&](int i, int j) -> double& {
    return h(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  const double eps = std::numeric_limits<double>::epsilon();
  std::vector<std::complex<double>> wri(static_cast<std::size_t>(n));
  auto out = [&](int i) -> std::complex<double>& { return wri[static_cast<std::size_t>(i)]; };
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l > 0; --l) {
        double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) <= eps * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn) {
        out(nn--) = x + t;
      } else {
        double y = a(nn - 1, nn - 1);
        double w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + std::copysign(z, p);
            out(nn - 1) = out(nn) = x + z;
            if (z != 0.0) out(nn) = x - w / z;
          } else {
            out(nn) = std::complex<double>(x + p, -z);
            out(nn - 1) = std::conj(out(nn));
          }
          nn -= 2;
        } else {
          if (its == 60) throw NumericError("QR iteration did not converge");
          if (its == 10 || its == 20 || its == 40) {
            // exceptional shift
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v =
                std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            a(i + 2, i) = 0.0;
            if (i != m) a(i + 2, i - 1) = 0.0;
          }
          for (int k = m; k < nn; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k + 1 != nn) r = a(k + 2, k - 1);
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) a(k, k - 1) = -a(k, k - 1);
            } else {
              a(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              p = a(k, j) + q * a(k + 1, j);
              if (k + 1 != nn) {
                p += r * a(k + 2, j);
                a(k + 2, j) -= p * z;
              }
              a(k + 1, j) -= p * y;
              a(k, j) -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
              p = x * a(i, k) + y * a(i, k + 1);
              if (k + 1 != nn) {
                p += z * a(i, k + 2);
                a(i, k + 2) -= p * r;
              }
              a(i, k + 1) -= p * q;
              a(i, k) -= p;
            }
          }
        }
      }
    } while (l + 1 < nn);
  }
  return wri;
}

/// Householder reduction to upper Hessenberg form (similarity transform).
inline Matrix hessenberg(Matrix a) {
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha += a(i, k) * a(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (a(k + 1, k) > 0) alpha = -alpha;
    Vec v(n, 0.0);
    v[k + 1] = a(k + 1, k) - alpha;
    for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
    const double vnorm2 = dot(v, v);
    if (vnorm2 == 0.0) continue;
    // a <- H a H with H = I - 2 v v^T / (v^T v)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
      s = 2.0 * s / vnorm2;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
    }
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
  return a;
}

}  // namespace detail

/// All eigenvalues, bucketed by tol_zero. Throws on an eigenvalue that is
/// not zero yet has |re| <= tol_zero, since it cannot be classified.
inline Spectrum eigenvalues(const Matrix& m, double tol_zero = 1e-7) {
  if (!m.square()) throw Error("eigenvalues: matrix is not square");
  if (m.rows() > kMaxDim) throw Error("eigenvalues: matrix larger than 12 x 12");
  for (double v : m.data())
    if (!std::isfinite(v)) throw NumericError("eigenvalues: non-finite entry");
  Spectrum sp;
  if (m.rows() == 0) return sp;
  sp.eigenvalues = detail::hqr(detail::hessenberg(m));
  std::sort(sp.eigenvalues.begin(), sp.eigenvalues.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
            });
  for (const auto& l : sp.eigenvalues) {
    if (std::abs(l) <= tol_zero) ++sp.zero_count;
    else if (l.real() > tol_zero) ++sp.unstable_count;
    else if (l.real() < -tol_zero) ++sp.stable_count;
    else throw NumericError("near-imaginary eigenvalue");
  }
  return sp;
}

/// D_x V block of a jet.
inline Matrix jacobian_x(const Jet3& j) {
  Matrix m(j.n, j.n);
  for (std::size_t r = 0; r < j.n; ++r)
    for (std::size_t c = 0; c < j.n; ++c) m(r, c) = j.d1(r, c);
  return m;
}

/// D_x V at a point by first-order Taylor propagation along each axis;
/// falls back to `local_jet` at singular points.
inline Matrix jacobian_x(const FieldSpec& f, std::span<const double> x, double eps) {
  const std::size_t n = f.dim;
  const Vec base = detail::base_point(x, eps);
  Matrix m(n, n);
  try {
    detail::DirKey d(n + 1, 0);
    for (std::size_t c = 0; c < n; ++c) {
      d[c] = 1;
      const auto t = detail::taylor_along<1>(f, base, d);
      d[c] = 0;
      for (std::size_t r = 0; r < n; ++r) m(r, c) = t[0][r];
    }
    return m;
  } catch (const SingularPointError&) {
    return jacobian_x(local_jet(f, x, eps, 1).jet);
  }
}

/// [D_x V | D_eps V], n x (n+1).
inline Matrix jacobian_ext(const Jet3& j) {
  Matrix m(j.n, j.n + 1);
  for (std::size_t r = 0; r < j.n; ++r)
    for (std::size_t c = 0; c <= j.n; ++c) m(r, c) = j.d1(r, c);
  return m;
}

/// d(D_x V)/d(slot a), an n x n matrix.
inline Matrix jacobian_x_deriv(const Jet3& j, std::size_t a) {
  Matrix m(j.n, j.n);
  for (std::size_t r = 0; r < j.n; ++r)
    for (std::size_t c = 0; c < j.n; ++c) m(r, c) = j.d2(r, c, a);
  return m;
}

/// d^2(D_x V)/d(slot a)d(slot b).
inline Matrix jacobian_x_deriv2(const Jet3& j, std::size_t a, std::size_t b) {
  Matrix m(j.n, j.n);
  for (std::size_t r = 0; r < j.n; ++r)
    for (std::size_t c = 0; c < j.n; ++c) m(r, c) = j.d3(r, c, a, b);
  return m;
}

/// Gradient of det(D_x V) over (x, eps) by Jacobi's formula,
/// d det = tr(adj(D_x V) d(D_x V)). Needs an order-2 jet.
inline Vec det_gradient(const Jet3& j) {
  if (j.order < 2) throw Error("det_gradient: order-2 jet required");
  const Matrix adj = adjugate(jacobian_x(j));
  Vec g(j.m());
  for (std::size_t a = 0; a < j.m(); ++a) g[a] = (adj * jacobian_x_deriv(j, a)).trace();
  return g;
}

/// Hessian of det(D_x V) over (x, eps): the derivative of Jacobi's formula,
/// tr(adj(J) J_ab) + tr(d adj(J)[J_b] J_a). Needs an order-3 jet.
inline Matrix det_hessian(const Jet3& j) {
  if (j.order < 3) throw Error("det_hessian: order-3 jet required");
  const Matrix jx = jacobian_x(j);
  const Matrix adj = adjugate(jx);
  const std::size_t m = j.m();
  std::vector<Matrix> ja(m), dadj(m);
  for (std::size_t a = 0; a < m; ++a) {
    ja[a] = jacobian_x_deriv(j, a);
    dadj[a] = adjugate_derivative(jx, ja[a]);
  }
  Matrix h(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      const double v =
          (adj * jacobian_x_deriv2(j, a, b)).trace() + (dadj[b] * ja[a]).trace();
      h(a, b) = v;
      h(b, a) = v;
    }
  return h;
}

/// det_gradient at a point, via exact jets or the finite-difference fallback.
inline Vec det_gradient(const FieldSpec& f, std::span<const double> x, double eps) {
  return det_gradient(local_jet(f, x, eps, 2).jet);
}

}  // namespace pitchfork
