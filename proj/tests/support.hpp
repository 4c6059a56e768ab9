#pragma once

// Shared generators and independent oracles for the test suites.

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pitchfork/pitchfork.hpp"

namespace testing_support {

using pitchfork::Matrix;
using pitchfork::Vec;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bool coin() { return integer(0, 1) == 1; }
  std::mt19937_64& engine() { return gen_; }

  Vec vec(std::size_t n, double lo, double hi) {
    Vec v(n);
    for (double& x : v) x = uniform(lo, hi);
    return v;
  }

  Matrix matrix(std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

  /// Random matrix with singular values in [lo, hi], built as Q1 D Q2.
  Matrix well_conditioned(std::size_t n, double lo = 0.5, double hi = 2.0) {
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) d(i, i) = uniform(lo, hi) * (coin() ? 1 : -1);
    return orthogonal(n) * d * orthogonal(n);
  }

  Matrix orthogonal(std::size_t n) {
    // Gram-Schmidt on a random Gaussian matrix.
    std::normal_distribution<double> nd;
    Matrix q(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      Vec v(n);
      for (double& x : v) x = nd(gen_);
      for (std::size_t k = 0; k < j; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i] * q(i, k);
        for (std::size_t i = 0; i < n; ++i) v[i] -= s * q(i, k);
      }
      const double nv = pitchfork::norm2(v);
      for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / nv;
    }
    return q;
  }

 private:
  std::mt19937_64 gen_;
};

/// Plain-text decimal with enough digits for exact round trip.
inline std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// Random polynomial in the given names: `terms` monomials of total degree
/// <= max_degree with coefficients in [-2, 2].
inline std::string random_polynomial(Rng& rng, const std::vector<std::string>& names,
                                     int max_degree, int terms) {
  std::string out;
  for (int t = 0; t < terms; ++t) {
    const double c = rng.uniform(-2.0, 2.0);
    std::string mono = "(" + num(c) + ")";
    int deg = rng.integer(0, max_degree);
    while (deg > 0) {
      const auto& v = names[static_cast<std::size_t>(rng.integer(0, static_cast<int>(names.size()) - 1))];
      const int p = rng.integer(1, deg);
      mono += "*" + v + (p > 1 ? "^" + std::to_string(p) : "");
      deg -= p;
    }
    out += (t ? " + " : "") + mono;
  }
  return out;
}

/// Field already in block form at the origin with eps0 = 0:
///   u' = a eps u + c u^3 + u (d . y),
///   y' = M y + q u^2 + b eps,
/// with M upper triangular and |diag M| in [0.5, 2].
struct BlockField {
  pitchfork::FieldSpec field;
  Matrix M;
  double a = 0.0, c = 0.0;
  Vec d, q, b;
};

inline BlockField random_block_field(Rng& rng, std::size_t n, bool eps_in_y = true) {
  BlockField bf;
  const std::size_t ny = n - 1;
  bf.M = Matrix(ny, ny);
  for (std::size_t i = 0; i < ny; ++i) {
    bf.M(i, i) = rng.uniform(0.5, 2.0) * (rng.coin() ? 1 : -1);
    for (std::size_t j = i + 1; j < ny; ++j) bf.M(i, j) = rng.uniform(-1, 1);
  }
  bf.a = rng.uniform(0.5, 2.0) * (rng.coin() ? 1 : -1);
  bf.c = rng.uniform(0.5, 2.0) * (rng.coin() ? 1 : -1);
  bf.d = rng.vec(ny, -1, 1);
  bf.q = rng.vec(ny, -1, 1);
  bf.b = eps_in_y ? rng.vec(ny, -1, 1) : Vec(ny, 0.0);
  std::vector<std::string> names{"u"};
  for (std::size_t k = 0; k < ny; ++k) names.push_back("y" + std::to_string(k + 1));
  std::vector<std::string> eqs;
  std::string e0 = "(" + num(bf.a) + ")*eps*u + (" + num(bf.c) + ")*u^3";
  for (std::size_t k = 0; k < ny; ++k) e0 += " + (" + num(bf.d[k]) + ")*u*" + names[k + 1];
  eqs.push_back(e0);
  for (std::size_t i = 0; i < ny; ++i) {
    std::string e = "(" + num(bf.q[i]) + ")*u^2 + (" + num(bf.b[i]) + ")*eps";
    for (std::size_t j = 0; j < ny; ++j)
      if (bf.M(i, j) != 0.0) e += " + (" + num(bf.M(i, j)) + ")*" + names[j + 1];
    eqs.push_back(e);
  }
  bf.field = pitchfork::make_field(names, "eps", eqs);
  return bf;
}

/// Random cubic field in (x, y) vanishing at the origin.
inline pitchfork::FieldSpec random_origin_field(Rng& rng) {
  const char* monos[] = {"x", "y", "x^2", "x*y", "y^2", "x^3", "x^2*y", "x*y^2", "y^3"};
  std::vector<std::string> eqs;
  for (int i = 0; i < 2; ++i) {
    std::string e;
    for (const char* m : monos) {
      if (rng.uniform(0, 1) < 0.3) continue;  // sparse, so degenerate linear parts occur
      e += (e.empty() ? "" : " + ") + std::string("(") + num(rng.uniform(-2, 2)) + ")*" + m;
    }
    eqs.push_back(e.empty() ? "x^2" : e);
  }
  return pitchfork::make_field({"x", "y"}, "eps", eqs);
}

/// Determinant by cofactor expansion along the first row.
inline double laplace_det(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 1) return m(0, 0);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double c = m(0, j) * laplace_det(m.minor(0, j));
    s += (j % 2 == 0) ? c : -c;
  }
  return s;
}

inline std::string problem_path(const std::string& name) {
  return std::string(PITCHFORK_PROBLEMS_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline pitchfork::Problem load_problem(const std::string& name) {
  return pitchfork::parse_problem(slurp(problem_path(name)));
}

}  // namespace testing_support
