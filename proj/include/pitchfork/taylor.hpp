#pragma once

// Truncated univariate Taylor arithmetic. A Series<K> holds normalized
// coefficients c[k] = f^(k)(0) / k! of t -> f(x + t d).

#include <array>
#include <cmath>
#include <cstddef>

#include "pitchfork/error.hpp"

namespace pitchfork {

template <std::size_t K>
struct Series {
  std::array<double, K + 1> c{};

  static Series constant(double v) {
    Series s;
    s.c[0] = v;
    return s;
  }

  static Series variable(double v, double slope) {
    Series s;
    s.c[0] = v;
    if constexpr (K >= 1) s.c[1] = slope;
    return s;
  }

  bool is_constant() const {
    for (std::size_t k = 1; k <= K; ++k)
      if (c[k] != 0.0) return false;
    return true;
  }
};

template <std::size_t K>
Series<K> operator+(const Series<K>& a, const Series<K>& b) {
  Series<K> r;
  for (std::size_t k = 0; k <= K; ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}

template <std::size_t K>
Series<K> operator-(const Series<K>& a, const Series<K>& b) {
  Series<K> r;
  for (std::size_t k = 0; k <= K; ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}

template <std::size_t K>
Series<K> operator-(const Series<K>& a) {
  Series<K> r;
  for (std::size_t k = 0; k <= K; ++k) r.c[k] = -a.c[k];
  return r;
}

template <std::size_t K>
Series<K> operator*(const Series<K>& a, const Series<K>& b) {
  Series<K> r;
  for (std::size_t k = 0; k <= K; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j <= k; ++j) s += a.c[j] * b.c[k - j];
    r.c[k] = s;
  }
  return r;
}

template <std::size_t K>
Series<K> operator/(const Series<K>& a, const Series<K>& b) {
  if (b.c[0] == 0.0) throw SingularPointError("division by zero");
  Series<K> r;
  for (std::size_t k = 0; k <= K; ++k) {
    double s = a.c[k];
    for (std::size_t j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}

template <std::size_t K>
Series<K> exp(const Series<K>& a) {
  Series<K> r;
  r.c[0] = std::exp(a.c[0]);
  for (std::size_t k = 1; k <= K; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j)
      s += static_cast<double>(j) * a.c[j] * r.c[k - j];
    r.c[k] = s / static_cast<double>(k);
  }
  return r;
}

/// sin and cos share one recurrence.
template <std::size_t K>
void sincos(const Series<K>& a, Series<K>& s, Series<K>& co) {
  s.c[0] = std::sin(a.c[0]);
  co.c[0] = std::cos(a.c[0]);
  for (std::size_t k = 1; k <= K; ++k) {
    double ss = 0.0;
    double cc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      const double w = static_cast<double>(j) * a.c[j];
      ss += w * co.c[k - j];
      cc -= w * s.c[k - j];
    }
    s.c[k] = ss / static_cast<double>(k);
    co.c[k] = cc / static_cast<double>(k);
  }
}

template <std::size_t K>
Series<K> sin(const Series<K>& a) {
  Series<K> s, co;
  sincos(a, s, co);
  return s;
}

template <std::size_t K>
Series<K> cos(const Series<K>& a) {
  Series<K> s, co;
  sincos(a, s, co);
  return co;
}

template <std::size_t K>
Series<K> sqrt(const Series<K>& a) {
  if (a.c[0] < 0.0) throw EvalError("sqrt of negative value");
  if (a.c[0] == 0.0) {
    if (a.is_constant()) return Series<K>{};
    throw SingularPointError("sqrt is not differentiable at 0");
  }
  Series<K> r;
  r.c[0] = std::sqrt(a.c[0]);
  for (std::size_t k = 1; k <= K; ++k) {
    double s = a.c[k];
    for (std::size_t j = 1; j < k; ++j) s -= r.c[j] * r.c[k - j];
    r.c[k] = s / (2.0 * r.c[0]);
  }
  return r;
}

template <std::size_t K>
Series<K> pow(const Series<K>& a, unsigned exponent) {
  Series<K> result = Series<K>::constant(1.0);
  Series<K> base = a;
  while (exponent > 0) {
    if (exponent & 1u) result = result * base;
    exponent >>= 1u;
    if (exponent > 0) base = base * base;
  }
  return result;
}

}  // namespace pitchfork
