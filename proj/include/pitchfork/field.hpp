#pragma once

// Parametrized vector fields V(x, eps) read from problem files, with
// derivative jets up to third order in (x, eps).

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pitchfork/error.hpp"
#include "pitchfork/expr.hpp"
#include "pitchfork/taylor.hpp"

namespace pitchfork {

using Vec = std::vector<double>;

/// Largest supported state dimension.
inline constexpr std::size_t kMaxDim = 12;

/// V: R^n x R -> R^n. Immutable after construction.
struct FieldSpec {
  std::size_t dim = 0;
  std::string param_name;
  std::vector<std::string> var_names;
  std::vector<Expr> exprs;
  std::string source;

  /// Names indexed by slot: the state variables followed by the parameter.
  std::vector<std::string> slot_names() const {
    std::vector<std::string> s = var_names;
    s.push_back(param_name);
    return s;
  }
};

/// A field together with the point under study.
struct Problem {
  FieldSpec field;
  Vec point;
  double eps0 = 0.0;
  double radius = 0.5;
};

namespace detail {

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_real(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    throw ParseError("expected a real number, got '" + std::string(tok) + "'", line, 0);
  return v;
}

inline void check_names(const std::vector<std::string>& vars, const std::string& param,
                        std::size_t line) {
  std::vector<std::string> all = vars;
  all.push_back(param);
  for (const auto& v : all) {
    if (!is_identifier(v)) throw ParseError("invalid identifier '" + v + "'", line, 0);
    if (is_function_name(v))
      throw ParseError("'" + v + "' is a function name, not a variable", line, 0);
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end())
    throw ParseError("duplicate identifier", line, 0);
}

struct RawProblem {
  FieldSpec field;
  std::optional<Vec> point;
  std::optional<double> eps0;
  std::optional<double> radius;
};

inline RawProblem parse_raw(std::string_view text) {
  std::optional<std::size_t> dim;
  std::optional<std::string> param;
  std::optional<std::vector<std::string>> vars;
  std::size_t vars_line = 0;
  std::map<std::size_t, std::pair<std::string, std::size_t>> eqs;  // index -> (text, line)
  RawProblem out;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no, 0);
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto keys = split_ws(key);
    if (keys.empty()) throw ParseError("missing key", line_no, 0);

    if (keys[0] == "eq") {
      if (keys.size() != 2) throw ParseError("expected 'eq <i> = <expression>'", line_no, 0);
      std::size_t idx = 0;
      auto res = std::from_chars(keys[1].data(), keys[1].data() + keys[1].size(), idx);
      if (res.ec != std::errc() || res.ptr != keys[1].data() + keys[1].size() || idx == 0)
        throw ParseError("equation index must be a positive integer", line_no, 0);
      if (eqs.count(idx)) throw ParseError("duplicate equation " + keys[1], line_no, 0);
      eqs[idx] = {std::string(value), line_no};
      continue;
    }
    if (keys.size() != 1) throw ParseError("unknown key '" + std::string(key) + "'", line_no, 0);
    const std::string& k = keys[0];
    const auto toks = split_ws(value);
    if (k == "dim") {
      if (toks.size() != 1) throw ParseError("dim takes one integer", line_no, 0);
      std::size_t d = 0;
      auto res = std::from_chars(toks[0].data(), toks[0].data() + toks[0].size(), d);
      if (res.ec != std::errc() || res.ptr != toks[0].data() + toks[0].size() || d == 0)
        throw ParseError("dim must be a positive integer", line_no, 0);
      if (d > kMaxDim)
        throw ParseError("dim must not exceed " + std::to_string(kMaxDim), line_no, 0);
      dim = d;
    } else if (k == "param") {
      if (toks.size() != 1) throw ParseError("param takes one identifier", line_no, 0);
      param = toks[0];
    } else if (k == "vars") {
      vars = toks;
      vars_line = line_no;
    } else if (k == "point") {
      Vec p;
      for (const auto& t : toks) p.push_back(parse_real(t, line_no));
      out.point = std::move(p);
    } else if (k == "eps0") {
      if (toks.size() != 1) throw ParseError("eps0 takes one real", line_no, 0);
      out.eps0 = parse_real(toks[0], line_no);
    } else if (k == "radius") {
      if (toks.size() != 1) throw ParseError("radius takes one real", line_no, 0);
      out.radius = parse_real(toks[0], line_no);
      if (!(*out.radius > 0)) throw ParseError("radius must be positive", line_no, 0);
    } else {
      throw ParseError("unknown key '" + k + "'", line_no, 0);
    }
  }

  if (!dim) throw ParseError("missing 'dim'", 0, 0);
  if (!param) throw ParseError("missing 'param'", 0, 0);
  if (!vars) throw ParseError("missing 'vars'", 0, 0);
  if (vars->size() != *dim)
    throw ParseError("dimension mismatch: dim = " + std::to_string(*dim) + " but " +
                         std::to_string(vars->size()) + " variables declared",
                     vars_line, 0);
  check_names(*vars, *param, vars_line);
  if (eqs.size() != *dim || (!eqs.empty() && eqs.rbegin()->first != *dim))
    throw ParseError("dimension mismatch: dim = " + std::to_string(*dim) + " but " +
                         std::to_string(eqs.size()) + " equations given",
                     0, 0);

  FieldSpec& f = out.field;
  f.dim = *dim;
  f.param_name = *param;
  f.var_names = *vars;
  f.source = std::string(text);
  const auto names = f.slot_names();
  for (const auto& [idx, entry] : eqs)
    f.exprs.push_back(parse_expression(entry.first, names, entry.second));
  if (out.point && out.point->size() != f.dim)
    throw ParseError("dimension mismatch: point has " + std::to_string(out.point->size()) +
                         " coordinates, expected " + std::to_string(f.dim),
                     0, 0);
  return out;
}

}  // namespace detail

/// Parse the field part of a problem file; point, eps0 and radius are
/// accepted but not required.
inline FieldSpec parse_field(std::string_view text) { return detail::parse_raw(text).field; }

/// Parse a complete problem file. `point` and `eps0` are required.
inline Problem parse_problem(std::string_view text) {
  auto raw = detail::parse_raw(text);
  if (!raw.point) throw ParseError("missing 'point'", 0, 0);
  if (!raw.eps0) throw ParseError("missing 'eps0'", 0, 0);
  Problem p;
  p.field = std::move(raw.field);
  p.point = *raw.point;
  p.eps0 = *raw.eps0;
  if (raw.radius) p.radius = *raw.radius;
  return p;
}

/// Build a field directly from equation strings.
inline FieldSpec make_field(std::vector<std::string> var_names, std::string param_name,
                            const std::vector<std::string>& equations) {
  if (var_names.empty()) throw ParseError("at least one variable required", 0, 0);
  if (var_names.size() > kMaxDim)
    throw ParseError("at most " + std::to_string(kMaxDim) + " variables supported", 0, 0);
  if (equations.size() != var_names.size())
    throw ParseError("dimension mismatch: " + std::to_string(var_names.size()) +
                         " variables but " + std::to_string(equations.size()) + " equations",
                     0, 0);
  detail::check_names(var_names, param_name, 0);
  FieldSpec f;
  f.dim = var_names.size();
  f.param_name = std::move(param_name);
  f.var_names = std::move(var_names);
  const auto names = f.slot_names();
  std::ostringstream src;
  src << "dim = " << f.dim << "\nparam = " << f.param_name << "\nvars =";
  for (const auto& v : f.var_names) src << ' ' << v;
  src << '\n';
  for (std::size_t i = 0; i < equations.size(); ++i) {
    f.exprs.push_back(parse_expression(equations[i], names, i + 1));
    src << "eq " << i + 1 << " = " << equations[i] << '\n';
  }
  f.source = src.str();
  return f;
}

/// Problem-file text for `f` (fully parenthesized expressions).
inline std::string unparse_field(const FieldSpec& f) {
  std::ostringstream out;
  out << "dim = " << f.dim << "\nparam = " << f.param_name << "\nvars =";
  for (const auto& v : f.var_names) out << ' ' << v;
  out << '\n';
  const auto names = f.slot_names();
  for (std::size_t i = 0; i < f.dim; ++i)
    out << "eq " << i + 1 << " = " << f.exprs[i].to_string(names) << '\n';
  return out.str();
}

inline Vec eval(const FieldSpec& f, std::span<const double> x, double eps) {
  if (x.size() != f.dim) throw Error("eval: point has wrong dimension");
  Vec in(x.begin(), x.end());
  in.push_back(eps);
  Vec out(f.dim);
  for (std::size_t i = 0; i < f.dim; ++i) out[i] = f.exprs[i].evaluate(std::span<const double>(in));
  return out;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

inline double norm_inf(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s = std::max(s, std::abs(a));
  return s;
}

namespace detail {

using ExtVec = std::vector<long double>;

inline ExtVec eval_extended(const FieldSpec& f, std::span<const long double> x, long double eps) {
  ExtVec in(x.begin(), x.end());
  in.push_back(eps);
  ExtVec out(f.dim);
  for (std::size_t i = 0; i < f.dim; ++i)
    out[i] = f.exprs[i].evaluate_extended(std::span<const long double>(in));
  return out;
}

template <class T, class Eval>
std::vector<T> regularized(const FieldSpec& f, std::span<const T> x, T eps, Eval eval_at) {
  try {
    return eval_at(x, eps);
  } catch (const SingularPointError&) {
  }
  for (std::size_t axis = 0; axis < f.dim; ++axis) {
    const T delta = T(1e-8) * (1 + std::abs(x[axis]));
    auto average = [&](T d) {
      std::vector<T> xp(x.begin(), x.end()), xm(x.begin(), x.end());
      xp[axis] += d;
      xm[axis] -= d;
      std::vector<T> a = eval_at(std::span<const T>(xp), eps);
      const std::vector<T> b = eval_at(std::span<const T>(xm), eps);
      for (std::size_t i = 0; i < f.dim; ++i) a[i] = (a[i] + b[i]) / 2;
      return a;
    };
    try {
      const std::vector<T> coarse = average(delta);
      std::vector<T> fine = average(delta / 2);
      for (std::size_t i = 0; i < f.dim; ++i) fine[i] = (4 * fine[i] - coarse[i]) / 3;
      return fine;
    } catch (const SingularPointError&) {
    }
  }
  throw SingularPointError("field is singular at the point and its neighbours");
}

/// `eval_regularized` in extended precision.
inline ExtVec eval_regularized_extended(const FieldSpec& f, std::span<const long double> x,
                                        long double eps) {
  return regularized<long double>(f, x, eps, [&f](std::span<const long double> p, long double e) {
    return eval_extended(f, p, e);
  });
}

}  // namespace detail

/// Evaluate V, replacing the value at a removable singular point by the
/// extrapolated average of neighbours x +- delta e_i along the first axis where
/// they are defined; averages at delta and delta / 2 cancel the delta^2 term.
inline Vec eval_regularized(const FieldSpec& f, std::span<const double> x, double eps) {
  return detail::regularized<double>(f, x, eps, [&f](std::span<const double> p, double e) {
    return eval(f, p, e);
  });
}

/// Value and derivative tensors of V at (x, eps). Slot n of the last
/// indices is the parameter; tensors are stored flat and fully symmetric.
struct Jet3 {
  std::size_t n = 0;
  int order = 0;
  Vec value;
  Vec d1v;  // n x m
  Vec d2v;  // n x m x m
  Vec d3v;  // n x m x m x m

  std::size_t m() const { return n + 1; }

  double d1(std::size_t i, std::size_t j) const { return d1v[i * m() + j]; }
  double d2(std::size_t i, std::size_t j, std::size_t k) const {
    return d2v[(i * m() + j) * m() + k];
  }
  double d3(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return d3v[((i * m() + j) * m() + k) * m() + l];
  }
  double& d1(std::size_t i, std::size_t j) { return d1v[i * m() + j]; }
  double& d2(std::size_t i, std::size_t j, std::size_t k) { return d2v[(i * m() + j) * m() + k]; }
  double& d3(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return d3v[((i * m() + j) * m() + k) * m() + l];
  }

  static Jet3 zeros(std::size_t n, int order) {
    Jet3 j;
    j.n = n;
    j.order = order;
    const std::size_t m = n + 1;
    j.value.assign(n, 0.0);
    j.d1v.assign(n * m, 0.0);
    if (order >= 2) j.d2v.assign(n * m * m, 0.0);
    if (order >= 3) j.d3v.assign(n * m * m * m, 0.0);
    return j;
  }
};

namespace detail {

// Integer combination of canonical directions, e.g. {1,0,1} = e0 + e2.
using DirKey = std::vector<int>;

/// Supplies the normalized Taylor coefficients c_k(d) (k = 1..3) of
/// t -> V(p + t d) for integer direction combinations d.
template <class Source>
Jet3 assemble_jet(std::size_t n, int order, Vec value, Source&& coeffs) {
  Jet3 jet = Jet3::zeros(n, order);
  jet.value = std::move(value);
  const std::size_t m = n + 1;
  std::map<DirKey, std::array<Vec, 3>> cache;
  auto c = [&](const DirKey& d, int k) -> const Vec& {
    auto it = cache.find(d);
    if (it == cache.end()) it = cache.emplace(d, coeffs(d)).first;
    return it->second[static_cast<std::size_t>(k - 1)];
  };
  auto unit = [&](std::initializer_list<std::size_t> idx) {
    DirKey d(m, 0);
    for (std::size_t i : idx) d[i] += 1;
    return d;
  };

  for (std::size_t j = 0; j < m; ++j) {
    const Vec& c1 = c(unit({j}), 1);
    for (std::size_t i = 0; i < n; ++i) jet.d1(i, j) = c1[i];
  }
  if (order >= 2) {
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = j; k < m; ++k) {
        // D2[a,b] = c2(a+b) - c2(a) - c2(b)
        const Vec& ab = c(unit({j, k}), 2);
        const Vec& a = c(unit({j}), 2);
        const Vec& b = c(unit({k}), 2);
        for (std::size_t i = 0; i < n; ++i) {
          const double v = ab[i] - a[i] - b[i];
          jet.d2(i, j, k) = v;
          jet.d2(i, k, j) = v;
        }
      }
  }
  if (order >= 3) {
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = j; k < m; ++k)
        for (std::size_t l = k; l < m; ++l) {
          // T(a,b,c) = c3(a+b+c) - c3(a+b) - c3(a+c) - c3(b+c) + c3(a) + c3(b) + c3(c)
          const Vec& abc = c(unit({j, k, l}), 3);
          const Vec& ab = c(unit({j, k}), 3);
          const Vec& ac = c(unit({j, l}), 3);
          const Vec& bc = c(unit({k, l}), 3);
          const Vec& a = c(unit({j}), 3);
          const Vec& b = c(unit({k}), 3);
          const Vec& cc = c(unit({l}), 3);
          for (std::size_t i = 0; i < n; ++i) {
            const double v = abc[i] - ab[i] - ac[i] - bc[i] + a[i] + b[i] + cc[i];
            const std::array<std::size_t, 3> p{j, k, l};
            jet.d3(i, p[0], p[1], p[2]) = v;
            jet.d3(i, p[0], p[2], p[1]) = v;
            jet.d3(i, p[1], p[0], p[2]) = v;
            jet.d3(i, p[1], p[2], p[0]) = v;
            jet.d3(i, p[2], p[0], p[1]) = v;
            jet.d3(i, p[2], p[1], p[0]) = v;
          }
        }
  }
  return jet;
}

template <std::size_t K>
std::array<Vec, 3> taylor_along(const FieldSpec& f, std::span<const double> base,
                                const DirKey& d) {
  std::vector<Series<K>> in(base.size());
  for (std::size_t s = 0; s < base.size(); ++s)
    in[s] = Series<K>::variable(base[s], static_cast<double>(d[s]));
  std::array<Vec, 3> out;
  for (auto& v : out) v.assign(f.dim, 0.0);
  for (std::size_t i = 0; i < f.dim; ++i) {
    const Series<K> r = f.exprs[i].template evaluate<K>(std::span<const Series<K>>(in));
    for (std::size_t k = 1; k <= K && k <= 3; ++k) out[k - 1][i] = r.c[k];
  }
  return out;
}

inline Vec base_point(std::span<const double> x, double eps) {
  Vec b(x.begin(), x.end());
  b.push_back(eps);
  return b;
}

}  // namespace detail

/// Exact derivatives by Taylor-mode propagation along canonical directions
/// and their sums. Throws "singular jet point" if any subexpression is not
/// differentiable at the point.
inline Jet3 jet(const FieldSpec& f, std::span<const double> x, double eps, int order) {
  if (order < 1 || order > 3) throw Error("jet: order must be 1, 2 or 3");
  if (x.size() != f.dim) throw Error("jet: point has wrong dimension");
  const Vec base = detail::base_point(x, eps);
  try {
    Vec value = eval(f, x, eps);
    auto src = [&](const detail::DirKey& d) {
      switch (order) {
        case 1: return detail::taylor_along<1>(f, base, d);
        case 2: return detail::taylor_along<2>(f, base, d);
        default: return detail::taylor_along<3>(f, base, d);
      }
    };
    return detail::assemble_jet(f.dim, order, std::move(value), src);
  } catch (const SingularPointError& e) {
    throw SingularPointError(std::string("singular jet point: ") + e.what());
  }
}

/// Central finite-difference jet with step h, O(h^2) accurate, using the
/// same polarization as `jet`. Stencils are evaluated in extended precision;
/// points where the field is singular are replaced by their regularized values.
inline Jet3 jet_fd(const FieldSpec& f, std::span<const double> x, double eps, int order,
                   double h0) {
  if (!(h0 > 0) || !std::isfinite(h0)) throw Error("jet_fd: step must be positive");
  if (order < 1 || order > 3) throw Error("jet_fd: order must be 1, 2 or 3");
  if (x.size() != f.dim) throw Error("jet_fd: point has wrong dimension");
  using Ext = long double;
  const detail::ExtVec base(x.begin(), x.end());
  const detail::ExtVec center = detail::eval_regularized_extended(f, base, eps);
  auto at = [&](const detail::DirKey& d, Ext t) {
    detail::ExtVec p(f.dim);
    for (std::size_t s = 0; s < f.dim; ++s) p[s] = base[s] + t * d[s];
    const Ext e = eps + t * d[f.dim];
    try {
      return detail::eval_regularized_extended(f, p, e);
    } catch (const EvalError& err) {
      throw EvalError(std::string("jet_fd: stencil evaluation failed: ") + err.what());
    }
  };
  auto src = [&](const detail::DirKey& d) {
    std::array<Vec, 3> out;
    for (auto& v : out) v.assign(f.dim, 0.0);
    // Repeated directions such as 3 e_j keep their stencil within 2 h.
    const Ext h = h0 / *std::max_element(d.begin(), d.end());
    const detail::ExtVec p1 = at(d, h), m1 = at(d, -h);
    detail::ExtVec p2, m2;
    if (order >= 3) {
      p2 = at(d, 2 * h);
      m2 = at(d, -2 * h);
    }
    for (std::size_t i = 0; i < f.dim; ++i) {
      out[0][i] = static_cast<double>((p1[i] - m1[i]) / (2 * h));
      if (order >= 2) out[1][i] = static_cast<double>((p1[i] - 2 * center[i] + m1[i]) / (2 * h * h));
      if (order >= 3)
        out[2][i] = static_cast<double>((p2[i] - 2 * p1[i] + 2 * m1[i] - m2[i]) / (12 * h * h * h));
    }
    return out;
  };
  Vec value(center.begin(), center.end());
  return detail::assemble_jet(f.dim, order, std::move(value), src);
}

/// A jet obtained exactly when possible, otherwise by Richardson-extrapolated
/// finite differences. `valid_order` is the highest order whose FD estimate
/// was self-consistent between h and h/2 (equal to `order` for exact jets).
struct LocalJet {
  Jet3 jet;
  bool exact = true;
  int valid_order = 0;
  std::string note;
};

inline LocalJet local_jet(const FieldSpec& f, std::span<const double> x, double eps, int order,
                          double h = 1e-5) {
  LocalJet out;
  try {
    out.jet = jet(f, x, eps, order);
    out.valid_order = order;
    return out;
  } catch (const SingularPointError& e) {
    out.note = std::string(e.what()) + "; using finite differences";
  }
  out.exact = false;
  const Jet3 coarse = jet_fd(f, x, eps, order, h);
  const Jet3 fine = jet_fd(f, x, eps, order, h / 2);
  Jet3 r = fine;
  auto extrapolate = [](Vec& dst, const Vec& c, const Vec& fi) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (4 * fi[i] - c[i]) / 3;
  };
  auto consistent = [](const Vec& c, const Vec& fi) {
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      scale = std::max(scale, std::abs(fi[i]));
      diff = std::max(diff, std::abs(fi[i] - c[i]));
    }
    return diff <= 1e-3 * (1.0 + scale);
  };
  extrapolate(r.d1v, coarse.d1v, fine.d1v);
  out.valid_order = consistent(coarse.d1v, fine.d1v) ? 1 : 0;
  if (order >= 2) {
    extrapolate(r.d2v, coarse.d2v, fine.d2v);
    if (out.valid_order == 1 && consistent(coarse.d2v, fine.d2v)) out.valid_order = 2;
  }
  if (order >= 3) {
    extrapolate(r.d3v, coarse.d3v, fine.d3v);
    if (out.valid_order == 2 && consistent(coarse.d3v, fine.d3v)) out.valid_order = 3;
  }
  out.jet = std::move(r);
  return out;
}

}  // namespace pitchfork
