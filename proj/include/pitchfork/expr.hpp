#pragma once

// Expression trees for vector-field components: parsing, printing and
// Taylor-mode evaluation.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pitchfork/error.hpp"
#include "pitchfork/taylor.hpp"

namespace pitchfork {

enum class Op : std::uint8_t {
  constant,
  variable,
  neg,
  sin,
  cos,
  exp,
  sqrt,
  add,
  sub,
  mul,
  div,
  pow,
};

/// One node of a flattened expression. Children always precede their parent,
/// so evaluating in storage order is a valid topological traversal.
struct Node {
  Op op = Op::constant;
  double value = 0.0;  // constant
  int slot = -1;       // variable slot, or the exponent of pow
  int lhs = -1;
  int rhs = -1;
};

/// Shortest decimal representation that round-trips; locale independent.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class Expr {
 public:
  Expr() = default;

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return static_cast<int>(nodes_.size()) - 1; }
  bool empty() const { return nodes_.empty(); }

  /// Evaluate with one input series per variable slot.
  template <std::size_t K>
  Series<K> evaluate(std::span<const Series<K>> inputs) const {
    // Per-thread scratch; evaluation never re-enters itself.
    thread_local std::vector<Series<K>> vals;
    vals.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& nd = nodes_[i];
      switch (nd.op) {
        case Op::constant: vals[i] = Series<K>::constant(nd.value); break;
        case Op::variable: vals[i] = inputs[static_cast<std::size_t>(nd.slot)]; break;
        case Op::neg: vals[i] = -vals[nd.lhs]; break;
        case Op::sin: vals[i] = pitchfork::sin(vals[nd.lhs]); break;
        case Op::cos: vals[i] = pitchfork::cos(vals[nd.lhs]); break;
        case Op::exp: vals[i] = pitchfork::exp(vals[nd.lhs]); break;
        case Op::sqrt: vals[i] = pitchfork::sqrt(vals[nd.lhs]); break;
        case Op::add: vals[i] = vals[nd.lhs] + vals[nd.rhs]; break;
        case Op::sub: vals[i] = vals[nd.lhs] - vals[nd.rhs]; break;
        case Op::mul: vals[i] = vals[nd.lhs] * vals[nd.rhs]; break;
        case Op::div: vals[i] = vals[nd.lhs] / vals[nd.rhs]; break;
        case Op::pow:
          vals[i] = pitchfork::pow(vals[nd.lhs], static_cast<unsigned>(nd.slot));
          break;
      }
      for (double c : vals[i].c)
        if (!std::isfinite(c)) throw EvalError("non-finite intermediate value");
    }
    return vals.back();
  }

  double evaluate(std::span<const double> inputs) const {
    std::vector<Series<0>> in(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) in[i].c[0] = inputs[i];
    return evaluate<0>(std::span<const Series<0>>(in)).c[0];
  }

  /// Scalar evaluation in extended precision, with the same error rules as
  /// `evaluate`. Used by finite-difference stencils.
  long double evaluate_extended(std::span<const long double> inputs) const {
    thread_local std::vector<long double> vals;
    vals.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& nd = nodes_[i];
      long double& v = vals[i];
      switch (nd.op) {
        case Op::constant: v = nd.value; break;
        case Op::variable: v = inputs[static_cast<std::size_t>(nd.slot)]; break;
        case Op::neg: v = -vals[nd.lhs]; break;
        case Op::sin: v = std::sin(vals[nd.lhs]); break;
        case Op::cos: v = std::cos(vals[nd.lhs]); break;
        case Op::exp: v = std::exp(vals[nd.lhs]); break;
        case Op::sqrt:
          if (vals[nd.lhs] < 0) throw EvalError("sqrt of negative value");
          v = std::sqrt(vals[nd.lhs]);
          break;
        case Op::add: v = vals[nd.lhs] + vals[nd.rhs]; break;
        case Op::sub: v = vals[nd.lhs] - vals[nd.rhs]; break;
        case Op::mul: v = vals[nd.lhs] * vals[nd.rhs]; break;
        case Op::div:
          if (vals[nd.rhs] == 0) throw SingularPointError("division by zero");
          v = vals[nd.lhs] / vals[nd.rhs];
          break;
        case Op::pow: {
          long double base = vals[nd.lhs], r = 1;
          for (unsigned e = static_cast<unsigned>(nd.slot); e; e >>= 1, base *= base)
            if (e & 1u) r *= base;
          v = r;
          break;
        }
      }
      if (!std::isfinite(v)) throw EvalError("non-finite intermediate value");
    }
    return vals.back();
  }

  /// Highest variable slot referenced, or -1.
  int max_slot() const {
    int m = -1;
    for (const Node& nd : nodes_)
      if (nd.op == Op::variable && nd.slot > m) m = nd.slot;
    return m;
  }

  /// Fully parenthesized text that parses back to an equivalent tree.
  std::string to_string(std::span<const std::string> slot_names) const {
    return empty() ? std::string("0") : print(root(), slot_names);
  }

 private:
  friend class ExprBuilder;

  std::string print(int i, std::span<const std::string> names) const {
    const Node& nd = nodes_[static_cast<std::size_t>(i)];
    switch (nd.op) {
      case Op::constant:
        return nd.value < 0 ? "(-" + format_double(-nd.value) + ")"
                            : format_double(nd.value);
      case Op::variable: return names[static_cast<std::size_t>(nd.slot)];
      case Op::neg: return "(-" + print(nd.lhs, names) + ")";
      case Op::sin: return "sin(" + print(nd.lhs, names) + ")";
      case Op::cos: return "cos(" + print(nd.lhs, names) + ")";
      case Op::exp: return "exp(" + print(nd.lhs, names) + ")";
      case Op::sqrt: return "sqrt(" + print(nd.lhs, names) + ")";
      case Op::add: return "(" + print(nd.lhs, names) + " + " + print(nd.rhs, names) + ")";
      case Op::sub: return "(" + print(nd.lhs, names) + " - " + print(nd.rhs, names) + ")";
      case Op::mul: return "(" + print(nd.lhs, names) + " * " + print(nd.rhs, names) + ")";
      case Op::div: return "(" + print(nd.lhs, names) + " / " + print(nd.rhs, names) + ")";
      case Op::pow:
        return "(" + print(nd.lhs, names) + ")^" + std::to_string(nd.slot);
    }
    return {};
  }

  std::vector<Node> nodes_;
};

/// Incremental construction of an Expr; `add` returns the node id.
class ExprBuilder {
 public:
  int constant(double v) { return add({Op::constant, v, -1, -1, -1}); }
  int variable(int slot) { return add({Op::variable, 0.0, slot, -1, -1}); }
  int unary(Op op, int a) { return add({op, 0.0, -1, a, -1}); }
  int binary(Op op, int a, int b) { return add({op, 0.0, -1, a, b}); }
  int power(int a, unsigned exponent) {
    return add({Op::pow, 0.0, static_cast<int>(exponent), a, -1});
  }

  /// Copy `src` into this builder with every variable slot s replaced by the
  /// node `slot_roots[s]`. Returns the id of the copied root.
  int inline_expr(const Expr& src, std::span<const int> slot_roots) {
    std::vector<int> map(src.nodes().size());
    for (std::size_t i = 0; i < src.nodes().size(); ++i) {
      Node nd = src.nodes()[i];
      if (nd.op == Op::variable) {
        map[i] = slot_roots[static_cast<std::size_t>(nd.slot)];
        continue;
      }
      if (nd.lhs >= 0) nd.lhs = map[static_cast<std::size_t>(nd.lhs)];
      if (nd.rhs >= 0) nd.rhs = map[static_cast<std::size_t>(nd.rhs)];
      map[i] = add(nd);
    }
    return map.back();
  }

  /// Finish with `root` as the last node (re-appended as a no-op copy if
  /// needed so the root invariant holds).
  Expr build(int root) && {
    Expr e;
    if (root != static_cast<int>(nodes_.size()) - 1) {
      // 0 + root keeps the last-node-is-root convention
      int zero = constant(0.0);
      binary(Op::add, zero, root);
    }
    e.nodes_ = std::move(nodes_);
    return e;
  }

 private:
  int add(const Node& nd) {
    nodes_.push_back(nd);
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

namespace detail {

class ExprParser {
 public:
  ExprParser(std::string_view text, std::span<const std::string> slot_names,
             std::size_t line)
      : text_(text), names_(slot_names), line_(line) {}

  Expr parse() {
    skip_ws();
    if (pos_ >= text_.size()) fail("empty expression");
    int root = parse_sum();
    skip_ws();
    if (pos_ < text_.size())
      fail(std::string("unexpected character '") + text_[pos_] + "'");
    return std::move(builder_).build(root);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, pos_ + 1);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int parse_sum() {
    int lhs = parse_product();
    while (true) {
      if (accept('+')) lhs = builder_.binary(Op::add, lhs, parse_product());
      else if (accept('-')) lhs = builder_.binary(Op::sub, lhs, parse_product());
      else return lhs;
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    while (true) {
      if (accept('*')) lhs = builder_.binary(Op::mul, lhs, parse_unary());
      else if (accept('/')) lhs = builder_.binary(Op::div, lhs, parse_unary());
      else return lhs;
    }
  }

  int parse_unary() {
    if (accept('-')) return builder_.unary(Op::neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    while (accept('^')) base = builder_.power(base, parse_exponent());
    return base;
  }

  // Exponents are non-negative integer literals, optionally parenthesized.
  unsigned parse_exponent() {
    skip_ws();
    const std::size_t start = pos_;
    int depth = 0;
    while (accept('(')) ++depth;
    skip_ws();
    double v = 0.0;
    if (!read_number(v)) {
      pos_ = start;
      fail("non-integer exponent");
    }
    for (int i = 0; i < depth; ++i)
      if (!accept(')')) {
        pos_ = start;
        fail("non-integer exponent");
      }
    if (v < 0 || v != std::floor(v) || v > 64) {
      pos_ = start;
      fail("non-integer exponent");
    }
    return static_cast<unsigned>(v);
  }

  bool read_number(double& out) {
    skip_ws();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.')) return false;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(res.ptr - first);
    return true;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    double v = 0.0;
    if (read_number(v)) return builder_.constant(v);
    if (accept('(')) {
      int inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    const char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string ident(text_.substr(start, pos_ - start));
      for (std::size_t s = 0; s < names_.size(); ++s)
        if (names_[s] == ident) return builder_.variable(static_cast<int>(s));
      Op fn;
      if (ident == "sin") fn = Op::sin;
      else if (ident == "cos") fn = Op::cos;
      else if (ident == "exp") fn = Op::exp;
      else if (ident == "sqrt") fn = Op::sqrt;
      else {
        pos_ = start;
        fail("unknown identifier '" + ident + "'");
      }
      if (!accept('(')) fail("expected '(' after " + ident);
      int arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return builder_.unary(fn, arg);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::span<const std::string> names_;
  std::size_t line_;
  std::size_t pos_ = 0;
  ExprBuilder builder_;
};

}  // namespace detail

inline bool is_function_name(std::string_view s) {
  return s == "sin" || s == "cos" || s == "exp" || s == "sqrt";
}

/// Parse `text` with identifiers resolved against `slot_names` (slot i ->
/// variable i). `line` is only used for error messages.
inline Expr parse_expression(std::string_view text, std::span<const std::string> slot_names,
                             std::size_t line = 0) {
  return detail::ExprParser(text, slot_names, line).parse();
}

}  // namespace pitchfork
