#pragma once

// Plain-text condition reports and CSV tables for sweeps and bifurcation
// diagrams.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pitchfork/criteria.hpp"
#include "pitchfork/equilibria.hpp"
#include "pitchfork/field.hpp"
#include "pitchfork/index.hpp"

namespace pitchfork {

/// Ten significant digits; integral values keep a trailing ".0".
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

inline std::string fmt_vec(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_num(v[i]);
  return s + ")";
}

inline std::string fmt_complex(std::complex<double> z) {
  if (z.imag() == 0.0) return fmt_num(z.real());
  return fmt_num(z.real()) + (z.imag() < 0 ? " - " : " + ") + fmt_num(std::abs(z.imag())) + "i";
}

/// |value| / tol, the factor by which a threshold decision is safe.
inline double margin(double value, double tol) { return tol > 0 ? std::abs(value) / tol : 0.0; }

inline const char* pass_fail(bool b) { return b ? "PASS" : "FAIL"; }

namespace detail {

class ReportWriter {
 public:
  void line(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
  void blank() { rows_.emplace_back("", ""); }
  /// "name = value" detail line, not aligned.
  void detail(const std::string& name, const std::string& value) { rows_.emplace_back("\x01" + name, value); }

  std::string str() const {
    std::size_t w = 0;
    for (const auto& [k, v] : rows_)
      if (k.empty() || k[0] != '\x01') w = std::max(w, k.size());
    std::ostringstream out;
    for (const auto& [k, v] : rows_) {
      if (k.empty()) {
        out << '\n';
        continue;
      }
      if (k[0] == '\x01') {
        out << k.substr(1) << " = " << v << '\n';
        continue;
      }
      out << k << ':' << std::string(w - k.size() + 1, ' ') << v << '\n';
    }
    return out.str();
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

}  // namespace detail

/// Report of an analysis: aligned "key: value" lines with "P#: name = value" details.
inline std::string format_report(const FieldSpec& f, std::span<const double> x0, double eps0,
                                 const AnalysisOptions& opt, const Analysis& a) {
  detail::ReportWriter w;
  const ConditionReport& r = a.report;
  const Classification& c = a.classification;
  const Tolerances& t = r.tol;
  w.line("dimension", std::to_string(f.dim));
  w.line("point", fmt_vec(x0));
  w.line(f.param_name + "0", fmt_num(eps0));
  w.line("radius", fmt_num(opt.radius));
  w.blank();

  w.line("P0", pass_fail(r.p0.pass));
  w.detail("P0: residual", fmt_num(r.p0.residual) + " (tol " + fmt_num(t.tol_res) + ")");
  if (r.p0.spectrum) {
    std::string ev;
    for (const auto& z : r.p0.spectrum->eigenvalues) ev += (ev.empty() ? "" : ", ") + fmt_complex(z);
    w.detail("P0: eigenvalues", ev);
  }
  w.detail("P0: simple non-hyperbolic", r.p0.simple_nonhyp ? "yes" : "no");
  w.detail("P0: isolated", std::string(r.p0.isolated ? "yes" : "no") + " (resolution " +
                             fmt_num(r.p0.isolation_radius) + ", " + std::to_string(r.p0.absorbed) + " merged)");
  w.detail("P0: index", r.p0.index ? std::to_string(*r.p0.index) : std::string("unavailable"));
  w.detail("P0: index radius", fmt_num(r.p0.index_radius));
  for (const auto* ir : {&r.p0.primary, &r.p0.winding, &r.p0.boundary, &r.p0.perturbation})
    if (*ir)
      w.detail(std::string("P0: ") + to_string((*ir)->method), std::to_string((*ir)->value) + " [" +
                                                                   (*ir)->certificate + "]");

  w.line("P1", pass_fail(r.p1.pass));
  w.detail("P1: v_l", fmt_vec(r.p1.v_l));
  w.detail("P1: v_l . dV/d" + f.param_name, fmt_num(r.p1.vl_dVeps) + " (|value| <= " + fmt_num(t.tol_p1) + ")");

  w.line("P2", pass_fail(r.p2.pass));
  if (r.p2.applicable) {
    w.detail("P2: omega", fmt_vec(r.p2.omega));
    w.detail("P2: directional derivative", fmt_num(r.p2.directional_deriv) + " (|value| > " +
                                               fmt_num(t.tol_p2) + ", margin " +
                                               fmt_num(margin(r.p2.directional_deriv, t.tol_p2)) + ")");
    std::string kv;
    for (double v : r.p2.kernel_values) kv += (kv.empty() ? "" : ", ") + fmt_num(v);
    w.detail("P2: kernel values", kv);
  }
  if (!r.p2.note.empty()) w.line("P2: note", r.p2.note);

  w.line("P3", r.p3.available ? pass_fail(r.p3.pass) : "UNAVAILABLE");
  if (r.p3.available) {
    w.detail("P3: value", fmt_num(r.p3.value) + " = " + fmt_num(r.p3.d_uu_det) + " + (" +
                            fmt_num(r.p3.dy_det_term) + ")");
    w.detail("P3: via manifold", fmt_num(r.p3.via_manifold));
    w.detail("P3: threshold", "|value| > " + fmt_num(t.tol_p3) + ", margin " + fmt_num(margin(r.p3.value, t.tol_p3)));
  }
  if (!r.p3.note.empty()) w.line("P3: note", r.p3.note);
  w.blank();

  w.line("delta " + f.param_name, fmt_num(c.delta_eps));
  w.line("counts", std::to_string(c.counts.first) + " -> " + std::to_string(c.counts.second));
  if (c.F_ue) w.line("reduced F_ue", fmt_num(*c.F_ue));
  if (!c.theory_basis.empty()) w.line("basis", c.theory_basis);
  for (const auto& n : c.notes) w.line("note", n);
  w.line("verdict", to_string(c));
  return w.str();
}

/// Run body(i) for i in [0, count) on up to `jobs` threads.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::vector<double> eps_grid(double lo, double hi, int steps) {
  if (lo == hi) return {lo};
  if (steps < 2) throw Error("at least 2 steps required");
  if (!(lo < hi)) throw Error("eps-lo must not exceed eps-hi");
  std::vector<double> g(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) g[static_cast<std::size_t>(k)] = (lo * (steps - 1 - k) + hi * k) / (steps - 1);
  return g;
}

struct SweepRow {
  double eps = 0.0;
  int zero_count = 0;
  std::optional<int> sum_of_indices;
  std::optional<double> min_abs_det;
};

inline std::vector<SweepRow> sweep(const FieldSpec& f, std::span<const double> center, double r,
                                   const std::vector<double>& grid, const ZeroOptions& zopt,
                                   std::uint64_t seed = 1, unsigned jobs = 1) {
  std::vector<SweepRow> rows(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.eps = grid[i];
    const auto zeros = find_zeros_in_ball(f, center, r, row.eps, zopt);
    row.zero_count = static_cast<int>(zeros.size());
    for (const auto& z : zeros)
      row.min_abs_det = std::min(row.min_abs_det.value_or(std::numeric_limits<double>::infinity()),
                                 std::abs(z.det_j));
    try {
      row.sum_of_indices = ball_index_sum(f, zeros, center, row.eps, r, seed, zopt);
    } catch (const Error&) {
    }
  });
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "eps,zero_count,sum_of_indices,min_abs_det\n";
  for (const auto& r : rows) {
    out += format_double(r.eps) + "," + std::to_string(r.zero_count) + ",";
    if (r.sum_of_indices) out += std::to_string(*r.sum_of_indices);
    out += ",";
    if (r.min_abs_det) out += format_double(*r.min_abs_det);
    out += "\n";
  }
  return out;
}

/// Branches through every zero found at the start, middle and end of the
/// parameter grid, continued over the whole range; a seed already lying on
/// an earlier branch is skipped.
inline std::vector<Branch> diagram(const FieldSpec& f, std::span<const double> center, double r,
                                   const std::vector<double>& grid, const ZeroOptions& zopt,
                                   unsigned jobs = 1) {
  const double lo = grid.front(), hi = grid.back();
  const double step = grid.size() > 1 ? (hi - lo) / static_cast<double>(grid.size() - 1) : 1.0;
  std::vector<double> seeds_at{lo};
  if (grid.size() > 2) seeds_at.push_back(grid[(grid.size() - 1) / 2]);
  if (grid.size() > 1) seeds_at.push_back(hi);
  std::vector<std::vector<Equilibrium>> seeds(seeds_at.size());
  parallel_for(seeds_at.size(), jobs,
               [&](std::size_t i) { seeds[i] = find_zeros_in_ball(f, center, r, seeds_at[i], zopt); });

  ContinuationOptions copt;
  copt.zero = zopt;
  copt.center.assign(center.begin(), center.end());
  copt.radius = r;
  std::vector<Branch> branches;
  auto on_branch = [&](const Equilibrium& s) {
    for (const auto& b : branches)
      for (const auto& p : b.points)
        if (std::abs(p.eps - s.eps) <= 1e-9 * (1 + std::abs(s.eps)) && detail::dist(p.x, s.x) <= 1e-6)
          return true;
    return false;
  };
  for (const auto& group : seeds)
    for (const auto& s : group) {
      if (on_branch(s)) continue;
      if (grid.size() == 1) {
        Branch b;
        b.origin = s;
        b.points.push_back(s);
        branches.push_back(std::move(b));
        continue;
      }
      branches.push_back(continue_branch(f, s, lo, hi, step, copt));
    }
  return branches;
}

inline std::string diagram_csv(const FieldSpec& f, const std::vector<Branch>& branches) {
  std::string out = "branch_id,eps";
  for (const auto& v : f.var_names) out += "," + v;
  out += ",stable,index\n";
  for (std::size_t b = 0; b < branches.size(); ++b)
    for (const auto& p : branches[b].points) {
      out += std::to_string(b) + "," + format_double(p.eps);
      for (double x : p.x) out += "," + format_double(x);
      out += ",";
      if (p.spectrum) out += (p.spectrum->stable_count == static_cast<int>(f.dim)) ? "1" : "0";
      out += "," + std::to_string(p.index.value_or(0)) + "\n";
    }
  return out;
}

}  // namespace pitchfork
