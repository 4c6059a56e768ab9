// Acceptance checks: one PASS/FAIL line per criterion. With an argument N
// only criterion N runs; the exit status is nonzero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "support.hpp"

using namespace pitchfork;
using testing_support::load_problem;
using testing_support::num;
using testing_support::random_origin_field;
using testing_support::Rng;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) { return fmt_num(v); }

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

AnalysisOptions at_radius(double r) {
  AnalysisOptions opt;
  opt.radius = r;
  return opt;
}

Outcome criterion1() {
  const Problem p = load_problem("pitchfork_symmetric.pf");
  const Analysis a = classify(p.field, p.point, p.eps0, at_radius(0.8));
  const NormalForm nf = normalize(p.field, p.point, p.eps0);
  const double h20 = center_coeffs(nf).h20[0];
  const auto counts = count_two_sided(p.field, p.point, p.eps0, 0.04, 0.8);
  const double dd = a.report.p2.directional_deriv;
  const std::string v = to_string(a.classification);
  const bool ok = v == "Pitchfork 1->3" && near(dd, -2.0, 1e-8) && near(h20, 0.25, 1e-8) &&
                  counts == std::pair<int, int>{1, 3};
  return {ok, "verdict " + v + ", P2 witness " + fmt(dd) + ", h20 " + fmt(h20) + ", counts (" +
                  std::to_string(counts.first) + ", " + std::to_string(counts.second) + ")"};
}

Outcome criterion2() {
  const Problem p = load_problem("pitchfork_asymmetric.pf");
  const Analysis a = classify(p.field, p.point, p.eps0, at_radius(0.8));
  const auto counts = count_two_sided(p.field, p.point, p.eps0, 0.04, 0.8);
  const Verdict v = a.classification.verdict;
  const bool ok = (v == Verdict::pitchfork_1to3 || v == Verdict::pitchfork_3to1) && counts == std::pair<int, int>{1, 3};
  return {ok, "verdict " + to_string(a.classification) + ", counts (" + std::to_string(counts.first) + ", " +
                  std::to_string(counts.second) + ")"};
}

Outcome criterion3() {
  const Problem p = load_problem("perturbed_pitchfork_010.pf");
  const auto zeros = find_zeros_in_ball(p.field, p.point, 3.0, 0.0);
  std::string detail = std::to_string(zeros.size()) + " zeros at eps = 0;";
  bool ok = true;
  for (double sgn : {1.0, -1.0}) {
    const double y = (1.1 + sgn * std::sqrt(1.1)) / 1.1;
    double best = INFINITY;
    for (const auto& z : zeros) best = std::min(best, std::abs(z.x[1] - y));
    ok = ok && best <= 1e-8;
    detail += " y = " + fmt(y) + " matched to " + fmt(best) + ";";
  }
  const Analysis a = classify(p.field, p.point, p.eps0, at_radius(p.radius));
  ok = ok && !is_pitchfork(a.classification.verdict);
  return {ok, detail + " verdict " + to_string(a.classification)};
}

Outcome criterion4() {
  const Problem p = load_problem("zero_index.pf");
  const P0Report r = check_p0(p.field, p.point, p.eps0, 1.0);
  const bool p0_ok = !r.pass && r.index && *r.index == 0;
  const auto rows = sweep(p.field, p.point, 1.0, eps_grid(-0.1, 0.2, 31), at_radius(1.0).zero_options());
  // Run-length pattern of the zero counts along the sweep.
  std::vector<int> pattern;
  for (const auto& row : rows)
    if (pattern.empty() || pattern.back() != row.zero_count) pattern.push_back(row.zero_count);
  bool found = false;
  for (std::size_t i = 0; i < pattern.size(); ++i)
    for (std::size_t j = i + 1; j < pattern.size(); ++j)
      for (std::size_t k = j + 1; k < pattern.size(); ++k)
        found = found || (pattern[i] == 3 && pattern[j] == 0 && pattern[k] == 3);
  std::string seq;
  for (int c : pattern) seq += (seq.empty() ? "" : "->") + std::to_string(c);
  return {p0_ok && found, "P0 " + std::string(pass_fail(r.pass)) + " with index " +
                              (r.index ? std::to_string(*r.index) : std::string("unavailable")) +
                              "; counts over eps in [-0.1, 0.2] at r = 1.0: " + seq + " (3->0->3 " +
                              (found ? "present" : "absent") + ")"};
}

Outcome criterion5() {
  const Problem p = load_problem("moving_zero.pf");
  const Analysis a = classify(p.field, p.point, p.eps0, at_radius(p.radius));
  const auto c = a.classification.counts;
  const bool ok = !a.report.p1.pass && c == std::pair<int, int>{1, 1};
  return {ok, "P1 " + std::string(pass_fail(a.report.p1.pass)) + " (v_l . dV/deps = " + fmt(a.report.p1.vl_dVeps) +
                  "), counts (" + std::to_string(c.first) + ", " + std::to_string(c.second) + ")"};
}

Outcome criterion6() {
  const Problem p = load_problem("moving_center_manifold.pf");
  const P2Report r = check_p2(p.field, p.point, p.eps0);
  double worst_kernel = std::abs(r.directional_deriv);
  for (double v : r.kernel_values) worst_kernel = std::max(worst_kernel, std::abs(v));
  const bool p2_ok = r.applicable && !r.pass && r.kernel_values.size() == 2 && worst_kernel <= 1e-7;
  const auto seeds = find_zeros_in_ball(p.field, p.point, p.radius, -0.1);
  double dev = INFINITY;
  bool unique = seeds.size() == 1;
  if (unique) {
    const Branch b = continue_branch(p.field, seeds[0], -0.1, 0.1, 0.01);
    dev = 0.0;
    for (const auto& q : b.points) dev = std::max({dev, std::abs(q.x[0]), std::abs(q.x[1] + q.eps / 2)});
    if (!near(b.points.back().eps, 0.1, 1e-12) || !near(b.points.front().eps, -0.1, 1e-12)) dev = INFINITY;
    for (double e : {-0.05, 0.0, 0.05, 0.1}) unique = unique && find_zeros_in_ball(p.field, p.point, p.radius, e).size() == 1;
  }
  return {p2_ok && unique && dev <= 1e-8,
          "P2 " + std::string(pass_fail(r.pass)) + ", kernel values within " + fmt(worst_kernel) +
              "; branch unique " + (unique ? "yes" : "no") + ", deviation from (0, -eps/2) " + fmt(dev)};
}

Outcome criterion7() {
  const Problem p = load_problem("oscillating_2d.pf");
  const NormalForm nf = normalize(p.field, p.point, p.eps0);
  const P3Parts parts = p3_value(nf);
  const double via = p3_via_manifold(nf, center_coeffs(nf));
  const bool ok = near(parts.value, 0.0, 1e-6) && near(parts.d_uu_det, 8.0, 1e-6) &&
                  near(parts.dy_det_term, -8.0, 1e-6) && near(via, parts.value, 1e-6);
  return {ok, "p3 = " + fmt(parts.value) + " = " + fmt(parts.d_uu_det) + " + (" + fmt(parts.dy_det_term) +
                  "), via manifold " + fmt(via)};
}

// Zeros of x (eps - x^2 sin(1/x)^2 - x^4) on [-r, r] by sign changes on a
// dense grid offset from x = 0, plus the zero at the origin.
int scan_count(double eps, double r, int samples) {
  auto g = [eps](double x) { return eps - x * x * std::sin(1 / x) * std::sin(1 / x) - x * x * x * x; };
  int count = 1;
  const double step = 2 * r / samples;
  double prev = g(-r + 0.5 * step);
  for (int k = 1; k < samples; ++k) {
    const double cur = g(-r + (k + 0.5) * step);
    if ((cur < 0) != (prev < 0)) ++count;
    prev = cur;
  }
  return count;
}

Outcome criterion8() {
  const Problem p = load_problem("oscillating_1d.pf");
  AnalysisOptions opt = at_radius(0.2);
  const P0Report p0 = check_p0(p.field, p.point, p.eps0, 0.2, opt);
  const P1Report p1 = check_p1(p.field, p.point, p.eps0);
  const P2Report p2 = check_p2(p.field, p.point, p.eps0);
  const P3Report p3 = check_p3(p.field, p.point, p.eps0);
  const int primary = p0.primary ? p0.primary->value : 99;
  const int found = static_cast<int>(find_zeros_in_ball(p.field, p.point, 0.2, 1e-3, opt.zero_options()).size());
  const int oracle = scan_count(1e-3, 0.2, 1000000);
  const bool ok = primary == -1 && p0.pass && p1.pass && p2.pass && !p3.pass && found > 3 && oracle > 3;
  return {ok, "1D index " + std::to_string(primary) + "; P0 " + pass_fail(p0.pass) + ", P1 " + pass_fail(p1.pass) +
                  ", P2 " + pass_fail(p2.pass) + ", P3 " + (p3.available ? pass_fail(p3.pass) : "unavailable") +
                  "; zeros at eps = 1e-3: " + std::to_string(found) + " (sign-change scan: " + std::to_string(oracle) + ")"};
}

Outcome criterion9() {
  Rng rng(91);
  int both = 0, agree = 0, disagree = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const FieldSpec f = random_origin_field(rng);
    const Vec o{0, 0};
    std::optional<int> w, q;
    try {
      w = winding_2d(f, o, 0.0, 0.5).value;
    } catch (const Error&) {
    }
    try {
      q = index_by_perturbation(f, o, 0.0, 0.5, static_cast<std::uint64_t>(trial) + 1).value;
    } catch (const Error&) {
    }
    if (!w || !q) continue;
    ++both;
    (*w == *q ? agree : disagree)++;
  }
  return {both >= 45 && disagree == 0, std::to_string(both) + " of 50 fields with both oracles, " +
                                           std::to_string(agree) + " agree, " + std::to_string(disagree) + " disagree"};
}

Outcome criterion10() {
  Rng rng(101);
  int fields = 0, matched = 0, sums_const = 0;
  std::string first_bad;
  while (fields < 20) {
    const std::size_t n = fields % 2 == 0 ? 2 : 3;
    const auto bf = testing_support::random_block_field(rng, n);
    // Keep draws where the reduced cubic and the eps-coupling are clearly nonzero.
    const Vec mq = solve(bf.M, bf.q), mb = solve(bf.M, bf.b);
    const double c_red = bf.c - dot(bf.d, mq), a_red = bf.a - dot(bf.d, mb);
    if (std::abs(c_red) < 0.5 || std::abs(a_red) < 0.3) continue;
    ++fields;
    const Vec o(n, 0.0);
    const P0Report p0 = check_p0(bf.field, o, 0.0, 0.3);
    const int oracle = n == 2 ? winding_2d(bf.field, o, 0.0, 0.3).value : index_by_perturbation(bf.field, o, 0.0, 0.3).value;
    const bool m = p0.primary && p0.primary->method == IndexMethod::product && p0.primary->value == oracle;
    matched += m;
    std::vector<int> sums;
    for (double e : {-0.004, -0.002, 0.0, 0.002, 0.004})
      sums.push_back(ball_index_sum(bf.field, find_zeros_in_ball(bf.field, o, 0.3, e), o, e, 0.3));
    const bool c = std::all_of(sums.begin(), sums.end(), [&](int s) { return s == oracle; });
    sums_const += c;
    if ((!m || !c) && first_bad.empty()) first_bad = "; first mismatch at field " + std::to_string(fields);
  }
  return {matched == fields && sums_const == fields,
          std::to_string(matched) + " of " + std::to_string(fields) + " product indices match the oracle, " +
              std::to_string(sums_const) + " ball index sums constant over 5 eps values" + first_bad};
}

Outcome criterion11() {
  const char* names[] = {"pitchfork_symmetric.pf", "pitchfork_asymmetric.pf", "perturbed_pitchfork_010.pf",
                         "perturbed_pitchfork_005.pf", "zero_index.pf", "moving_zero.pf",
                         "moving_center_manifold.pf", "oscillating_1d.pf", "oscillating_2d.pf"};
  Rng rng(111);
  int total = 0, same = 0;
  std::string bad;
  auto flags = [](const FieldSpec& f, std::span<const double> x, double e, double r) {
    const AnalysisOptions opt = at_radius(r);
    std::string s;
    s += check_p0(f, x, e, r, opt).pass ? '1' : '0';
    s += check_p1(f, x, e, opt.tol).pass ? '1' : '0';
    s += check_p2(f, x, e, opt.tol).pass ? '1' : '0';
    s += check_p3(f, x, e, opt.tol).pass ? '1' : '0';
    return s;
  };
  for (const char* name : names) {
    const Problem p = load_problem(name);
    const std::string base = flags(p.field, p.point, p.eps0, p.radius);
    for (int t = 0; t < 20; ++t) {
      const Matrix T = rng.well_conditioned(p.field.dim);
      const Vec a = rng.vec(p.field.dim, -1, 1);
      const FieldSpec g = transform_field(p.field, T, a);
      const Vec z = transform_point(T, a, p.point, p.eps0);
      const std::string got = flags(g, z, p.eps0, p.radius);
      ++total;
      if (got == base) {
        ++same;
      } else if (bad.empty()) {
        bad = "; " + std::string(name) + " draw " + std::to_string(t) + ": P0-P3 " + got + " vs " + base;
      }
    }
  }
  return {same == total, std::to_string(same) + " of " + std::to_string(total) + " transformed problems keep the P0-P3 flags" + bad};
}

Outcome criterion12() {
  Rng rng(121);
  // Jacobi's formula against central differences of det D_x V.
  double worst_grad = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 3));
    std::vector<std::string> vars{"x", "y", "z"};
    vars.resize(n);
    std::vector<std::string> names = vars;
    names.push_back("eps");
    std::vector<std::string> eqs;
    for (std::size_t i = 0; i < n; ++i) eqs.push_back(testing_support::random_polynomial(rng, names, 3, 6));
    const FieldSpec f = make_field(vars, "eps", eqs);
    const Vec x = rng.vec(n, -1, 1);
    const double e = rng.uniform(-1, 1);
    const Vec g = det_gradient(f, x, e);
    const double h = 1e-5;
    double scale = 1.0;
    for (double v : g) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k <= n; ++k) {
      Vec xp = x, xm = x;
      double ep = e, em = e;
      if (k < n) {
        xp[k] += h;
        xm[k] -= h;
      } else {
        ep += h;
        em -= h;
      }
      const double fd = (det(jacobian_x(jet(f, xp, ep, 1))) - det(jacobian_x(jet(f, xm, em, 1)))) / (2 * h);
      worst_grad = std::max(worst_grad, std::abs(fd - g[k]) / scale);
    }
  }
  // M adj(M) = det(M) I.
  double worst_adj = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 5));
    Matrix m = rng.matrix(n, n);
    if (trial % 5 == 0 && n > 1)  // rank-deficient case
      for (std::size_t j = 0; j < n; ++j) m(n - 1, j) = m(0, j);
    const Matrix prod = m * adjugate(m);
    const double d = det(m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) worst_adj = std::max(worst_adj, std::abs(prod(i, j) - (i == j ? d : 0.0)));
  }
  // Observed order of jet_fd against the exact jet.
  const FieldSpec f = make_field({"x", "y"}, "eps", {"sin(x*y) + exp(eps*x)", "cos(x + eps)*y^3"});
  const Vec x{0.3, 0.7};
  const Jet3 exact = jet(f, x, 0.2, 2);
  auto err = [&](double h) {
    const Jet3 fd = jet_fd(f, x, 0.2, 2, h);
    double m = 0.0;
    for (std::size_t i = 0; i < exact.d1v.size(); ++i) m = std::max(m, std::abs(exact.d1v[i] - fd.d1v[i]));
    for (std::size_t i = 0; i < exact.d2v.size(); ++i) m = std::max(m, std::abs(exact.d2v[i] - fd.d2v[i]));
    return m;
  };
  const double h1 = 1e-2, h2 = 1e-3;
  const double slope = std::log10(err(h1) / err(h2)) / std::log10(h1 / h2);
  const bool ok = worst_grad <= 1e-6 && worst_adj <= 1e-10 && near(slope, 2.0, 0.3);
  return {ok, "det gradient rel. error " + fmt(worst_grad) + ", adjugate identity " + fmt(worst_adj) +
                  ", jet_fd slope " + fmt(slope)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> checks{criterion1, criterion2, criterion3,  criterion4,
                                                     criterion5, criterion6, criterion7,  criterion8,
                                                     criterion9, criterion10, criterion11, criterion12};
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  if (only < 0 || only > static_cast<int>(checks.size())) {
    std::fprintf(stderr, "usage: %s [criterion 1-%zu]\n", argv[0], checks.size());
    return 2;
  }
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %zu: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
