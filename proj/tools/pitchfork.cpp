// Command-line front end: analyze a problem file, sweep zero counts over a
// parameter range, or trace a bifurcation diagram.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "pitchfork/pitchfork.hpp"

namespace {

using namespace pitchfork;

enum ExitCode { kVerdict = 0, kInputError = 1, kUndetermined = 2 };

struct RunConfig {
  std::string problem_path;
  std::optional<double> radius;
  std::optional<double> delta_eps;
  Tolerances tol;
  std::uint64_t seed = 1;
  int grid = 0;
  double eps_lo = 0.0;
  double eps_hi = 0.0;
  int steps = 21;
  unsigned jobs = 1;
  std::string output = "-";
};

Problem load(const RunConfig& cfg) {
  std::ifstream in(cfg.problem_path);
  if (!in) throw Error("cannot open problem file '" + cfg.problem_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

AnalysisOptions options(const RunConfig& cfg, const Problem& p) {
  AnalysisOptions opt;
  opt.tol = cfg.tol;
  opt.radius = cfg.radius.value_or(p.radius);
  if (!(opt.radius > 0)) throw Error("radius must be positive");
  opt.delta_eps = cfg.delta_eps;
  if (opt.delta_eps && !(*opt.delta_eps > 0)) throw Error("delta-eps must be positive");
  opt.seed = cfg.seed;
  opt.grid_per_axis = cfg.grid;
  return opt;
}

void write_output(const RunConfig& cfg, const std::string& text) {
  if (cfg.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output, std::ios::binary);
  if (!out) throw Error("cannot write '" + cfg.output + "'");
  out << text;
}

int cmd_analyze(const RunConfig& cfg) {
  const Problem p = load(cfg);
  const AnalysisOptions opt = options(cfg, p);
  const Analysis a = classify(p.field, p.point, p.eps0, opt);
  std::cout << "problem: " << cfg.problem_path << '\n' << format_report(p.field, p.point, p.eps0, opt, a);
  const Verdict v = a.classification.verdict;
  return (v == Verdict::undetermined || v == Verdict::inconsistent) ? kUndetermined : kVerdict;
}

int cmd_sweep(const RunConfig& cfg) {
  const Problem p = load(cfg);
  const AnalysisOptions opt = options(cfg, p);
  const auto grid = eps_grid(cfg.eps_lo, cfg.eps_hi, cfg.steps);
  const auto rows = sweep(p.field, p.point, opt.radius, grid, opt.zero_options(), opt.seed, cfg.jobs);
  write_output(cfg, sweep_csv(rows));
  return kVerdict;
}

int cmd_diagram(const RunConfig& cfg) {
  const Problem p = load(cfg);
  const AnalysisOptions opt = options(cfg, p);
  const auto grid = eps_grid(cfg.eps_lo, cfg.eps_hi, cfg.steps);
  const auto branches = diagram(p.field, p.point, opt.radius, grid, opt.zero_options(), cfg.jobs);
  write_output(cfg, diagram_csv(p.field, branches));
  return kVerdict;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("file", cfg.problem_path, "Problem file")->required();
  sub->add_option("--radius", cfg.radius, "Ball radius (default: from the problem file)");
  sub->add_option("--tol-res", cfg.tol.tol_res, "Residual tolerance for zeros")->capture_default_str();
  sub->add_option("--tol-zero", cfg.tol.tol_zero, "Zero-eigenvalue tolerance")->capture_default_str();
  sub->add_option("--tol-p1", cfg.tol.tol_p1, "P1 threshold")->capture_default_str();
  sub->add_option("--tol-p2", cfg.tol.tol_p2, "P2 threshold")->capture_default_str();
  sub->add_option("--tol-p3", cfg.tol.tol_p3, "P3 threshold")->capture_default_str();
  sub->add_option("--tol-kernel", cfg.tol.tol_kernel, "Relative singular-value cut for kernels")
      ->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Seed for the perturbation draws")->capture_default_str();
  sub->add_option("--grid", cfg.grid, "Newton seeds per axis (0: by dimension)")->capture_default_str();
}

void add_range(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--eps-lo", cfg.eps_lo, "Lower parameter value")->required();
  sub->add_option("--eps-hi", cfg.eps_hi, "Upper parameter value")->required();
  sub->add_option("--steps", cfg.steps, "Number of parameter values")->capture_default_str();
  sub->add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("-o,--output", cfg.output, "Output CSV ('-' for stdout)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pitchfork bifurcation analysis of parameterized vector fields"};
  app.require_subcommand(1);
  RunConfig cfg;
  auto* analyze = app.add_subcommand("analyze", "Check P0-P3 at the problem's point and classify");
  add_common(analyze, cfg);
  analyze->add_option("--delta-eps", cfg.delta_eps, "Parameter offset for the zero counts");
  auto* sweep_cmd = app.add_subcommand("sweep", "Zero counts and index sums over a parameter range (CSV)");
  add_common(sweep_cmd, cfg);
  add_range(sweep_cmd, cfg);
  auto* diagram_cmd = app.add_subcommand("diagram", "Continued equilibrium branches (CSV)");
  add_common(diagram_cmd, cfg);
  add_range(diagram_cmd, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*analyze) return cmd_analyze(cfg);
    if (*sweep_cmd) return cmd_sweep(cfg);
    return cmd_diagram(cfg);
  } catch (const ParseError& e) {
    std::cerr << "error: " << cfg.problem_path << ": " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
}
