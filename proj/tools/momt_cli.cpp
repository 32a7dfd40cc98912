// Command-line front end: gen, solve, export, bench. Talks to the solver only through momt.h.
#include <cstdio>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "momt/momt.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;

struct ProblemDeleter {
  void operator()(momt_problem* p) const { momt_problem_free(p); }
};
struct SolutionDeleter {
  void operator()(momt_solution* s) const { momt_solution_free(s); }
};
struct BenchDeleter {
  void operator()(momt_bench_report* r) const { momt_bench_free(r); }
};
using ProblemPtr = std::unique_ptr<momt_problem, ProblemDeleter>;
using SolutionPtr = std::unique_ptr<momt_solution, SolutionDeleter>;
using BenchPtr = std::unique_ptr<momt_bench_report, BenchDeleter>;

int report(momt_status s) {
  std::fprintf(stderr, "error: %s\n", momt_last_error());
  return s == MOMT_IO_ERROR || s == MOMT_FORMAT_ERROR || s == MOMT_INVALID_ARGUMENT || s == MOMT_INVALID_CONTRAST ||
                 s == MOMT_KERNEL_ASSUMPTION || s == MOMT_NOT_POSITIVE_DEFINITE || s == MOMT_SHAPE_MISMATCH ||
                 s == MOMT_NON_POSITIVE_DENSITY
             ? kExitInput
             : kExitFailure;
}

// "32x32" or "16x16x16".
std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    std::size_t used = 0;
    const int v = std::stoi(part, &used);
    if (used != part.size() || v <= 0) throw CLI::ValidationError("--grid", "expected NxM or NxMxK");
    dims.push_back(v);
  }
  if (dims.size() < 1 || dims.size() > 3) throw CLI::ValidationError("--grid", "expected NxM or NxMxK");
  return dims;
}

struct GenArgs {
  std::string kind = "matrix";
  std::string grid = "16x16";
  std::string generator = "disk-quarters";
  int nt = 10;
  int nodes = 3;
  double contrast = 10.0;
  double gamma = 0.01;
  uint64_t seed = 0;
  double disk_radius = 0.3;
  double corner_radius = 0.4;
  double sigma = 2.0;
  std::string out = "problem.momt";
};

struct SolveArgs {
  std::string problem = "problem.momt";
  std::string out = "solution.moms";
  std::string trace = "trace.csv";
  std::optional<double> gamma;
  double tol_outer = 1e-3;
  double tol_inner = 0.0;
  int max_outer = 100;
  bool absolute_tol = false;
  bool quiet = false;
};

struct ExportArgs {
  std::string solution = "solution.moms";
  std::string format = "glyph-csv";
  std::string out;
};

struct BenchArgs {
  std::string suite;
  std::string grid;
  int nt = 0;
  double gamma = 0.0;
  double tol_outer = 0.0;
  double tol_inner = 0.0;
  int max_outer = 0;
  bool absolute_tol = false;
  std::string out = "bench.csv";
};

int run_gen(const GenArgs& a) {
  momt_generator_options o;
  momt_generator_options_default(&o);
  o.kind = a.kind == "vector" ? MOMT_KIND_VECTOR : MOMT_KIND_MATRIX;
  o.generator = a.generator.c_str();
  const auto dims = parse_grid(a.grid);
  o.dim = static_cast<int>(dims.size());
  for (int i = 0; i < 3; ++i) o.extent[i] = i < o.dim ? dims[i] : 1;
  o.nt = a.nt;
  o.n = a.nodes;
  o.gamma = a.gamma;
  o.contrast = a.contrast;
  o.seed = a.seed;
  o.disk_radius = a.disk_radius;
  o.corner_radius = a.corner_radius;
  o.sigma_cells = a.sigma;
  momt_problem* raw = nullptr;
  if (const auto s = momt_problem_generate(&o, &raw); s != MOMT_OK) return report(s);
  ProblemPtr problem(raw);
  if (const auto s = momt_problem_save(problem.get(), a.out.c_str()); s != MOMT_OK) return report(s);
  momt_problem_info info;
  momt_problem_get_info(problem.get(), &info);
  std::printf("wrote %s: %s %s, nt=%d, n=%d, contrast rho0=%.4g rho1=%.4g\n", a.out.c_str(),
              info.kind == MOMT_KIND_VECTOR ? "vector" : "matrix", a.grid.c_str(), info.nt, info.n,
              info.contrast_rho0, info.contrast_rho1);
  return kExitOk;
}

int run_solve(const SolveArgs& a) {
  momt_problem* raw = nullptr;
  if (const auto s = momt_problem_load(a.problem.c_str(), &raw); s != MOMT_OK) return report(s);
  ProblemPtr problem(raw);
  if (a.gamma) {
    if (const auto s = momt_problem_set_gamma(problem.get(), *a.gamma); s != MOMT_OK) return report(s);
  }
  momt_solver_config c;
  momt_solver_config_default(&c);
  c.tol_outer = a.tol_outer;
  c.tol_inner = a.tol_inner;
  c.max_outer = a.max_outer;
  c.absolute_tol = a.absolute_tol ? 1 : 0;

  momt_solution* sraw = nullptr;
  const momt_status status = momt_solve(problem.get(), &c, &sraw);
  if (!sraw) return report(status);
  SolutionPtr solution(sraw);
  const std::string solve_error = momt_last_error();

  if (!a.quiet) {
    std::printf("%5s %14s %14s %10s %6s %10s\n", "iter", "merit", "cost", "alpha", "pcg", "shift");
    for (size_t i = 0; i < momt_solution_trace_length(solution.get()); ++i) {
      momt_trace_record r;
      momt_solution_trace_at(solution.get(), i, &r);
      std::printf("%5d %14.6e %14.8g %10.4g %6d %10.3g\n", r.iter, r.merit, r.cost, r.alpha, r.pcg_iters, r.shift);
    }
  }
  momt_solution_info info;
  momt_solution_get_info(solution.get(), &info);
  for (size_t i = 0; i < info.warning_count; ++i) {
    std::fprintf(stderr, "warning: %s\n", momt_solution_warning(solution.get(), i));
  }
  if (const auto s = momt_solution_save(solution.get(), a.out.c_str()); s != MOMT_OK) return report(s);
  if (!a.trace.empty()) {
    if (const auto s = momt_solution_write_trace(solution.get(), a.trace.c_str()); s != MOMT_OK) return report(s);
  }
  std::printf("%s after %d iterations, residual %.3e, distance^2 = %.10g\n",
              info.converged ? "converged" : "not converged", info.iterations, info.residual, info.distance2);
  if (status != MOMT_OK) {
    std::fprintf(stderr, "error: %s\n", solve_error.c_str());
    return kExitFailure;
  }
  return kExitOk;
}

int run_export(const ExportArgs& a) {
  momt_solution* raw = nullptr;
  if (const auto s = momt_solution_load(a.solution.c_str(), &raw); s != MOMT_OK) return report(s);
  SolutionPtr solution(raw);
  const bool ppm = a.format == "ppm";
  const std::string target = !a.out.empty() ? a.out : ppm ? "frame" : "glyphs.csv";
  size_t files = 0;
  const auto s = momt_solution_export(solution.get(), ppm ? MOMT_EXPORT_PPM : MOMT_EXPORT_GLYPH_CSV,
                                      target.c_str(), &files);
  if (s != MOMT_OK) return report(s);
  if (ppm) {
    std::printf("wrote %zu frames %s_000.ppm ...\n", files, target.c_str());
  } else {
    std::printf("wrote %s\n", target.c_str());
  }
  return kExitOk;
}

int run_bench(const BenchArgs& a) {
  momt_bench_overrides o{};
  if (!a.grid.empty()) {
    const auto dims = parse_grid(a.grid);
    for (int i = 0; i < 3; ++i) o.extent[i] = i < static_cast<int>(dims.size()) ? dims[i] : dims.back();
  }
  o.nt = a.nt;
  o.gamma = a.gamma;
  o.tol_outer = a.tol_outer;
  o.tol_inner = a.tol_inner;
  o.max_outer = a.max_outer;
  o.absolute_tol = a.absolute_tol ? 1 : 0;
  momt_bench_report* raw = nullptr;
  if (const auto s = momt_bench_create(a.suite.c_str(), &o, &raw); s != MOMT_OK) return report(s);
  BenchPtr bench(raw);
  bool all_ok = true;
  const size_t cases = momt_bench_case_count(bench.get());
  for (size_t i = 0; i < cases; ++i) {
    std::fprintf(stderr, "[%zu/%zu] %s\n", i + 1, cases, momt_bench_case_label(bench.get(), i));
    if (const auto s = momt_bench_run_case(bench.get(), i); s != MOMT_OK) return report(s);
    momt_bench_row row;
    momt_bench_row_at(bench.get(), i, &row);
    all_ok = all_ok && row.converged;
  }
  std::fputs(momt_bench_table(bench.get()), stdout);
  if (const auto s = momt_bench_write_csv(bench.get(), a.out.c_str()); s != MOMT_OK) return report(s);
  return all_ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix- and vector-valued optimal mass transport solver"};
  app.set_version_flag("--version", std::string(momt_version()));
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic problem");
  g->add_option("--kind", gen.kind, "matrix or vector")->check(CLI::IsMember({"matrix", "vector"}))->capture_default_str();
  g->add_option("--grid", gen.grid, "Spatial cells, NxM or NxMxK")->capture_default_str();
  g->add_option("--nt", gen.nt, "Time cells")->check(CLI::Range(2, 1 << 20))->capture_default_str();
  g->add_option("--nodes", gen.nodes, "Block size (matrix) or graph nodes (vector)")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  g->add_option("--generator", gen.generator, "disk-quarters, static or random")
      ->check(CLI::IsMember({"disk-quarters", "static", "random"}))
      ->capture_default_str();
  g->add_option("--contrast", gen.contrast, "Density contrast")->capture_default_str();
  g->add_option("--gamma", gen.gamma, "Flux weight")->capture_default_str();
  g->add_option("--seed", gen.seed, "Seed for the random generator")->capture_default_str();
  g->add_option("--disk-radius", gen.disk_radius, "Radius of the initial disk")->capture_default_str();
  g->add_option("--corner-radius", gen.corner_radius, "Radius of the terminal corner regions")->capture_default_str();
  g->add_option("--sigma", gen.sigma, "Gaussian smoothing width in cells")->capture_default_str();
  g->add_option("-o,--out", gen.out, "Output problem file")->capture_default_str();

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "Solve a problem file");
  s->add_option("problem", sol.problem, "Problem file")->capture_default_str();
  s->add_option("--gamma", sol.gamma, "Override the stored flux weight");
  s->add_option("--tol-outer", sol.tol_outer, "KKT residual tolerance")->capture_default_str();
  s->add_option("--tol-inner", sol.tol_inner, "PCG relative tolerance (default 1e-3 matrix, 1e-2 vector)");
  s->add_option("--max-outer", sol.max_outer, "SQP iteration limit")->capture_default_str();
  s->add_flag("--absolute-tol", sol.absolute_tol, "Use the absolute KKT residual");
  s->add_option("-o,--out", sol.out, "Solution archive")->capture_default_str();
  s->add_option("--trace", sol.trace, "Per-iteration CSV (empty to skip)")->capture_default_str();
  s->add_flag("-q,--quiet", sol.quiet, "Do not print the iteration table");

  ExportArgs ex;
  auto* e = app.add_subcommand("export", "Export a solution for visualization");
  e->add_option("solution", ex.solution, "Solution archive")->capture_default_str();
  e->add_option("--format", ex.format, "glyph-csv or ppm")
      ->check(CLI::IsMember({"glyph-csv", "ppm"}))
      ->capture_default_str();
  e->add_option("-o,--out", ex.out, "CSV path or PPM prefix (default glyphs.csv / frame)");

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "Run a benchmark suite");
  b->add_option("suite", be.suite, "table1..table6 or table7-3d")->required();
  b->add_option("--grid", be.grid, "Override the spatial grid");
  b->add_option("--nt", be.nt, "Override time cells");
  b->add_option("--gamma", be.gamma, "Override the flux weight");
  b->add_option("--tol-outer", be.tol_outer, "Override the KKT tolerance");
  b->add_option("--tol-inner", be.tol_inner, "Override the PCG tolerance");
  b->add_option("--max-outer", be.max_outer, "Override the SQP iteration limit");
  b->add_flag("--absolute-tol", be.absolute_tol, "Use the absolute KKT residual");
  b->add_option("-o,--out", be.out, "CSV report")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*g) return run_gen(gen);
    if (*s) return run_solve(sol);
    if (*e) return run_export(ex);
    if (*b) return run_bench(be);
  } catch (const CLI::ValidationError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitInput;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitInput;
  }
  return kExitInput;
}
