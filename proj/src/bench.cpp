#include "momt/bench.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>

#include "momt/error.hpp"

namespace momt {

namespace {

struct Row {
  int nx, ny, nz, nt;
  double gamma;
  int reference;
};

BenchCase make_case(ProblemKind kind, int dim, const Row& r, double contrast, double tol_outer,
                    double tol_inner) {
  BenchCase c;
  c.problem.kind = kind;
  c.problem.dim = dim;
  c.problem.extent = {r.nx, r.ny, dim == 3 ? r.nz : 1};
  c.problem.nt = r.nt;
  c.problem.n = 3;
  c.problem.gamma = r.gamma;
  c.problem.contrast = contrast;
  c.config.tol_outer = tol_outer;
  c.config.tol_inner = tol_inner;
  c.reference_iterations = r.reference;
  return c;
}

std::string grid_label(const GeneratorOptions& o) {
  std::string s;
  for (int a = 0; a < o.dim; ++a) s += std::to_string(o.extent[a]) + "x";
  return s + std::to_string(o.nt);
}

}  // namespace

std::vector<std::string> bench_suites() {
  return {"table1", "table2", "table3", "table4", "table5", "table6", "table7-3d"};
}

std::vector<BenchCase> bench_cases(const std::string& suite, const BenchOverrides& ov) {
  const auto M = ProblemKind::kMatrix;
  const auto V = ProblemKind::kVector;
  std::vector<BenchCase> cases;
  if (suite == "table1") {
    for (Row r : {Row{16, 16, 1, 10, 0.01, 19}, Row{32, 32, 1, 20, 0.01, 27}, Row{64, 64, 1, 40, 0.01, 35}})
      cases.push_back(make_case(M, 2, r, 10.0, 1e-3, 1e-3));
  } else if (suite == "table2") {
    for (Row r : {Row{16, 16, 1, 10, 0.01, 25}, Row{32, 32, 1, 20, 0.01, 31}, Row{64, 64, 1, 40, 0.01, 62}})
      cases.push_back(make_case(M, 2, r, 50.0, 1e-2, 1e-3));
  } else if (suite == "table3") {
    for (Row r : {Row{32, 32, 1, 20, 1.0, 77}, Row{32, 32, 1, 20, 0.1, 52}, Row{32, 32, 1, 20, 0.01, 31}})
      cases.push_back(make_case(M, 2, r, 50.0, 1e-2, 1e-3));
  } else if (suite == "table4") {
    for (Row r : {Row{32, 32, 1, 10, 0.01, 11}, Row{64, 64, 1, 20, 0.01, 12}, Row{128, 128, 1, 40, 0.01, 14}})
      cases.push_back(make_case(V, 2, r, 10.0, 1e-3, 1e-2));
  } else if (suite == "table5") {
    for (Row r : {Row{32, 32, 1, 10, 0.01, 24}, Row{64, 64, 1, 20, 0.01, 27}, Row{128, 128, 1, 40, 0.01, 32}})
      cases.push_back(make_case(V, 2, r, 100.0, 1e-3, 1e-2));
  } else if (suite == "table6") {
    for (Row r : {Row{64, 64, 1, 20, 1.0, 48}, Row{64, 64, 1, 20, 0.1, 42}, Row{64, 64, 1, 20, 0.01, 27}})
      cases.push_back(make_case(V, 2, r, 100.0, 1e-3, 1e-2));
  } else if (suite == "table7-3d") {
    for (Row r : {Row{16, 16, 16, 10, 0.1, 19}, Row{32, 32, 32, 10, 0.1, 25}, Row{64, 64, 64, 10, 0.1, 23}})
      cases.push_back(make_case(M, 3, r, 30.0, 1e-3, 1e-3));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown bench suite " + suite);
  }
  for (auto& c : cases) {
    if (ov.extent) {
      for (int a = 0; a < c.problem.dim; ++a) c.problem.extent[a] = (*ov.extent)[a];
    }
    if (ov.nt) c.problem.nt = *ov.nt;
    if (ov.gamma) c.problem.gamma = *ov.gamma;
    if (ov.tol_outer) c.config.tol_outer = *ov.tol_outer;
    if (ov.tol_inner) c.config.tol_inner = *ov.tol_inner;
    if (ov.max_outer) c.config.max_outer = *ov.max_outer;
    if (ov.absolute_tol) c.config.absolute_tol = *ov.absolute_tol;
    char gamma[32];
    std::snprintf(gamma, sizeof gamma, " gamma=%g", c.problem.gamma);
    c.label = suite + " " + grid_label(c.problem) + gamma;
  }
  return cases;
}

BenchRow run_bench_case(const BenchCase& c) {
  BenchRow row;
  row.spec = c;
  const auto start = std::chrono::steady_clock::now();
  try {
    const ProblemFile problem = generate(c.problem);
    const auto model = make_model(problem);
    const SolveResult result = solve(*model, c.config);
    row.iterations = static_cast<int>(result.trace.size());
    for (const auto& t : result.trace) row.pcg_total += t.pcg_iters;
    row.distance2 = result.distance2;
    row.converged = result.converged;
    if (result.failure) {
      row.status = result.failure_message;
    } else {
      row.status = result.converged ? "ok" : "not-converged";
    }
  } catch (const Error& e) {
    row.status = e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "case,kind,grid,gamma,contrast,tol_outer,tol_inner,sqp_iterations,reference_iterations,"
         "pcg_total,seconds,distance2,status\n";
  char buf[512];
  for (const auto& r : rows) {
    const auto& p = r.spec.problem;
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%g,%g,%g,%g,%d,%d,%ld,%.3f,%.10g,\"%s\"\n", r.spec.label.c_str(),
                  p.kind == ProblemKind::kMatrix ? "matrix" : "vector", grid_label(p).c_str(), p.gamma,
                  p.contrast, r.spec.config.tol_outer, r.spec.config.tol_inner, r.iterations,
                  r.spec.reference_iterations, r.pcg_total, r.seconds, r.distance2, r.status.c_str());
    out << buf;
  }
}

void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-14s %-7s %8s %6s %10s %10s %9s %9s  %s\n", "grid", "kind", "gamma", "contr",
                "SQP iters", "reference", "PCG total", "seconds", "status");
  out << buf;
  for (const auto& r : rows) {
    const auto& p = r.spec.problem;
    std::snprintf(buf, sizeof buf, "%-14s %-7s %8g %6g %10d %10d %9ld %9.2f  %s\n", grid_label(p).c_str(),
                  p.kind == ProblemKind::kMatrix ? "matrix" : "vector", p.gamma, p.contrast, r.iterations,
                  r.spec.reference_iterations, r.pcg_total, r.seconds, r.status.c_str());
    out << buf;
  }
}

}  // namespace momt
