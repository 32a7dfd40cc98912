#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "momt/generators.hpp"
#include "momt/sqp.hpp"

namespace momt {

struct BenchCase {
  std::string label;
  GeneratorOptions problem;
  SolverConfig config;
  int reference_iterations = 0;  // published count for the same setting
};

struct BenchRow {
  BenchCase spec;
  int iterations = 0;
  long pcg_total = 0;
  double seconds = 0.0;
  double distance2 = 0.0;
  bool converged = false;
  std::string status;  // "ok", "not-converged" or the error message
};

/// Optional overrides applied to every case of a suite.
struct BenchOverrides {
  std::optional<std::array<int, 3>> extent;
  std::optional<int> nt;
  std::optional<double> gamma;
  std::optional<double> tol_outer;
  std::optional<double> tol_inner;
  std::optional<int> max_outer;
  std::optional<bool> absolute_tol;
};

/// Suites: table1 .. table6 and table7-3d. Throws kInvalidArgument for unknown names.
std::vector<BenchCase> bench_cases(const std::string& suite, const BenchOverrides& overrides = {});
std::vector<std::string> bench_suites();

/// Runs one case; solver errors are recorded in the row rather than thrown.
BenchRow run_bench_case(const BenchCase& c);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);
void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace momt
