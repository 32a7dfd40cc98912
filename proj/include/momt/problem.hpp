#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "momt/matrix_omt.hpp"
#include "momt/vector_omt.hpp"

namespace momt {

enum class ProblemKind : std::uint8_t { kMatrix = 0, kVector = 1 };

/// Self-describing problem description as stored on disk.
///
/// Layout (little-endian): "MOMT", u8 version, u8 kind, u8 dim, u8 reserved,
/// u32 n, u32 N, u32 nx, ny, nz, nt, f64 gamma, f64 contrast, u64 seed,
/// u32 length + generator name, then the operator basis (N packed blocks) or
/// the edge list (N x (u32 source, u32 sink, f64 weight)), then the rho0 and
/// rho1 payloads (spatial cells x block size f64 each).
struct ProblemFile {
  ProblemKind kind = ProblemKind::kMatrix;
  Grid grid;
  int n = 3;
  double gamma = 0.01;
  double contrast = 0.0;
  std::uint64_t seed = 0;
  std::string generator;
  std::vector<SymBlock> basis;  // matrix kind
  Graph graph;                  // vector kind
  std::vector<double> rho0;
  std::vector<double> rho1;

  int block_size() const { return kind == ProblemKind::kMatrix ? packed_size(n) : n; }
  int basis_count() const {
    return kind == ProblemKind::kMatrix ? static_cast<int>(basis.size()) : graph.edge_count();
  }
};

inline constexpr std::uint8_t kProblemFormatVersion = 1;

void write_problem(std::ostream& out, const ProblemFile& problem);
/// Throws kFormatError on malformed input.
ProblemFile read_problem(std::istream& in);
void save_problem(const std::string& path, const ProblemFile& problem);
/// Reads and re-verifies the marginals (positivity, unit mass).
ProblemFile load_problem(const std::string& path);
void validate_problem(const ProblemFile& problem);

StaggeredField marginal_field(const ProblemFile& problem, const std::vector<double>& values);
MatrixProblem to_matrix_problem(const ProblemFile& problem);
VectorProblem to_vector_problem(const ProblemFile& problem);
/// Builds the model, validating marginals and the kernel assumption.
std::unique_ptr<TransportModel> make_model(const ProblemFile& problem);

/// Binary solution archive: "MOMS", u8 version, 3 reserved bytes, the embedded
/// problem, u8 converged, f64 distance2, then w and lambda as u64 length + f64 values.
struct SolutionArchive {
  ProblemFile problem;
  bool converged = false;
  double distance2 = 0.0;
  Eigen::VectorXd w;
  Eigen::VectorXd lambda;
};

void save_solution(const std::string& path, const SolutionArchive& archive);
SolutionArchive load_solution(const std::string& path);

}  // namespace momt
