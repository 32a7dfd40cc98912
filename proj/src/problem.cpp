#include "momt/problem.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "momt/error.hpp"

namespace momt {

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw Error(ErrorCode::kFormatError, "unexpected end of file");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void expect_magic(std::istream& in, const char* magic) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
    throw Error(ErrorCode::kFormatError, std::string("missing ") + magic + " header");
  }
}

constexpr std::uint32_t kMaxExtent = 1u << 16;
constexpr std::uint32_t kMaxName = 1u << 12;

}  // namespace

void write_problem(std::ostream& out, const ProblemFile& p) {
  const std::size_t spatial = p.grid.spatial_cells();
  const std::size_t payload = spatial * static_cast<std::size_t>(p.block_size());
  if (p.rho0.size() != payload || p.rho1.size() != payload) {
    throw Error(ErrorCode::kShapeMismatch, "marginal payload does not match the grid");
  }
  out.write("MOMT", 4);
  put<std::uint8_t>(out, kProblemFormatVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(p.kind));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(p.grid.dim));
  put<std::uint8_t>(out, 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.n));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.basis_count()));
  for (int a = 0; a < 3; ++a) put<std::uint32_t>(out, static_cast<std::uint32_t>(p.grid.extent[a]));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.grid.nt));
  put<double>(out, p.gamma);
  put<double>(out, p.contrast);
  put<std::uint64_t>(out, p.seed);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.generator.size()));
  out.write(p.generator.data(), static_cast<std::streamsize>(p.generator.size()));
  if (p.kind == ProblemKind::kMatrix) {
    for (const auto& b : p.basis) {
      if (b.dim() != p.n) throw Error(ErrorCode::kShapeMismatch, "basis element has wrong dimension");
      for (double v : b.packed()) put<double>(out, v);
    }
  } else {
    for (const auto& e : p.graph.edges) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(e.source));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(e.sink));
      put<double>(out, e.weight);
    }
  }
  for (double v : p.rho0) put<double>(out, v);
  for (double v : p.rho1) put<double>(out, v);
  if (!out) throw Error(ErrorCode::kIoError, "failed to write problem");
}

namespace {

ProblemFile read_problem_body(std::istream& in, bool require_end) {
  expect_magic(in, "MOMT");
  ProblemFile p;
  if (get<std::uint8_t>(in) != kProblemFormatVersion) throw Error(ErrorCode::kFormatError, "unsupported version");
  const auto kind = get<std::uint8_t>(in);
  if (kind > 1) throw Error(ErrorCode::kFormatError, "unknown problem kind");
  p.kind = static_cast<ProblemKind>(kind);
  const int dim = get<std::uint8_t>(in);
  get<std::uint8_t>(in);
  const auto n = get<std::uint32_t>(in);
  const auto count = get<std::uint32_t>(in);
  std::array<int, 3> extent{};
  for (int a = 0; a < 3; ++a) {
    const auto e = get<std::uint32_t>(in);
    if (e == 0 || e > kMaxExtent) throw Error(ErrorCode::kFormatError, "grid extent out of range");
    extent[a] = static_cast<int>(e);
  }
  const auto nt = get<std::uint32_t>(in);
  if (nt == 0 || nt > kMaxExtent) throw Error(ErrorCode::kFormatError, "time extent out of range");
  if (dim < 1 || dim > 3) throw Error(ErrorCode::kFormatError, "spatial dimension out of range");
  for (int a = dim; a < 3; ++a) {
    if (extent[a] != 1) throw Error(ErrorCode::kFormatError, "unused grid axis must have extent 1");
  }
  p.grid = Grid::make(dim, extent, static_cast<int>(nt));
  if (n < 1 || (p.kind == ProblemKind::kMatrix && n > kMaxBlockDim) || n > 1024) {
    throw Error(ErrorCode::kFormatError, "block dimension out of range");
  }
  p.n = static_cast<int>(n);
  p.gamma = get<double>(in);
  p.contrast = get<double>(in);
  p.seed = get<std::uint64_t>(in);
  const auto name_len = get<std::uint32_t>(in);
  if (name_len > kMaxName) throw Error(ErrorCode::kFormatError, "generator name too long");
  p.generator.resize(name_len);
  if (name_len > 0 && !in.read(p.generator.data(), name_len)) {
    throw Error(ErrorCode::kFormatError, "unexpected end of file");
  }
  if (p.kind == ProblemKind::kMatrix) {
    if (count > 64) throw Error(ErrorCode::kFormatError, "too many basis elements");
    for (std::uint32_t k = 0; k < count; ++k) {
      SymBlock b(p.n);
      for (auto& v : b.packed()) v = get<double>(in);
      p.basis.push_back(b);
    }
  } else {
    if (count > n * n) throw Error(ErrorCode::kFormatError, "too many edges");
    p.graph.nodes = p.n;
    for (std::uint32_t k = 0; k < count; ++k) {
      Graph::Edge e;
      e.source = static_cast<int>(get<std::uint32_t>(in));
      e.sink = static_cast<int>(get<std::uint32_t>(in));
      e.weight = get<double>(in);
      p.graph.edges.push_back(e);
    }
  }
  const std::size_t payload = p.grid.spatial_cells() * static_cast<std::size_t>(p.block_size());
  for (auto* target : {&p.rho0, &p.rho1}) {
    target->resize(payload);
    for (auto& v : *target) v = get<double>(in);
  }
  if (require_end && in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kFormatError, "trailing bytes after the marginal payload");
  }
  return p;
}

}  // namespace

ProblemFile read_problem(std::istream& in) { return read_problem_body(in, true); }

void save_problem(const std::string& path, const ProblemFile& problem) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  write_problem(out, problem);
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  ProblemFile problem = read_problem(in);
  validate_problem(problem);
  return problem;
}

void validate_problem(const ProblemFile& problem) {
  if (problem.kind == ProblemKind::kMatrix) {
    validate_marginals(to_matrix_problem(problem));
  } else {
    validate_marginals(to_vector_problem(problem));
  }
}

StaggeredField marginal_field(const ProblemFile& problem, const std::vector<double>& values) {
  const BlockFormat format =
      problem.kind == ProblemKind::kMatrix ? BlockFormat::kPackedSymmetric : BlockFormat::kVector;
  StaggeredField f(FieldKind::kSpatialCell, problem.grid, format, problem.n);
  if (f.values().size() != values.size()) throw Error(ErrorCode::kShapeMismatch, "marginal payload has wrong length");
  f.values() = values;
  return f;
}

MatrixProblem to_matrix_problem(const ProblemFile& problem) {
  if (problem.kind != ProblemKind::kMatrix) throw Error(ErrorCode::kInvalidArgument, "not a matrix problem");
  MatrixProblem m;
  m.basis.n = problem.n;
  m.basis.elements = problem.basis;
  m.grid = problem.grid;
  m.gamma = problem.gamma;
  m.rho0 = marginal_field(problem, problem.rho0);
  m.rho1 = marginal_field(problem, problem.rho1);
  return m;
}

VectorProblem to_vector_problem(const ProblemFile& problem) {
  if (problem.kind != ProblemKind::kVector) throw Error(ErrorCode::kInvalidArgument, "not a vector problem");
  VectorProblem v;
  v.graph = problem.graph;
  v.grid = problem.grid;
  v.gamma = problem.gamma;
  v.rho0 = marginal_field(problem, problem.rho0);
  v.rho1 = marginal_field(problem, problem.rho1);
  return v;
}

std::unique_ptr<TransportModel> make_model(const ProblemFile& problem) {
  if (problem.kind == ProblemKind::kMatrix) return std::make_unique<MatrixOmt>(to_matrix_problem(problem));
  return std::make_unique<VectorOmt>(to_vector_problem(problem));
}

void save_solution(const std::string& path, const SolutionArchive& archive) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  out.write("MOMS", 4);
  put<std::uint8_t>(out, kProblemFormatVersion);
  for (int i = 0; i < 3; ++i) put<std::uint8_t>(out, 0);
  write_problem(out, archive.problem);
  put<std::uint8_t>(out, archive.converged ? 1 : 0);
  put<double>(out, archive.distance2);
  for (const Eigen::VectorXd* v : {&archive.w, &archive.lambda}) {
    put<std::uint64_t>(out, static_cast<std::uint64_t>(v->size()));
    for (Eigen::Index i = 0; i < v->size(); ++i) put<double>(out, (*v)[i]);
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed to write " + path);
}

SolutionArchive load_solution(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  expect_magic(in, "MOMS");
  if (get<std::uint8_t>(in) != kProblemFormatVersion) throw Error(ErrorCode::kFormatError, "unsupported version");
  for (int i = 0; i < 3; ++i) get<std::uint8_t>(in);
  SolutionArchive a;
  a.problem = read_problem_body(in, false);
  a.converged = get<std::uint8_t>(in) != 0;
  a.distance2 = get<double>(in);
  for (Eigen::VectorXd* v : {&a.w, &a.lambda}) {
    const auto len = get<std::uint64_t>(in);
    if (len > (std::uint64_t{1} << 34)) throw Error(ErrorCode::kFormatError, "vector length out of range");
    v->resize(static_cast<Eigen::Index>(len));
    for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = get<double>(in);
  }
  return a;
}

}  // namespace momt
