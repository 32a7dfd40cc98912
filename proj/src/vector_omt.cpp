#include "momt/vector_omt.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "momt/error.hpp"
#include "parallel.hpp"

namespace momt {

namespace {

constexpr double kDensityGuard = 1e-300;

double reciprocal(double v) {
  if (!(v > kDensityGuard)) throw Error(ErrorCode::kNonPositiveDensity, "density entry is not positive");
  return 1.0 / v;
}

}  // namespace

Graph Graph::complete3() {
  Graph g;
  g.nodes = 3;
  g.edges = {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}};
  return g;
}

Graph Graph::single() {
  Graph g;
  g.nodes = 1;
  return g;
}

Eigen::MatrixXd Graph::incidence() const { return source_part() - sink_part(); }

Eigen::MatrixXd Graph::source_part() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nodes, edge_count());
  for (int e = 0; e < edge_count(); ++e) d(edges[e].source, e) = 1.0;
  return d;
}

Eigen::MatrixXd Graph::sink_part() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nodes, edge_count());
  for (int e = 0; e < edge_count(); ++e) d(edges[e].sink, e) = 1.0;
  return d;
}

int Graph::laplacian_nullity() const {
  Eigen::VectorXd w(edge_count());
  for (int e = 0; e < edge_count(); ++e) w(e) = edges[e].weight;
  const Eigen::MatrixXd d = incidence();
  const Eigen::MatrixXd lap = d * w.asDiagonal() * d.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  int nullity = 0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
    if (std::abs(eig.eigenvalues()(i)) <= 1e-10 * scale) ++nullity;
  return nullity;
}

Eigen::VectorXd graph_grad(const Graph& graph, const Eigen::VectorXd& x) {
  if (x.size() != graph.nodes) throw Error(ErrorCode::kShapeMismatch, "node vector has wrong length");
  Eigen::VectorXd y(graph.edge_count());
  for (int e = 0; e < graph.edge_count(); ++e) {
    const auto& edge = graph.edges[e];
    y(e) = std::sqrt(edge.weight) * (x(edge.source) - x(edge.sink));
  }
  return y;
}

Eigen::VectorXd graph_div(const Graph& graph, const Eigen::VectorXd& y) {
  if (y.size() != graph.edge_count()) throw Error(ErrorCode::kShapeMismatch, "edge vector has wrong length");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(graph.nodes);
  for (int e = 0; e < graph.edge_count(); ++e) {
    const auto& edge = graph.edges[e];
    const double v = std::sqrt(edge.weight) * y(e);
    x(edge.source) += v;
    x(edge.sink) -= v;
  }
  return x;
}

void validate_marginals(const VectorProblem& problem) {
  const Graph& graph = problem.graph;
  if (graph.nodes < 1) throw Error(ErrorCode::kInvalidArgument, "graph needs at least one node");
  for (const auto& e : graph.edges) {
    if (e.source < 0 || e.sink < 0 || e.source >= graph.nodes || e.sink >= graph.nodes || e.source == e.sink) {
      throw Error(ErrorCode::kInvalidArgument, "edge endpoints are invalid");
    }
    if (!(e.weight > 0.0)) throw Error(ErrorCode::kInvalidArgument, "edge weights must be positive");
  }
  if (graph.laplacian_nullity() != 1) throw Error(ErrorCode::kInvalidArgument, "graph is not connected");
  if (!(problem.gamma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be positive");
  const Grid& g = problem.grid;
  for (const StaggeredField* marginal : {&problem.rho0, &problem.rho1}) {
    if (marginal->kind() != FieldKind::kSpatialCell || marginal->format() != BlockFormat::kVector ||
        marginal->n() != graph.nodes || marginal->grid().dim != g.dim ||
        marginal->grid().extent != g.extent) {
      throw Error(ErrorCode::kShapeMismatch, "marginal does not match the problem grid");
    }
    double mass = 0.0;
    for (double v : marginal->values()) {
      if (!(v > 0.0)) throw Error(ErrorCode::kNonPositiveDensity, "marginal entry is not positive");
      mass += v;
    }
    mass *= g.cell_volume();
    if (std::abs(mass - 1.0) > 1e-12) {
      throw Error(ErrorCode::kInvalidArgument, "marginal does not have unit mass");
    }
  }
}

struct VectorOmt::Averages {
  std::vector<double> rho_inv;  // per time face and node
  std::vector<double> q;        // per cell and node: A2(1/rho) + a
  std::vector<double> e;        // per cell and edge: A2(1/rho_sink + 1/rho_source) + c
  std::vector<double> z;        // per cell and node: sum_a A1(p_a^2)
};

VectorOmt::VectorOmt(VectorProblem problem) : problem_(std::move(problem)) {
  validate_marginals(problem_);
  const Grid& g = grid();
  const int n = this->n();
  const int ne = edges();
  for (const auto& e : problem_.graph.edges) sqrt_weight_.push_back(std::sqrt(e.weight));

  std::size_t offset = 0;
  for (int a = 0; a < 3; ++a) {
    p_offset_[a] = offset;
    offset += g.space_faces(a) * n;
  }
  rho_offset_ = offset;
  offset += g.time_faces() * n;
  u_offset_ = offset;
  offset += g.cells() * ne;
  primal_size_ = offset;

  boundary_node_.assign(g.cells() * n, 0.0);
  boundary_edge_.assign(g.cells() * ne, 0.0);
  rhs_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dual_size()));
  const std::size_t spatial = g.spatial_cells();
  for (std::size_t i = 0; i < spatial; ++i) {
    const std::size_t first = i;
    const std::size_t last = g.cell_index(0, 0, 0, g.nt - 1) + i;
    const auto r0 = problem_.rho0.block(i);
    const auto r1 = problem_.rho1.block(i);
    for (int k = 0; k < n; ++k) {
      boundary_node_[first * n + k] += 0.5 / r0[k];
      boundary_node_[last * n + k] += 0.5 / r1[k];
      rhs_[first * n + k] += r0[k] / g.ht();
      rhs_[last * n + k] -= r1[k] / g.ht();
    }
    for (int e = 0; e < ne; ++e) {
      const auto& edge = problem_.graph.edges[e];
      boundary_edge_[first * ne + e] += 0.5 / r0[edge.sink] + 0.5 / r0[edge.source];
      boundary_edge_[last * ne + e] += 0.5 / r1[edge.sink] + 0.5 / r1[edge.source];
    }
  }
  constraint_ = build_constraint_matrix();

  // The graph is connected, so only constant multipliers are annihilated.
  const auto duals = static_cast<Eigen::Index>(dual_size());
  dual_kernel_ = Eigen::MatrixXd::Constant(duals, 1, 1.0 / std::sqrt(static_cast<double>(duals)));
}

void VectorOmt::add_d1(int axis, std::span<const double> p, std::span<double> out) const {
  const Grid& g = grid();
  const int n = this->n();
  const double inv_h = 1.0 / g.h(axis);
  detail::parallel_for(g.cells(), [&](std::size_t cell) {
    const auto pos = g.cell_position(cell);
    double* o = out.data() + cell * n;
    if (pos.x[axis] + 1 < g.extent[axis]) {
      const double* r = p.data() + g.face_index(axis, pos.x, pos.t) * n;
      for (int k = 0; k < n; ++k) o[k] += inv_h * r[k];
    }
    if (pos.x[axis] >= 1) {
      auto left = pos.x;
      left[axis] -= 1;
      const double* l = p.data() + g.face_index(axis, left, pos.t) * n;
      for (int k = 0; k < n; ++k) o[k] -= inv_h * l[k];
    }
  });
}

void VectorOmt::add_d1_adjoint(int axis, std::span<const double> lambda, std::span<double> p_out) const {
  const Grid& g = grid();
  const int n = this->n();
  const double inv_h = 1.0 / g.h(axis);
  detail::parallel_for(g.space_faces(axis), [&](std::size_t face) {
    const auto pos = g.face_position(axis, face);
    auto right = pos.x;
    right[axis] += 1;
    const double* l = lambda.data() + g.cell_index(pos.x[0], pos.x[1], pos.x[2], pos.t) * n;
    const double* r = lambda.data() + g.cell_index(right[0], right[1], right[2], pos.t) * n;
    double* o = p_out.data() + face * n;
    for (int k = 0; k < n; ++k) o[k] += inv_h * (l[k] - r[k]);
  });
}

void VectorOmt::add_d2(std::span<const double> rho, std::span<double> out) const {
  const Grid& g = grid();
  const int n = this->n();
  const double inv_ht = 1.0 / g.ht();
  const std::size_t spatial = g.spatial_cells();
  detail::parallel_for(g.cells(), [&](std::size_t cell) {
    const std::size_t sp = cell % spatial;
    const int t = static_cast<int>(cell / spatial);
    double* o = out.data() + cell * n;
    if (t + 1 < g.nt) {
      const double* r = rho.data() + g.time_face_index(sp, t) * n;
      for (int k = 0; k < n; ++k) o[k] += inv_ht * r[k];
    }
    if (t >= 1) {
      const double* r = rho.data() + g.time_face_index(sp, t - 1) * n;
      for (int k = 0; k < n; ++k) o[k] -= inv_ht * r[k];
    }
  });
}

void VectorOmt::add_d2_adjoint(std::span<const double> lambda, std::span<double> rho_out) const {
  const Grid& g = grid();
  const int n = this->n();
  const double inv_ht = 1.0 / g.ht();
  detail::parallel_for(g.time_faces(), [&](std::size_t face) {
    // Time face f sits between cells `face` and `face + spatial` in time-major numbering.
    const double* before = lambda.data() + face * n;
    const double* after = lambda.data() + (face + g.spatial_cells()) * n;
    double* o = rho_out.data() + face * n;
    for (int k = 0; k < n; ++k) o[k] += inv_ht * (before[k] - after[k]);
  });
}

void VectorOmt::add_d3(std::span<const double> u, std::span<double> out) const {
  const int n = this->n();
  const int ne = edges();
  const auto& es = problem_.graph.edges;
  detail::parallel_for(grid().cells(), [&](std::size_t cell) {
    const double* uc = u.data() + cell * ne;
    double* o = out.data() + cell * n;
    for (int e = 0; e < ne; ++e) {
      const double v = sqrt_weight_[e] * uc[e];
      o[es[e].source] -= v;
      o[es[e].sink] += v;
    }
  });
}

void VectorOmt::add_d3_adjoint(std::span<const double> lambda, std::span<double> u_out) const {
  const int n = this->n();
  const int ne = edges();
  const auto& es = problem_.graph.edges;
  detail::parallel_for(grid().cells(), [&](std::size_t cell) {
    const double* l = lambda.data() + cell * n;
    double* o = u_out.data() + cell * ne;
    for (int e = 0; e < ne; ++e) o[e] -= sqrt_weight_[e] * (l[es[e].source] - l[es[e].sink]);
  });
}

Eigen::VectorXd VectorOmt::apply_constraint(const Eigen::VectorXd& w) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dual_size()));
  std::span<const double> ws(w.data(), w.size());
  std::span<double> os(out.data(), out.size());
  const Grid& g = grid();
  for (int a = 0; a < g.dim; ++a) add_d1(a, ws.subspan(p_offset_[a], g.space_faces(a) * n()), os);
  add_d2(ws.subspan(rho_offset_, u_offset_ - rho_offset_), os);
  add_d3(ws.subspan(u_offset_), os);
  return out;
}

Eigen::VectorXd VectorOmt::apply_constraint_adjoint(const Eigen::VectorXd& lambda) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(primal_size_));
  std::span<const double> ls(lambda.data(), lambda.size());
  std::span<double> os(out.data(), out.size());
  const Grid& g = grid();
  for (int a = 0; a < g.dim; ++a) add_d1_adjoint(a, ls, os.subspan(p_offset_[a], g.space_faces(a) * n()));
  add_d2_adjoint(ls, os.subspan(rho_offset_, u_offset_ - rho_offset_));
  add_d3_adjoint(ls, os.subspan(u_offset_));
  return out;
}

VectorOmt::Averages VectorOmt::averages(const Eigen::VectorXd& w) const {
  const Grid& g = grid();
  const int n = this->n();
  const int ne = edges();
  const auto& es = problem_.graph.edges;
  const std::size_t spatial = g.spatial_cells();
  Averages avg;
  avg.rho_inv.resize(g.time_faces() * n);
  detail::parallel_for(g.time_faces() * n, [&](std::size_t i) {
    avg.rho_inv[i] = reciprocal(w[rho_offset_ + i]);
  });

  avg.q.resize(g.cells() * n);
  avg.e.resize(g.cells() * ne);
  avg.z.assign(g.cells() * n, 0.0);
  detail::parallel_for(g.cells(), [&](std::size_t cell) {
    const auto pos = g.cell_position(cell);
    const std::size_t sp = cell % spatial;
    double* q = avg.q.data() + cell * n;
    for (int k = 0; k < n; ++k) q[k] = boundary_node_[cell * n + k];
    double* e = avg.e.data() + cell * ne;
    for (int j = 0; j < ne; ++j) e[j] = boundary_edge_[cell * ne + j];
    for (int side = 0; side < 2; ++side) {
      const int tf = pos.t - 1 + side;
      if (tf < 0 || tf + 1 >= g.nt) continue;
      const double* ri = avg.rho_inv.data() + g.time_face_index(sp, tf) * n;
      for (int k = 0; k < n; ++k) q[k] += 0.5 * ri[k];
      for (int j = 0; j < ne; ++j) e[j] += 0.5 * (ri[es[j].sink] + ri[es[j].source]);
    }
    double* z = avg.z.data() + cell * n;
    for (int a = 0; a < g.dim; ++a) {
      if (pos.x[a] + 1 < g.extent[a]) {
        const double* p = w.data() + p_offset_[a] + g.face_index(a, pos.x, pos.t) * n;
        for (int k = 0; k < n; ++k) z[k] += 0.5 * p[k] * p[k];
      }
      if (pos.x[a] >= 1) {
        auto left = pos.x;
        left[a] -= 1;
        const double* p = w.data() + p_offset_[a] + g.face_index(a, left, pos.t) * n;
        for (int k = 0; k < n; ++k) z[k] += 0.5 * p[k] * p[k];
      }
    }
  });
  return avg;
}

double VectorOmt::cost(const Eigen::VectorXd& w) const {
  const Averages avg = averages(w);
  const Grid& g = grid();
  const int n = this->n();
  const int ne = edges();
  std::vector<double> per_cell(g.cells());
  detail::parallel_for(g.cells(), [&](std::size_t cell) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += avg.z[cell * n + k] * avg.q[cell * n + k];
    for (int j = 0; j < ne; ++j) {
      const double u = w[u_offset_ + cell * ne + j];
      s += problem_.gamma * u * u * avg.e[cell * ne + j];
    }
    per_cell[cell] = s;
  });
  double sum = 0.0;
  for (double v : per_cell) sum += v;
  return sum * g.cell_volume() * g.ht();
}

KktResidual VectorOmt::kkt_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& lambda) const {
  if (static_cast<std::size_t>(w.size()) != primal_size_ ||
      static_cast<std::size_t>(lambda.size()) != dual_size()) {
    throw Error(ErrorCode::kShapeMismatch, "state does not match the problem layout");
  }
  const Averages avg = averages(w);
  const Grid& g = grid();
  const int n = this->n();
  const int ne = edges();
  const auto& es = problem_.graph.edges;
  const double gamma = problem_.gamma;
  const std::size_t spatial = g.spatial_cells();

  KktResidual r;
  r.primal = apply_constraint_adjoint(lambda);
  r.dual = apply_constraint(w) - rhs_;

  for (int a = 0; a < g.dim; ++a) {
    detail::parallel_for(g.space_faces(a), [&](std::size_t f) {
      const auto pos = g.face_position(a, f);
      auto right = pos.x;
      right[a] += 1;
      const double* ql = avg.q.data() + g.cell_index(pos.x[0], pos.x[1], pos.x[2], pos.t) * n;
      const double* qr = avg.q.data() + g.cell_index(right[0], right[1], right[2], pos.t) * n;
      const std::size_t off = p_offset_[a] + f * n;
      for (int k = 0; k < n; ++k) r.primal[off + k] += w[off + k] * (ql[k] + qr[k]);
    });
  }

  detail::parallel_for(g.time_faces(), [&](std::size_t f) {
    const std::size_t sp = f % spatial;
    const int tf = static_cast<int>(f / spatial);
    const std::size_t before = g.time_face_index(sp, tf);
    const std::size_t after = g.time_face_index(sp, tf + 1);
    const double* ri = avg.rho_inv.data() + f * n;
    double* o = r.primal.data() + rho_offset_ + f * n;
    for (int k = 0; k < n; ++k) {
      const double c = 0.5 * (avg.z[before * n + k] + avg.z[after * n + k]);
      o[k] -= c * ri[k] * ri[k];
    }
    for (int j = 0; j < ne; ++j) {
      const double ub = w[u_offset_ + before * ne + j];
      const double ua = w[u_offset_ + after * ne + j];
      const double uu = 0.5 * (ub * ub + ua * ua);
      o[es[j].sink] -= gamma * uu * ri[es[j].sink] * ri[es[j].sink];
      o[es[j].source] -= gamma * uu * ri[es[j].source] * ri[es[j].source];
    }
  });

  detail::parallel_for(g.cells() * ne, [&](std::size_t i) {
    r.primal[u_offset_ + i] += 2.0 * gamma * w[u_offset_ + i] * avg.e[i];
  });
  return r;
}

HessianApprox VectorOmt::hessian(const Eigen::VectorXd& w, const ShiftPolicy& policy) const {
  const Averages avg = averages(w);
  const Grid& g = grid();
  const int n = this->n();
  const int ne = edges();
  const auto& es = problem_.graph.edges;
  const double gamma = problem_.gamma;
  const std::size_t spatial = g.spatial_cells();

  HessianApprox h;
  std::array<std::size_t, 3> p_base{};
  for (int a = 0; a < g.dim; ++a) {
    p_base[a] = h.blocks.block_count();
    for (std::size_t f = 0; f < g.space_faces(a); ++f) h.blocks.add_block(n);
  }
  const std::size_t rho_base = h.blocks.block_count();
  for (std::size_t f = 0; f < g.time_faces(); ++f) h.blocks.add_block(n);
  const std::size_t u_base = h.blocks.block_count();
  if (ne > 0) {
    for (std::size_t c = 0; c < g.cells(); ++c) h.blocks.add_block(ne);
  }

  for (int a = 0; a < g.dim; ++a) {
    detail::parallel_for(g.space_faces(a), [&](std::size_t f) {
      const auto pos = g.face_position(a, f);
      auto right = pos.x;
      right[a] += 1;
      const double* ql = avg.q.data() + g.cell_index(pos.x[0], pos.x[1], pos.x[2], pos.t) * n;
      const double* qr = avg.q.data() + g.cell_index(right[0], right[1], right[2], pos.t) * n;
      auto vals = h.blocks.values(p_base[a] + f);
      auto inv = h.blocks.inverse_values(p_base[a] + f);
      for (int k = 0; k < n; ++k) {
        vals[k * n + k] = ql[k] + qr[k];
        inv[k * n + k] = 1.0 / vals[k * n + k];
      }
    });
  }

  std::vector<double> diag_sums(g.time_faces(), 0.0);
  detail::parallel_for(g.time_faces(), [&](std::size_t f) {
    const std::size_t sp = f % spatial;
    const int tf = static_cast<int>(f / spatial);
    const std::size_t before = g.time_face_index(sp, tf);
    const std::size_t after = g.time_face_index(sp, tf + 1);
    const double* ri = avg.rho_inv.data() + f * n;
    auto vals = h.blocks.values(rho_base + f);
    for (int k = 0; k < n; ++k) {
      const double c = 0.5 * (avg.z[before * n + k] + avg.z[after * n + k]);
      vals[k * n + k] = 2.0 * c * ri[k] * ri[k] * ri[k];
    }
    for (int j = 0; j < ne; ++j) {
      const double ub = w[u_offset_ + before * ne + j];
      const double ua = w[u_offset_ + after * ne + j];
      const double uu = 0.5 * (ub * ub + ua * ua);
      for (int node : {es[j].sink, es[j].source}) {
        vals[node * n + node] += 2.0 * gamma * uu * ri[node] * ri[node] * ri[node];
      }
    }
    for (int k = 0; k < n; ++k) diag_sums[f] += vals[k * n + k];
  });
  double total = 0.0;
  for (double v : diag_sums) total += v;
  const double mean_diag = g.time_faces() > 0 ? total / (static_cast<double>(g.time_faces()) * n) : 0.0;
  h.shift = std::max(policy.floor, policy.relative * mean_diag);
  detail::parallel_for(g.time_faces(), [&](std::size_t f) {
    auto vals = h.blocks.values(rho_base + f);
    auto inv = h.blocks.inverse_values(rho_base + f);
    for (int k = 0; k < n; ++k) {
      vals[k * n + k] += h.shift;
      inv[k * n + k] = 1.0 / vals[k * n + k];
    }
  });

  if (ne > 0) {
    detail::parallel_for(g.cells(), [&](std::size_t cell) {
      auto vals = h.blocks.values(u_base + cell);
      auto inv = h.blocks.inverse_values(u_base + cell);
      for (int j = 0; j < ne; ++j) {
        vals[j * ne + j] = 2.0 * gamma * avg.e[cell * ne + j];
        inv[j * ne + j] = 1.0 / vals[j * ne + j];
      }
    });
  }
  return h;
}

bool VectorOmt::is_positive(const Eigen::VectorXd& w) const {
  for (std::size_t i = rho_offset_; i < u_offset_; ++i)
    if (!(w[i] > 0.0)) return false;
  return true;
}

Eigen::VectorXd VectorOmt::initial_primal() const {
  const Grid& g = grid();
  const int n = this->n();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(primal_size_));
  const std::size_t spatial = g.spatial_cells();
  for (std::size_t f = 0; f < g.time_faces(); ++f) {
    const std::size_t sp = f % spatial;
    const double theta = static_cast<double>(f / spatial + 1) / g.nt;
    const auto r0 = problem_.rho0.block(sp);
    const auto r1 = problem_.rho1.block(sp);
    for (int k = 0; k < n; ++k) w[rho_offset_ + f * n + k] = (1.0 - theta) * r0[k] + theta * r1[k];
  }
  return w;
}

std::span<const double> VectorOmt::density_at(const Eigen::VectorXd& w, std::size_t spatial, int j) const {
  if (j == 0) return problem_.rho0.block(spatial);
  if (j == grid().nt) return problem_.rho1.block(spatial);
  const std::size_t f = grid().time_face_index(spatial, j - 1);
  return {w.data() + rho_offset_ + f * n(), static_cast<std::size_t>(n())};
}

std::vector<double> VectorOmt::slice_masses(const Eigen::VectorXd& w) const {
  const Grid& g = grid();
  std::vector<double> masses;
  for (int j = 0; j <= g.nt; ++j) {
    double m = 0.0;
    for (std::size_t sp = 0; sp < g.spatial_cells(); ++sp)
      for (double v : density_at(w, sp, j)) m += v;
    masses.push_back(m * g.cell_volume());
  }
  return masses;
}

ConstraintMatrix VectorOmt::build_constraint_matrix() const {
  const Grid& g = grid();
  const int n = this->n();
  const int ne = edges();
  const auto& es = problem_.graph.edges;
  std::vector<Eigen::Triplet<double, std::ptrdiff_t>> triplets;

  for (int a = 0; a < g.dim; ++a) {
    const double inv_h = 1.0 / g.h(a);
    for (std::size_t f = 0; f < g.space_faces(a); ++f) {
      const auto pos = g.face_position(a, f);
      auto right = pos.x;
      right[a] += 1;
      const std::size_t lc = g.cell_index(pos.x[0], pos.x[1], pos.x[2], pos.t);
      const std::size_t rc = g.cell_index(right[0], right[1], right[2], pos.t);
      for (int k = 0; k < n; ++k) {
        const auto col = static_cast<std::ptrdiff_t>(p_offset_[a] + f * n + k);
        triplets.emplace_back(lc * n + k, col, inv_h);
        triplets.emplace_back(rc * n + k, col, -inv_h);
      }
    }
  }
  const double inv_ht = 1.0 / g.ht();
  for (std::size_t f = 0; f < g.time_faces(); ++f) {
    for (int k = 0; k < n; ++k) {
      const auto col = static_cast<std::ptrdiff_t>(rho_offset_ + f * n + k);
      triplets.emplace_back(f * n + k, col, inv_ht);
      triplets.emplace_back((f + g.spatial_cells()) * n + k, col, -inv_ht);
    }
  }
  for (std::size_t cell = 0; cell < g.cells(); ++cell) {
    for (int j = 0; j < ne; ++j) {
      const auto col = static_cast<std::ptrdiff_t>(u_offset_ + cell * ne + j);
      triplets.emplace_back(cell * n + es[j].source, col, -sqrt_weight_[j]);
      triplets.emplace_back(cell * n + es[j].sink, col, sqrt_weight_[j]);
    }
  }
  ConstraintMatrix d(static_cast<std::ptrdiff_t>(dual_size()), static_cast<std::ptrdiff_t>(primal_size_));
  d.setFromTriplets(triplets.begin(), triplets.end());
  d.makeCompressed();
  return d;
}

}  // namespace momt
