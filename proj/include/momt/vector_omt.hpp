#pragma once

#include <vector>

#include "momt/grid.hpp"
#include "momt/model.hpp"

namespace momt {

/// Undirected weighted graph; each edge is oriented from `source` to `sink`
/// only to fix the sign convention of the incidence matrix.
struct Graph {
  struct Edge {
    int source;
    int sink;
    double weight = 1.0;
  };
  int nodes = 0;
  std::vector<Edge> edges;

  /// K3 with unit weights and edges (0,1), (0,2), (1,2).
  static Graph complete3();
  /// A single node and no edges.
  static Graph single();

  int edge_count() const { return static_cast<int>(edges.size()); }
  Eigen::MatrixXd incidence() const;
  Eigen::MatrixXd source_part() const;
  Eigen::MatrixXd sink_part() const;
  /// Nullity of the weighted Laplacian; 1 for a connected graph.
  int laplacian_nullity() const;
};

/// W^{1/2} D^T x.
Eigen::VectorXd graph_grad(const Graph& graph, const Eigen::VectorXd& x);
/// D W^{1/2} y.
Eigen::VectorXd graph_div(const Graph& graph, const Eigen::VectorXd& y);

struct VectorProblem {
  Graph graph;
  Grid grid;
  double gamma = 0.01;
  StaggeredField rho0;  // kSpatialCell, kVector with n = graph.nodes
  StaggeredField rho1;
};

void validate_marginals(const VectorProblem& problem);

/// Vector-valued transport on a staggered grid in 1, 2 or 3 space dimensions.
///
/// Primal layout: [p_x | p_y | p_z | rho | u] with n values per space face,
/// n per interior time face and one value per edge at each cell. The
/// multiplier has n values per cell.
class VectorOmt final : public TransportModel {
 public:
  explicit VectorOmt(VectorProblem problem);

  const VectorProblem& problem() const { return problem_; }
  int n() const { return problem_.graph.nodes; }
  int edges() const { return problem_.graph.edge_count(); }

  const Grid& grid() const override { return problem_.grid; }
  std::size_t primal_size() const override { return primal_size_; }
  std::size_t dual_size() const override { return grid().cells() * n(); }
  int dual_block_size() const override { return n(); }

  const ConstraintMatrix& constraint_matrix() const override { return constraint_; }
  const Eigen::VectorXd& constraint_rhs() const override { return rhs_; }
  Eigen::VectorXd apply_constraint(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd apply_constraint_adjoint(const Eigen::VectorXd& lambda) const override;
  Eigen::MatrixXd dual_kernel() const override { return dual_kernel_; }

  double cost(const Eigen::VectorXd& w) const override;
  KktResidual kkt_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& lambda) const override;
  HessianApprox hessian(const Eigen::VectorXd& w, const ShiftPolicy& policy) const override;

  bool is_positive(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd initial_primal() const override;
  std::vector<double> slice_masses(const Eigen::VectorXd& w) const override;
  std::pair<std::size_t, std::size_t> density_range() const override {
    return {rho_offset_, u_offset_};
  }

  std::size_t p_offset(int axis) const { return p_offset_[axis]; }
  std::size_t rho_offset() const { return rho_offset_; }
  std::size_t u_offset() const { return u_offset_; }

  void add_d1(int axis, std::span<const double> p, std::span<double> out) const;
  void add_d1_adjoint(int axis, std::span<const double> lambda, std::span<double> p_out) const;
  void add_d2(std::span<const double> rho, std::span<double> out) const;
  void add_d2_adjoint(std::span<const double> lambda, std::span<double> rho_out) const;
  void add_d3(std::span<const double> u, std::span<double> out) const;
  void add_d3_adjoint(std::span<const double> lambda, std::span<double> u_out) const;

  /// Density at time face j = 0..nt (marginals at both ends).
  std::span<const double> density_at(const Eigen::VectorXd& w, std::size_t spatial, int j) const;

 private:
  struct Averages;
  Averages averages(const Eigen::VectorXd& w) const;
  ConstraintMatrix build_constraint_matrix() const;

  VectorProblem problem_;
  std::vector<double> sqrt_weight_;
  std::array<std::size_t, 3> p_offset_{};
  std::size_t rho_offset_ = 0;
  std::size_t u_offset_ = 0;
  std::size_t primal_size_ = 0;
  std::vector<double> boundary_node_;  // a, per cell and node
  std::vector<double> boundary_edge_;  // c, per cell and edge
  Eigen::VectorXd rhs_;
  ConstraintMatrix constraint_;
  Eigen::MatrixXd dual_kernel_;
};

}  // namespace momt
