#pragma once

#include <vector>

#include "momt/block_algebra.hpp"
#include "momt/grid.hpp"
#include "momt/model.hpp"

namespace momt {

/// Symmetric generators L_1..L_N of the commutator gradient X -> (L_k X - X L_k)_k.
struct OperatorBasis {
  int n = 0;
  std::vector<SymBlock> elements;

  /// The N = 2 pair: L1 with ones in its first row and column, L2 = diag(1, ..., n-1, 0).
  static OperatorBasis standard(int n);
  int size() const { return static_cast<int>(elements.size()); }
};

using BlockColumn = std::vector<GenBlock>;

/// (L_k X - X L_k)_k; every output block is skew for symmetric X.
BlockColumn grad_L(const OperatorBasis& basis, const SymBlock& x);

/// Symmetric part of sum_k (L_k Y_k - Y_k L_k), the adjoint of grad_L under
/// the trace inner product. Exact for skew inputs.
SymBlock div_L(const OperatorBasis& basis, const BlockColumn& y);

/// Nullity of grad_L restricted to symmetric matrices, from the singular
/// values of its matrix on an orthonormal symmetric basis.
int verify_kernel(const OperatorBasis& basis);

struct MatrixProblem {
  OperatorBasis basis;
  Grid grid;
  double gamma = 0.01;
  StaggeredField rho0;  // kSpatialCell, packed symmetric
  StaggeredField rho1;
};

/// Checks the marginals: dimensions, eigenvalue floor and unit trace mass.
void validate_marginals(const MatrixProblem& problem);

/// Matrix-valued transport on a staggered grid in 1, 2 or 3 space dimensions.
///
/// Primal layout: [p_x | p_y | p_z | rho | u]. Momentum blocks p are general
/// n x n (n*n row-major coordinates per face), rho uses orthonormal symmetric
/// coordinates per interior time face and u stores N general blocks per cell.
/// The multiplier lambda lives at cell centers in symmetric coordinates.
class MatrixOmt final : public TransportModel {
 public:
  explicit MatrixOmt(MatrixProblem problem);

  const MatrixProblem& problem() const { return problem_; }
  int n() const { return problem_.basis.n; }
  int sym_size() const { return packed_size(n()); }

  const Grid& grid() const override { return problem_.grid; }
  std::size_t primal_size() const override { return primal_size_; }
  std::size_t dual_size() const override { return grid().cells() * sym_size(); }
  int dual_block_size() const override { return sym_size(); }

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

  // Individual constraint operators, acting on one primal segment.
  void add_d1(int axis, std::span<const double> p, std::span<double> out) const;
  void add_d1_adjoint(int axis, std::span<const double> lambda, std::span<double> p_out) const;
  void add_d2(std::span<const double> rho, std::span<double> out) const;
  void add_d2_adjoint(std::span<const double> lambda, std::span<double> rho_out) const;
  void add_d3(std::span<const double> u, std::span<double> out) const;
  void add_d3_adjoint(std::span<const double> lambda, std::span<double> u_out) const;

  /// a: half the inverse marginals on the first and last time cells, zero elsewhere.
  const std::vector<SymBlock>& boundary_inverse() const { return boundary_inverse_; }

  /// Density at time face j = 0..nt (marginals at both ends).
  SymBlock density_at(const Eigen::VectorXd& w, std::size_t spatial, int j) const;

 private:
  struct Averages;
  Averages averages(const Eigen::VectorXd& w) const;
  ConstraintMatrix build_constraint_matrix() const;
  void d3_cell(const double* u, double* out) const;
  void d3_adjoint_cell(const double* lambda, double* u_out) const;

  MatrixProblem problem_;
  std::vector<GenBlock> basis_full_;
  std::array<std::size_t, 3> p_offset_{};
  std::size_t rho_offset_ = 0;
  std::size_t u_offset_ = 0;
  std::size_t primal_size_ = 0;
  std::vector<SymBlock> rho0_inv_;
  std::vector<SymBlock> rho1_inv_;
  std::vector<SymBlock> boundary_inverse_;
  Eigen::VectorXd rhs_;
  ConstraintMatrix constraint_;
  Eigen::MatrixXd dual_kernel_;
};

}  // namespace momt
