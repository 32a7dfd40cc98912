#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "momt/grid.hpp"

namespace momt {

using ConstraintMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::ptrdiff_t>;

/// Symmetric block-diagonal operator over the primal coordinates, together
/// with its blockwise inverse. Blocks are dense, row-major and tile the
/// coordinate range contiguously.
class BlockDiagonal {
 public:
  struct Block {
    std::size_t offset;        // first coordinate covered
    int size;                  // number of coordinates covered
    std::size_t value_offset;  // position of the size*size values
  };

  /// Appends a block covering the next `size` coordinates; returns its index.
  std::size_t add_block(int size);

  std::size_t dim() const { return dim_; }
  std::size_t block_count() const { return blocks_.size(); }
  const Block& block(std::size_t b) const { return blocks_[b]; }

  std::span<double> values(std::size_t b) {
    return {values_.data() + blocks_[b].value_offset, square(b)};
  }
  std::span<const double> values(std::size_t b) const {
    return {values_.data() + blocks_[b].value_offset, square(b)};
  }
  std::span<double> inverse_values(std::size_t b) {
    return {inverse_.data() + blocks_[b].value_offset, square(b)};
  }
  std::span<const double> inverse_values(std::size_t b) const {
    return {inverse_.data() + blocks_[b].value_offset, square(b)};
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& x) const;

 private:
  std::size_t square(std::size_t b) const {
    return static_cast<std::size_t>(blocks_[b].size) * blocks_[b].size;
  }

  std::size_t dim_ = 0;
  std::vector<Block> blocks_;
  std::vector<double> values_;
  std::vector<double> inverse_;
};

/// Regularization added to the density block of the Hessian approximation:
/// shift = max(floor, relative * mean diagonal of the density Hessian).
struct ShiftPolicy {
  double floor = 1e-8;
  double relative = 1e-8;
};

struct HessianApprox {
  BlockDiagonal blocks;
  double shift = 0.0;
};

struct KktResidual {
  Eigen::VectorXd primal;  // gradient of the Lagrangian in the primal variables
  Eigen::VectorXd dual;    // constraint residual D w - b

  double norm() const { return std::sqrt(primal.squaredNorm() + dual.squaredNorm()); }
};

/// A discretized transport problem in the form the SQP driver consumes.
///
/// Primal and dual variables are flat coordinate vectors. Symmetric blocks use
/// orthonormal coordinates so every inner product below is a plain dot product.
/// The Lagrangian is cost(w) / (cell volume * ht) + <lambda, D w - b>.
class TransportModel {
 public:
  virtual ~TransportModel() = default;

  virtual const Grid& grid() const = 0;
  virtual std::size_t primal_size() const = 0;
  virtual std::size_t dual_size() const = 0;
  /// Coordinates of one dual entry (one cell).
  virtual int dual_block_size() const = 0;

  virtual const ConstraintMatrix& constraint_matrix() const = 0;
  virtual const Eigen::VectorXd& constraint_rhs() const = 0;
  virtual Eigen::VectorXd apply_constraint(const Eigen::VectorXd& w) const = 0;
  virtual Eigen::VectorXd apply_constraint_adjoint(const Eigen::VectorXd& lambda) const = 0;
  /// Orthonormal basis of ker D^T. D is never surjective: constant multipliers
  /// (per connected graph component in the vector case) are annihilated.
  virtual Eigen::MatrixXd dual_kernel() const = 0;

  /// Discrete transport cost including the cell-volume scaling.
  virtual double cost(const Eigen::VectorXd& w) const = 0;
  virtual KktResidual kkt_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& lambda) const = 0;
  virtual HessianApprox hessian(const Eigen::VectorXd& w, const ShiftPolicy& policy) const = 0;

  /// True when every density entry of `w` is strictly inside the admissible cone.
  virtual bool is_positive(const Eigen::VectorXd& w) const = 0;
  virtual Eigen::VectorXd initial_primal() const = 0;

  /// Total (trace) mass of each time slice t = j / nt, j = 0..nt, marginals included.
  virtual std::vector<double> slice_masses(const Eigen::VectorXd& w) const = 0;
  /// Coordinate range of the density unknowns inside the primal vector.
  virtual std::pair<std::size_t, std::size_t> density_range() const = 0;
};

}  // namespace momt
