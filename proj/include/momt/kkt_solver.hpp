#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "momt/model.hpp"

namespace momt {

/// Symmetric sparse matrix stored as its lower triangle in CSR form.
/// Columns within a row are sorted ascending, so the diagonal entry is last.
struct SparseSym {
  std::size_t dim = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> cols;
  std::vector<double> values;

  std::size_t nonzeros() const { return values.size(); }
  double diagonal(std::size_t i) const { return values[row_ptr[i + 1] - 1]; }
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd to_dense() const;
  static SparseSym from_dense(const Eigen::MatrixXd& a, double drop = 0.0);
};

/// Zero fill-in incomplete Cholesky factor L (L L^T ~ S + shift * diag(S)).
struct IcFactor {
  SparseSym lower;
  double shift = 0.0;

  /// Solves L L^T z = r.
  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
};

/// IC(0), retrying with shifts alpha * diag(S) for alpha in {1e-3, 1e-2, 1e-1, 1}.
/// Throws kFactorizationFailed when every attempt breaks down.
IcFactor ic_factorize(const SparseSym& s);

/// Forms D Ainv D^T for a fixed constraint matrix and Hessian block layout.
/// The sparsity pattern is computed once; each assembly only refills values.
class SchurAssembler {
 public:
  SchurAssembler(const ConstraintMatrix& d, const BlockDiagonal& layout);

  SparseSym assemble(const BlockDiagonal& hessian) const;
  const SparseSym& pattern() const { return pattern_; }

 private:
  struct BlockRows {
    std::size_t row_begin;   // into rows_
    std::size_t row_count;
    std::size_t slot_begin;  // into slots_, row_count*(row_count+1)/2 entries
  };

  const ConstraintMatrix& d_;
  std::vector<BlockRows> blocks_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> slots_;
  SparseSym pattern_;
};

/// One-shot convenience wrapper around SchurAssembler.
SparseSym assemble_schur(const ConstraintMatrix& d, const BlockDiagonal& hessian);

struct PcgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned CG from x = 0. Throws kBreakdownDetected on a non-positive
/// curvature or preconditioned residual inner product.
///
/// `kernel` (orthonormal columns, may be empty) spans the null space of a
/// singular S. The right-hand side and every preconditioned residual are
/// projected onto its orthogonal complement; the relative residual refers to
/// the projected right-hand side.
PcgResult pcg(const SparseSym& s, const IcFactor& m, const Eigen::VectorXd& rhs, double tol_rel, int max_iter,
              const Eigen::MatrixXd& kernel = {});
/// Unpreconditioned CG with the same contract.
PcgResult cg(const SparseSym& s, const Eigen::VectorXd& rhs, double tol_rel, int max_iter,
             const Eigen::MatrixXd& kernel = {});

/// dw = -Ainv (D^T dlambda + grad_w).
Eigen::VectorXd back_substitute(const BlockDiagonal& hessian, const ConstraintMatrix& d,
                                const Eigen::VectorXd& dlambda, const Eigen::VectorXd& grad_w);

struct KktStep {
  Eigen::VectorXd dw;
  Eigen::VectorXd dlambda;
  int pcg_iterations = 0;
  double pcg_residual = 0.0;  // relative
  bool pcg_converged = false;
  double ic_shift = 0.0;
};

/// Solves [A D^T; D 0] [dw; dl] = -[grad_w; grad_l] through the reduced system
/// D Ainv D^T dl = grad_l - D Ainv grad_w.
KktStep solve_kkt(const SchurAssembler& assembler, const ConstraintMatrix& d,
                  const BlockDiagonal& hessian, const KktResidual& residual, double tol_inner,
                  int max_iter, const Eigen::MatrixXd& dual_kernel = {});

}  // namespace momt
