#include "momt/kkt_solver.hpp"

#include <algorithm>
#include <cmath>

#include "momt/error.hpp"
#include "parallel.hpp"

namespace momt {

Eigen::VectorXd SparseSym::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    const std::size_t end = row_ptr[i + 1] - 1;
    double acc = values[end] * x[i];
    const double xi = x[i];
    for (std::size_t k = row_ptr[i]; k < end; ++k) {
      acc += values[k] * x[cols[k]];
      y[cols[k]] += values[k] * xi;
    }
    y[i] += acc;
  }
  return y;
}

Eigen::MatrixXd SparseSym::to_dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      a(i, cols[k]) = values[k];
      a(cols[k], i) = values[k];
    }
  }
  return a;
}

SparseSym SparseSym::from_dense(const Eigen::MatrixXd& a, double drop) {
  SparseSym s;
  s.dim = static_cast<std::size_t>(a.rows());
  s.row_ptr.push_back(0);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      if (j == i || std::abs(a(i, j)) > drop) {
        s.cols.push_back(static_cast<std::size_t>(j));
        s.values.push_back(a(i, j));
      }
    }
    s.row_ptr.push_back(s.cols.size());
  }
  return s;
}

Eigen::VectorXd IcFactor::apply(const Eigen::VectorXd& r) const {
  const auto& l = lower;
  Eigen::VectorXd y = r;
  for (std::size_t i = 0; i < l.dim; ++i) {
    const std::size_t end = l.row_ptr[i + 1] - 1;
    double acc = y[i];
    for (std::size_t k = l.row_ptr[i]; k < end; ++k) acc -= l.values[k] * y[l.cols[k]];
    y[i] = acc / l.values[end];
  }
  for (std::size_t i = l.dim; i-- > 0;) {
    const std::size_t end = l.row_ptr[i + 1] - 1;
    const double xi = y[i] / l.values[end];
    y[i] = xi;
    for (std::size_t k = l.row_ptr[i]; k < end; ++k) y[l.cols[k]] -= l.values[k] * xi;
  }
  return y;
}

namespace {

bool try_ic(const SparseSym& s, double alpha, SparseSym& l) {
  l = s;
  for (std::size_t i = 0; i < s.dim; ++i) l.values[l.row_ptr[i + 1] - 1] *= 1.0 + alpha;
  for (std::size_t i = 0; i < l.dim; ++i) {
    const std::size_t begin = l.row_ptr[i];
    const std::size_t end = l.row_ptr[i + 1] - 1;
    for (std::size_t k = begin; k <= end; ++k) {
      const std::size_t j = l.cols[k];
      // Sparse dot of rows i and j over columns < j.
      double dot = 0.0;
      std::size_t a = begin;
      std::size_t b = l.row_ptr[j];
      const std::size_t b_end = l.row_ptr[j + 1] - 1;
      while (a < k && b < b_end) {
        if (l.cols[a] == l.cols[b]) {
          dot += l.values[a] * l.values[b];
          ++a;
          ++b;
        } else if (l.cols[a] < l.cols[b]) {
          ++a;
        } else {
          ++b;
        }
      }
      if (j == i) {
        const double pivot = l.values[k] - dot;
        if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
        l.values[k] = std::sqrt(pivot);
      } else {
        l.values[k] = (l.values[k] - dot) / l.values[l.row_ptr[j + 1] - 1];
      }
    }
  }
  return true;
}

}  // namespace

IcFactor ic_factorize(const SparseSym& s) {
  for (std::size_t i = 0; i < s.dim; ++i) {
    if (s.row_ptr[i + 1] == s.row_ptr[i] || s.cols[s.row_ptr[i + 1] - 1] != i || !(s.diagonal(i) > 0.0)) {
      throw Error(ErrorCode::kFactorizationFailed, "matrix diagonal is missing or not positive");
    }
  }
  IcFactor f;
  for (double alpha : {0.0, 1e-3, 1e-2, 1e-1, 1.0}) {
    if (try_ic(s, alpha, f.lower)) {
      f.shift = alpha;
      return f;
    }
  }
  throw Error(ErrorCode::kFactorizationFailed, "incomplete Cholesky broke down for every shift");
}

SchurAssembler::SchurAssembler(const ConstraintMatrix& d, const BlockDiagonal& layout) : d_(d) {
  if (static_cast<std::size_t>(d.cols()) != layout.dim()) {
    throw Error(ErrorCode::kShapeMismatch, "Hessian layout does not match the constraint columns");
  }
  const std::size_t nrows = static_cast<std::size_t>(d.rows());
  std::vector<std::vector<std::size_t>> row_sets(nrows);  // lower-triangle columns per row

  std::vector<std::size_t> local;
  for (std::size_t b = 0; b < layout.block_count(); ++b) {
    const auto& blk = layout.block(b);
    local.clear();
    for (int c = 0; c < blk.size; ++c) {
      for (ConstraintMatrix::InnerIterator it(d, static_cast<std::ptrdiff_t>(blk.offset + c)); it; ++it) {
        local.push_back(static_cast<std::size_t>(it.row()));
      }
    }
    std::sort(local.begin(), local.end());
    local.erase(std::unique(local.begin(), local.end()), local.end());
    blocks_.push_back({rows_.size(), local.size(), 0});
    rows_.insert(rows_.end(), local.begin(), local.end());
    for (std::size_t a = 0; a < local.size(); ++a)
      for (std::size_t c = 0; c <= a; ++c) row_sets[local[a]].push_back(local[c]);
  }

  pattern_.dim = nrows;
  pattern_.row_ptr.assign(nrows + 1, 0);
  for (std::size_t i = 0; i < nrows; ++i) {
    auto& set = row_sets[i];
    set.push_back(i);
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    pattern_.row_ptr[i + 1] = pattern_.row_ptr[i] + set.size();
  }
  pattern_.cols.reserve(pattern_.row_ptr[nrows]);
  for (auto& set : row_sets) {
    pattern_.cols.insert(pattern_.cols.end(), set.begin(), set.end());
    std::vector<std::size_t>().swap(set);
  }
  pattern_.values.assign(pattern_.cols.size(), 0.0);

  for (auto& br : blocks_) {
    br.slot_begin = slots_.size();
    const std::size_t* r = rows_.data() + br.row_begin;
    for (std::size_t a = 0; a < br.row_count; ++a) {
      const auto first = pattern_.cols.begin() + static_cast<std::ptrdiff_t>(pattern_.row_ptr[r[a]]);
      const auto last = pattern_.cols.begin() + static_cast<std::ptrdiff_t>(pattern_.row_ptr[r[a] + 1]);
      for (std::size_t c = 0; c <= a; ++c) {
        slots_.push_back(static_cast<std::size_t>(std::lower_bound(first, last, r[c]) - pattern_.cols.begin()));
      }
    }
  }
}

SparseSym SchurAssembler::assemble(const BlockDiagonal& hessian) const {
  SparseSym s = pattern_;
  std::vector<double> contrib(slots_.size(), 0.0);

  detail::parallel_for(blocks_.size(), [&](std::size_t b) {
    const auto& br = blocks_[b];
    const auto& blk = hessian.block(b);
    const std::size_t* r = rows_.data() + br.row_begin;
    const auto nr = static_cast<Eigen::Index>(br.row_count);
    Eigen::MatrixXd db = Eigen::MatrixXd::Zero(nr, blk.size);
    for (int c = 0; c < blk.size; ++c) {
      for (ConstraintMatrix::InnerIterator it(d_, static_cast<std::ptrdiff_t>(blk.offset + c)); it; ++it) {
        const auto pos = std::lower_bound(r, r + br.row_count, static_cast<std::size_t>(it.row())) - r;
        db(pos, c) = it.value();
      }
    }
    const auto inv = hessian.inverse_values(b);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> ainv(
        inv.data(), blk.size, blk.size);
    const Eigen::MatrixXd c = db * ainv * db.transpose();
    std::size_t slot = br.slot_begin;
    for (Eigen::Index a = 0; a < nr; ++a)
      for (Eigen::Index k = 0; k <= a; ++k) contrib[slot++] = 0.5 * (c(a, k) + c(k, a));
  });

  // Fixed-order merge keeps the result independent of the thread count.
  for (std::size_t i = 0; i < slots_.size(); ++i) s.values[slots_[i]] += contrib[i];
  return s;
}

SparseSym assemble_schur(const ConstraintMatrix& d, const BlockDiagonal& hessian) {
  return SchurAssembler(d, hessian).assemble(hessian);
}

namespace {

template <typename Precondition>
PcgResult conjugate_gradient(const SparseSym& s, const Eigen::VectorXd& rhs, double tol_rel, int max_iter,
                             const Eigen::MatrixXd& kernel, Precondition&& precondition) {
  if (static_cast<std::size_t>(rhs.size()) != s.dim) {
    throw Error(ErrorCode::kShapeMismatch, "right-hand side has wrong length");
  }
  if (kernel.cols() > 0 && kernel.rows() != rhs.size()) {
    throw Error(ErrorCode::kShapeMismatch, "kernel basis has wrong length");
  }
  auto deflate = [&](Eigen::VectorXd v) {
    if (kernel.cols() > 0) v -= kernel * (kernel.transpose() * v);
    return v;
  };
  PcgResult out;
  out.x = Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd r = deflate(rhs);
  const double rhs_norm = r.norm();
  if (rhs_norm == 0.0) {
    out.converged = true;
    return out;
  }
  Eigen::VectorXd z = deflate(precondition(r));
  double rz = r.dot(z);
  if (!(rz > 0.0)) throw Error(ErrorCode::kBreakdownDetected, "preconditioned residual product is not positive");
  Eigen::VectorXd p = z;
  out.relative_residual = 1.0;
  while (out.iterations < max_iter) {
    const Eigen::VectorXd sp = s.multiply(p);
    const double curvature = p.dot(sp);
    if (!(curvature > 0.0)) throw Error(ErrorCode::kBreakdownDetected, "non-positive curvature in CG");
    const double alpha = rz / curvature;
    out.x += alpha * p;
    r -= alpha * sp;
    ++out.iterations;
    out.relative_residual = r.norm() / rhs_norm;
    if (out.relative_residual <= tol_rel) {
      out.converged = true;
      return out;
    }
    z = deflate(precondition(r));
    const double rz_next = r.dot(z);
    if (!(rz_next > 0.0)) {
      throw Error(ErrorCode::kBreakdownDetected, "preconditioned residual product is not positive");
    }
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return out;
}

}  // namespace

PcgResult pcg(const SparseSym& s, const IcFactor& m, const Eigen::VectorXd& rhs, double tol_rel, int max_iter,
              const Eigen::MatrixXd& kernel) {
  return conjugate_gradient(s, rhs, tol_rel, max_iter, kernel,
                            [&](const Eigen::VectorXd& r) { return m.apply(r); });
}

PcgResult cg(const SparseSym& s, const Eigen::VectorXd& rhs, double tol_rel, int max_iter,
             const Eigen::MatrixXd& kernel) {
  return conjugate_gradient(s, rhs, tol_rel, max_iter, kernel, [](const Eigen::VectorXd& r) { return r; });
}

Eigen::VectorXd back_substitute(const BlockDiagonal& hessian, const ConstraintMatrix& d,
                                const Eigen::VectorXd& dlambda, const Eigen::VectorXd& grad_w) {
  const Eigen::VectorXd t = d.transpose() * dlambda + grad_w;
  return -hessian.apply_inverse(t);
}

KktStep solve_kkt(const SchurAssembler& assembler, const ConstraintMatrix& d, const BlockDiagonal& hessian,
                  const KktResidual& residual, double tol_inner, int max_iter, const Eigen::MatrixXd& kernel) {
  const SparseSym s = assembler.assemble(hessian);
  const IcFactor m = ic_factorize(s);
  const Eigen::VectorXd rhs = residual.dual - d * hessian.apply_inverse(residual.primal);
  PcgResult sol = pcg(s, m, rhs, tol_inner, max_iter, kernel);
  KktStep step;
  step.dlambda = std::move(sol.x);
  step.dw = back_substitute(hessian, d, step.dlambda, residual.primal);
  step.pcg_iterations = sol.iterations;
  step.pcg_residual = sol.relative_residual;
  step.pcg_converged = sol.converged;
  step.ic_shift = m.shift;
  return step;
}

}  // namespace momt
