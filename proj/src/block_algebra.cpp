#include "momt/block_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "momt/error.hpp"

namespace momt {

namespace {

void check_dim(int n) {
  if (n < 1 || n > kMaxBlockDim) {
    throw Error(ErrorCode::kInvalidArgument, "block dimension must be in [1, 8]");
  }
}

}  // namespace

SymBlock::SymBlock(int n) : n_(n) { check_dim(n); }

SymBlock SymBlock::identity(int n) {
  SymBlock id(n);
  for (int i = 0; i < n; ++i) id.upper(i, i) = 1.0;
  return id;
}

SymBlock SymBlock::from_coords(int n, std::span<const double> coords) {
  SymBlock out(n);
  if (static_cast<int>(coords.size()) != out.size()) {
    throw Error(ErrorCode::kShapeMismatch, "coordinate count does not match block size");
  }
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  int c = 0;
  for (int i = 0; i < n; ++i) {
    out.data_[c] = coords[c];
    ++c;
    for (int j = i + 1; j < n; ++j, ++c) out.data_[c] = coords[c] * inv_sqrt2;
  }
  return out;
}

SymBlock SymBlock::from_packed(int n, std::span<const double> packed) {
  SymBlock out(n);
  if (static_cast<int>(packed.size()) != out.size()) {
    throw Error(ErrorCode::kShapeMismatch, "packed entry count does not match block size");
  }
  std::copy(packed.begin(), packed.end(), out.data_.begin());
  return out;
}

SymBlock SymBlock::from_symmetric(const GenBlock& full) {
  SymBlock out(static_cast<int>(full.rows()));
  for (int i = 0; i < out.n_; ++i)
    for (int j = i; j < out.n_; ++j) out.upper(i, j) = full(i, j);
  return out;
}

GenBlock SymBlock::full() const {
  GenBlock out(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = i; j < n_; ++j) {
      const double v = data_[packed_index(n_, i, j)];
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

void SymBlock::to_coords(std::span<double> coords) const {
  int c = 0;
  for (int i = 0; i < n_; ++i) {
    coords[c] = data_[c];
    ++c;
    for (int j = i + 1; j < n_; ++j, ++c) coords[c] = data_[c] * std::numbers::sqrt2;
  }
}

double SymBlock::trace() const {
  double t = 0.0;
  for (int i = 0; i < n_; ++i) t += data_[packed_index(n_, i, i)];
  return t;
}

SymBlock& SymBlock::operator+=(const SymBlock& other) {
  if (other.n_ != n_) throw Error(ErrorCode::kShapeMismatch, "block dimensions differ");
  for (int c = 0; c < size(); ++c) data_[c] += other.data_[c];
  return *this;
}

SymBlock& SymBlock::operator*=(double s) {
  for (int c = 0; c < size(); ++c) data_[c] *= s;
  return *this;
}

SymBlock sym_from_full(const GenBlock& full) {
  if (full.rows() != full.cols()) throw Error(ErrorCode::kShapeMismatch, "block is not square");
  const int n = static_cast<int>(full.rows());
  SymBlock out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.upper(i, j) = 0.5 * (full(i, j) + full(j, i));
  return out;
}

SymBlock block_inverse(const SymBlock& a) {
  const int n = a.dim();
  Eigen::LLT<GenBlock> llt(a.full());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite, "Cholesky factorization of block failed");
  }
  GenBlock inv = llt.solve(GenBlock::Identity(n, n));
  return sym_from_full(inv);
}

bool is_positive_definite(const SymBlock& a) {
  Eigen::LLT<GenBlock> llt(a.full());
  return llt.info() == Eigen::Success;
}

double trace_inner(const GenBlock& x, const GenBlock& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "trace inner product of differently sized blocks");
  }
  return x.cwiseProduct(y).sum();
}

double trace_inner(const SymBlock& x, const SymBlock& y) {
  if (x.dim() != y.dim()) {
    throw Error(ErrorCode::kShapeMismatch, "trace inner product of differently sized blocks");
  }
  const int n = x.dim();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    s += x(i, i) * y(i, i);
    for (int j = i + 1; j < n; ++j) s += 2.0 * x(i, j) * y(i, j);
  }
  return s;
}

void sym_coords_of(const GenBlock& full, std::span<double> coords) {
  const int n = static_cast<int>(full.rows());
  const double half_sqrt2 = 0.5 * std::numbers::sqrt2;
  int c = 0;
  for (int i = 0; i < n; ++i) {
    coords[c++] = full(i, i);
    for (int j = i + 1; j < n; ++j) coords[c++] = half_sqrt2 * (full(i, j) + full(j, i));
  }
}

GenBlock sym_basis_element(int n, int c) {
  GenBlock e = GenBlock::Zero(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++k) {
      if (k != c) continue;
      if (i == j) {
        e(i, i) = 1.0;
      } else {
        e(i, j) = e(j, i) = 1.0 / std::numbers::sqrt2;
      }
      return e;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "symmetric basis index out of range");
}

SymEigen sym_eigen(const SymBlock& a) {
  const int n = a.dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = a(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  SymEigen out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (int k = 0; k < n; ++k) {
    out.values(k) = es.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  return out;
}

}  // namespace momt
