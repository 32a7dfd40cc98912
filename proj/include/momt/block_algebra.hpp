#pragma once

#include <array>
#include <span>

#include <Eigen/Core>

namespace momt {

inline constexpr int kMaxBlockDim = 8;
inline constexpr int kMaxPackedSize = kMaxBlockDim * (kMaxBlockDim + 1) / 2;

/// Dense n x n real block (n <= kMaxBlockDim), stored inline without heap allocation.
using GenBlock = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor,
                               kMaxBlockDim, kMaxBlockDim>;

/// Dense square matrix of at most one packed symmetric block's coordinate count.
using CoordMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor,
                                  kMaxPackedSize, kMaxPackedSize>;

constexpr int packed_size(int n) { return n * (n + 1) / 2; }

/// Position of entry (i, j), i <= j, in row-major packed upper-triangular storage.
constexpr int packed_index(int n, int i, int j) { return i * n - i * (i - 1) / 2 + (j - i); }

/// Symmetric block in packed upper-triangular storage.
///
/// Besides the raw packed entries, a SymBlock can be read from or written to
/// orthonormal coordinates: the basis E_ii, (E_ij + E_ji)/sqrt(2) in packed
/// order. Trace inner products of symmetric blocks equal dot products of their
/// coordinates.
class SymBlock {
 public:
  SymBlock() = default;
  explicit SymBlock(int n);

  static SymBlock identity(int n);
  static SymBlock from_coords(int n, std::span<const double> coords);
  static SymBlock from_packed(int n, std::span<const double> packed);
  /// Takes the upper triangle of an exactly symmetric matrix.
  static SymBlock from_symmetric(const GenBlock& full);

  int dim() const { return n_; }
  int size() const { return packed_size(n_); }

  double operator()(int i, int j) const {
    return i <= j ? data_[packed_index(n_, i, j)] : data_[packed_index(n_, j, i)];
  }
  double& upper(int i, int j) { return data_[packed_index(n_, i, j)]; }

  std::span<const double> packed() const { return {data_.data(), static_cast<size_t>(size())}; }
  std::span<double> packed() { return {data_.data(), static_cast<size_t>(size())}; }

  GenBlock full() const;
  void to_coords(std::span<double> coords) const;
  double trace() const;

  SymBlock& operator+=(const SymBlock& other);
  SymBlock& operator*=(double s);

 private:
  int n_ = 0;
  std::array<double, kMaxPackedSize> data_{};
};

inline SymBlock operator+(SymBlock a, const SymBlock& b) { return a += b; }
inline SymBlock operator*(double s, SymBlock a) { return a *= s; }

/// (A + A^T) / 2 in packed form.
SymBlock sym_from_full(const GenBlock& full);

/// Inverse of a positive-definite block through its Cholesky factor.
/// Throws Error(kNotPositiveDefinite) when the factorization fails.
SymBlock block_inverse(const SymBlock& a);

bool is_positive_definite(const SymBlock& a);

double trace_inner(const GenBlock& x, const GenBlock& y);
double trace_inner(const SymBlock& x, const SymBlock& y);

/// Orthonormal coordinates of the symmetric part of a general block.
void sym_coords_of(const GenBlock& full, std::span<double> coords);

/// Basis element number `c` of the orthonormal symmetric basis as a full block.
GenBlock sym_basis_element(int n, int c);

/// Eigenvalues in descending order plus the matching unit eigenvectors (columns).
struct SymEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
SymEigen sym_eigen(const SymBlock& a);

}  // namespace momt
