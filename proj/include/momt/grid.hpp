#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace momt {

/// Uniform space-time grid on the unit cube times the unit time interval.
///
/// Cells are numbered time-major, then lexicographically in space with x
/// fastest: index = ((t * nz + z) * ny + y) * nx + x.
struct Grid {
  int dim = 1;
  std::array<int, 3> extent{1, 1, 1};
  int nt = 1;

  static Grid make(int dim, std::array<int, 3> extent, int nt);

  double h(int axis) const { return 1.0 / extent[axis]; }
  double ht() const { return 1.0 / nt; }
  double cell_volume() const;

  std::size_t spatial_cells() const {
    return static_cast<std::size_t>(extent[0]) * extent[1] * extent[2];
  }
  std::size_t cells() const { return spatial_cells() * nt; }
  /// Interior faces normal to `axis` over all time cells.
  std::size_t space_faces(int axis) const;
  /// Interior time faces (the unknown density slices).
  std::size_t time_faces() const { return spatial_cells() * static_cast<std::size_t>(nt - 1); }

  std::size_t spatial_index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * extent[1] + y) * extent[0] + x;
  }
  std::size_t cell_index(int x, int y, int z, int t) const {
    return static_cast<std::size_t>(t) * spatial_cells() + spatial_index(x, y, z);
  }
  /// Face between cells `c` and `c + 1` along `axis`, c = coords[axis] in [0, extent - 2].
  std::size_t face_index(int axis, std::array<int, 3> coords, int t) const;
  /// Face between time cells f and f + 1, f in [0, nt - 2].
  std::size_t time_face_index(std::size_t spatial, int f) const {
    return static_cast<std::size_t>(f) * spatial_cells() + spatial;
  }

  struct Position {
    std::array<int, 3> x;
    int t;
  };
  Position cell_position(std::size_t cell) const;
  /// Position of the left neighbour cell of a space face.
  Position face_position(int axis, std::size_t face) const;

  bool operator==(const Grid&) const = default;
};

enum class FieldKind { kSpaceFaceX, kSpaceFaceY, kSpaceFaceZ, kTimeFace, kCellCenter, kSpatialCell };

/// How the values of one grid entry are laid out.
enum class BlockFormat {
  kPackedSymmetric,  // n(n+1)/2 packed upper-triangular entries
  kGeneral,          // n*n row-major entries
  kGeneralColumn,    // `columns` stacked n*n row-major blocks
  kVector,           // n reals
};

int block_values(BlockFormat format, int n, int columns);

/// Grid-indexed array of blocks on one staggering. Boundary values are not stored.
class StaggeredField {
 public:
  StaggeredField() = default;
  StaggeredField(FieldKind kind, Grid grid, BlockFormat format, int n, int columns = 1);

  static std::size_t entry_count(FieldKind kind, const Grid& grid);

  FieldKind kind() const { return kind_; }
  const Grid& grid() const { return grid_; }
  BlockFormat format() const { return format_; }
  int n() const { return n_; }
  int columns() const { return columns_; }
  int block_size() const { return block_size_; }
  std::size_t count() const { return count_; }

  std::span<double> block(std::size_t i) {
    return {values_.data() + i * block_size_, static_cast<std::size_t>(block_size_)};
  }
  std::span<const double> block(std::size_t i) const {
    return {values_.data() + i * block_size_, static_cast<std::size_t>(block_size_)};
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  FieldKind kind_ = FieldKind::kCellCenter;
  Grid grid_;
  BlockFormat format_ = BlockFormat::kVector;
  int n_ = 1;
  int columns_ = 1;
  int block_size_ = 1;
  std::size_t count_ = 0;
  std::vector<double> values_;
};

/// Sum over entries of tr(X^T Y). Throws kShapeMismatch for non-conformable fields.
double trace_inner(const StaggeredField& x, const StaggeredField& y);

}  // namespace momt
