#include "momt/grid.hpp"

#include "momt/error.hpp"

namespace momt {

Grid Grid::make(int dim, std::array<int, 3> extent, int nt) {
  if (dim < 1 || dim > 3) throw Error(ErrorCode::kInvalidArgument, "spatial dimension must be 1, 2 or 3");
  if (nt < 1) throw Error(ErrorCode::kInvalidArgument, "time extent must be positive");
  Grid g;
  g.dim = dim;
  g.nt = nt;
  for (int a = 0; a < 3; ++a) {
    if (a < dim) {
      if (extent[a] < 1) throw Error(ErrorCode::kInvalidArgument, "spatial extents must be positive");
      g.extent[a] = extent[a];
    } else {
      g.extent[a] = 1;
    }
  }
  return g;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= h(a);
  return v;
}

std::size_t Grid::space_faces(int axis) const {
  if (axis >= dim) return 0;
  std::size_t count = static_cast<std::size_t>(nt);
  for (int a = 0; a < 3; ++a) count *= a == axis ? extent[a] - 1 : extent[a];
  return count;
}

std::size_t Grid::face_index(int axis, std::array<int, 3> c, int t) const {
  std::array<int, 3> e = extent;
  e[axis] -= 1;
  return ((static_cast<std::size_t>(t) * e[2] + c[2]) * e[1] + c[1]) * e[0] + c[0];
}

Grid::Position Grid::cell_position(std::size_t cell) const {
  Position p;
  p.x[0] = static_cast<int>(cell % extent[0]);
  cell /= extent[0];
  p.x[1] = static_cast<int>(cell % extent[1]);
  cell /= extent[1];
  p.x[2] = static_cast<int>(cell % extent[2]);
  p.t = static_cast<int>(cell / extent[2]);
  return p;
}

Grid::Position Grid::face_position(int axis, std::size_t face) const {
  std::array<int, 3> e = extent;
  e[axis] -= 1;
  Position p;
  p.x[0] = static_cast<int>(face % e[0]);
  face /= e[0];
  p.x[1] = static_cast<int>(face % e[1]);
  face /= e[1];
  p.x[2] = static_cast<int>(face % e[2]);
  p.t = static_cast<int>(face / e[2]);
  return p;
}

int block_values(BlockFormat format, int n, int columns) {
  switch (format) {
    case BlockFormat::kPackedSymmetric: return n * (n + 1) / 2;
    case BlockFormat::kGeneral: return n * n;
    case BlockFormat::kGeneralColumn: return columns * n * n;
    case BlockFormat::kVector: return n;
  }
  return 0;
}

std::size_t StaggeredField::entry_count(FieldKind kind, const Grid& grid) {
  switch (kind) {
    case FieldKind::kSpaceFaceX: return grid.space_faces(0);
    case FieldKind::kSpaceFaceY: return grid.space_faces(1);
    case FieldKind::kSpaceFaceZ: return grid.space_faces(2);
    case FieldKind::kTimeFace: return grid.time_faces();
    case FieldKind::kCellCenter: return grid.cells();
    case FieldKind::kSpatialCell: return grid.spatial_cells();
  }
  return 0;
}

StaggeredField::StaggeredField(FieldKind kind, Grid grid, BlockFormat format, int n, int columns)
    : kind_(kind), grid_(grid), format_(format), n_(n), columns_(columns) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "block dimension must be positive");
  block_size_ = block_values(format, n, columns);
  count_ = entry_count(kind, grid);
  values_.assign(count_ * static_cast<std::size_t>(block_size_), 0.0);
}

double trace_inner(const StaggeredField& x, const StaggeredField& y) {
  if (x.kind() != y.kind() || !(x.grid() == y.grid()) || x.format() != y.format() ||
      x.n() != y.n() || x.columns() != y.columns()) {
    throw Error(ErrorCode::kShapeMismatch, "fields are not conformable");
  }
  const auto& xv = x.values();
  const auto& yv = y.values();
  if (x.format() != BlockFormat::kPackedSymmetric) {
    double s = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * yv[i];
    return s;
  }
  // Off-diagonal packed entries appear twice in the full matrix.
  const int n = x.n();
  const int bs = x.block_size();
  double s = 0.0;
  for (std::size_t b = 0; b < x.count(); ++b) {
    const double* xb = xv.data() + b * bs;
    const double* yb = yv.data() + b * bs;
    int c = 0;
    for (int i = 0; i < n; ++i) {
      s += xb[c] * yb[c];
      ++c;
      for (int j = i + 1; j < n; ++j, ++c) s += 2.0 * xb[c] * yb[c];
    }
  }
  return s;
}

}  // namespace momt
