#include "momt/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "momt/error.hpp"

namespace momt {

namespace {

std::array<double, 3> cell_center(const Grid& g, std::size_t sp) {
  const auto pos = g.cell_position(sp);
  std::array<double, 3> x{};
  for (int a = 0; a < g.dim; ++a) x[a] = (pos.x[a] + 0.5) * g.h(a);
  return x;
}

double distance(const std::array<double, 3>& x, const std::array<double, 3>& y, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
  return std::sqrt(s);
}

/// Smoothed indicator of the ball around `center`.
std::vector<double> smooth_ball(const Grid& g, const std::array<double, 3>& center, double radius, double sigma) {
  std::vector<double> f(g.spatial_cells(), 0.0);
  for (std::size_t sp = 0; sp < f.size(); ++sp) {
    if (distance(cell_center(g, sp), center, g.dim) < radius) f[sp] = 1.0;
  }
  return gaussian_smooth(f, g, sigma);
}

std::array<double, 3> corner(int c, int dim) {
  std::array<double, 3> v{};
  for (int a = 0; a < dim; ++a) v[a] = (c >> a) & 1;
  return v;
}

/// Unit dominant direction of corner c: 0, 45, 90, 135 degrees in 1D/2D,
/// the cube diagonal through the corner in 3D.
Eigen::VectorXd corner_direction(int c, int dim, int n) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  if (n == 1) {
    e(0) = 1.0;
    return e;
  }
  if (dim == 3 && n >= 3) {
    for (int a = 0; a < 3; ++a) e(a) = ((c >> a) & 1) ? 1.0 : -1.0;
    return e.normalized();
  }
  const double theta = (c % 4) * std::numbers::pi / 4.0;
  e(0) = std::cos(theta);
  e(1) = std::sin(theta);
  return e;
}

void normalize_mass(std::vector<double>& values, const Grid& g, int n, bool packed) {
  double mass = 0.0;
  if (packed) {
    const int block = packed_size(n);
    for (std::size_t i = 0; i < values.size(); i += block)
      for (int d = 0; d < n; ++d) mass += values[i + packed_index(n, d, d)];
  } else {
    for (double v : values) mass += v;
  }
  mass *= g.cell_volume();
  for (double& v : values) v /= mass;
}

void require_extent(const GeneratorOptions& o) {
  for (int a = 0; a < o.dim; ++a) {
    if (o.extent[a] < 8) throw Error(ErrorCode::kInvalidArgument, "disk generators need extents of at least 8");
  }
  if (!(o.contrast > 1.0)) throw Error(ErrorCode::kInvalidContrast, "contrast must exceed 1");
}

std::vector<SymBlock> default_basis(int n) { return OperatorBasis::standard(n).elements; }

/// Adds floor * I (or floor per channel) so the contrast equals `target`.
void lift_to_contrast(std::vector<double>& values, int n, bool packed, double target) {
  const int block = packed ? packed_size(n) : n;
  const std::size_t count = values.size() / block;
  double floor = 0.0;
  if (packed) {
    double hi = -INFINITY;
    double lo = INFINITY;
    for (std::size_t i = 0; i < count; ++i) {
      const SymEigen eig = sym_eigen(SymBlock::from_packed(n, {values.data() + i * block, static_cast<std::size_t>(block)}));
      hi = std::max(hi, eig.values(0));
      lo = std::min(lo, eig.values(n - 1));
    }
    floor = (hi - target * lo) / (target - 1.0);
  } else {
    for (int k = 0; k < n; ++k) {
      double hi = -INFINITY;
      double lo = INFINITY;
      for (std::size_t i = 0; i < count; ++i) {
        hi = std::max(hi, values[i * n + k]);
        lo = std::min(lo, values[i * n + k]);
      }
      floor = std::max(floor, (hi - target * lo) / (target - 1.0));
    }
  }
  if (floor < 0.0) throw Error(ErrorCode::kInvalidContrast, "requested contrast is below the smoothed data contrast");
  for (std::size_t i = 0; i < count; ++i) {
    if (packed) {
      for (int d = 0; d < n; ++d) values[i * block + packed_index(n, d, d)] += floor;
    } else {
      for (int k = 0; k < n; ++k) values[i * n + k] += floor;
    }
  }
}

void disk_quarters(const GeneratorOptions& o, const Grid& g, ProblemFile& p, bool same_endpoints) {
  require_extent(o);
  const bool matrix = o.kind == ProblemKind::kMatrix;
  const int n = o.n;
  const int block = p.block_size();
  const std::size_t spatial = g.spatial_cells();
  const std::array<double, 3> mid{0.5, 0.5, 0.5};
  const std::vector<double> disk = smooth_ball(g, mid, o.disk_radius, o.sigma_cells);

  std::vector<double> start(spatial * block, 0.0);
  for (std::size_t sp = 0; sp < spatial; ++sp) {
    for (int d = 0; d < n; ++d) start[sp * block + (matrix ? packed_index(n, d, d) : d)] = disk[sp];
  }

  std::vector<double> end(spatial * block, 0.0);
  const int corners = 1 << g.dim;
  for (int c = 0; c < corners; ++c) {
    const std::vector<double> region = smooth_ball(g, corner(c, g.dim), o.corner_radius, o.sigma_cells);
    if (matrix) {
      const Eigen::VectorXd e = corner_direction(c, g.dim, n);
      const GenBlock a = GenBlock::Identity(n, n) + (o.contrast - 1.0) * e * e.transpose();
      const SymBlock as = sym_from_full(a);
      for (std::size_t sp = 0; sp < spatial; ++sp)
        for (int k = 0; k < block; ++k) end[sp * block + k] += region[sp] * as.packed()[k];
    } else {
      // Red, green, blue, yellow, then cycling.
      static const double colors[4][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}};
      for (std::size_t sp = 0; sp < spatial; ++sp)
        for (int k = 0; k < n; ++k) end[sp * n + k] += region[sp] * (n == 3 ? colors[c % 4][k] : 1.0);
    }
  }
  if (same_endpoints) end = start;

  for (auto* field : {&start, &end}) {
    lift_to_contrast(*field, n, matrix, o.contrast);
    normalize_mass(*field, g, n, matrix);
  }
  p.rho0 = std::move(start);
  p.rho1 = std::move(end);
  p.contrast = o.contrast;
}

void random_marginals(const GeneratorOptions& o, const Grid& g, ProblemFile& p) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const bool matrix = o.kind == ProblemKind::kMatrix;
  const int n = o.n;
  const int block = p.block_size();
  const std::size_t spatial = g.spatial_cells();
  for (auto* field : {&p.rho0, &p.rho1}) {
    field->assign(spatial * block, 0.0);
    for (std::size_t sp = 0; sp < spatial; ++sp) {
      if (matrix) {
        GenBlock m(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) m(i, j) = unit(rng);
        const GenBlock spd = m * m.transpose() / n + 0.5 * GenBlock::Identity(n, n);
        const SymBlock s = sym_from_full(spd);
        std::copy(s.packed().begin(), s.packed().end(), field->begin() + sp * block);
      } else {
        for (int k = 0; k < n; ++k) (*field)[sp * n + k] = 1.0 + 0.5 * unit(rng);
      }
    }
    normalize_mass(*field, g, n, matrix);
  }
  p.contrast = std::max(measured_contrast(p, p.rho0), measured_contrast(p, p.rho1));
}

}  // namespace

std::vector<double> gaussian_smooth(const std::vector<double>& field, const Grid& g, double sigma) {
  if (!(sigma > 0.0)) return field;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> weights(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k) weights[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
  std::vector<double> cur = field;
  std::vector<double> next(field.size());
  for (int a = 0; a < g.dim; ++a) {
    for (std::size_t sp = 0; sp < cur.size(); ++sp) {
      const auto pos = g.cell_position(sp);
      double acc = 0.0;
      double wsum = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        auto q = pos.x;
        q[a] += k;
        if (q[a] < 0 || q[a] >= g.extent[a]) continue;
        const double w = weights[k + radius];
        acc += w * cur[g.spatial_index(q[0], q[1], q[2])];
        wsum += w;
      }
      next[sp] = acc / wsum;
    }
    std::swap(cur, next);
  }
  return cur;
}

double matrix_contrast(const std::vector<double>& packed, int n) {
  const int block = packed_size(n);
  double hi = -INFINITY;
  double lo = INFINITY;
  for (std::size_t i = 0; i + block <= packed.size(); i += block) {
    const SymEigen eig = sym_eigen(SymBlock::from_packed(n, {packed.data() + i, static_cast<std::size_t>(block)}));
    hi = std::max(hi, eig.values(0));
    lo = std::min(lo, eig.values(n - 1));
  }
  return hi / lo;
}

double vector_contrast(const std::vector<double>& values, int n) {
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    double hi = -INFINITY;
    double lo = INFINITY;
    for (std::size_t i = k; i < values.size(); i += n) {
      hi = std::max(hi, values[i]);
      lo = std::min(lo, values[i]);
    }
    worst = std::max(worst, hi / lo);
  }
  return worst;
}

double measured_contrast(const ProblemFile& problem, const std::vector<double>& values) {
  return problem.kind == ProblemKind::kMatrix ? matrix_contrast(values, problem.n)
                                              : vector_contrast(values, problem.n);
}

ProblemFile generate(const GeneratorOptions& o) {
  ProblemFile p;
  p.kind = o.kind;
  p.grid = Grid::make(o.dim, o.extent, o.nt);
  p.n = o.n;
  p.gamma = o.gamma;
  p.seed = o.seed;
  p.generator = o.name;
  if (o.kind == ProblemKind::kMatrix) {
    if (o.n < 1 || o.n > kMaxBlockDim) throw Error(ErrorCode::kInvalidArgument, "block dimension out of range");
    p.basis = default_basis(o.n);
  } else {
    if (o.n == 3) {
      p.graph = Graph::complete3();
    } else if (o.n == 1) {
      p.graph = Graph::single();
    } else {
      // Path graph for other node counts.
      p.graph.nodes = o.n;
      for (int k = 0; k + 1 < o.n; ++k) p.graph.edges.push_back({k, k + 1, 1.0});
    }
  }
  if (o.name == "disk-quarters") {
    disk_quarters(o, p.grid, p, false);
  } else if (o.name == "static") {
    disk_quarters(o, p.grid, p, true);
  } else if (o.name == "random") {
    random_marginals(o, p.grid, p);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown generator " + o.name);
  }
  return p;
}

}  // namespace momt
