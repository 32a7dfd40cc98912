#include "momt/matrix_omt.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "momt/error.hpp"
#include "parallel.hpp"

namespace momt {

namespace {

GenBlock load_gen(const double* p, int n) {
  GenBlock b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = p[i * n + j];
  return b;
}

void add_gen(const GenBlock& b, double scale, double* p) {
  const int n = static_cast<int>(b.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p[i * n + j] += scale * b(i, j);
}

void add_coords(const SymBlock& b, double scale, double* out) {
  double coords[kMaxPackedSize];
  b.to_coords({coords, static_cast<std::size_t>(b.size())});
  for (int c = 0; c < b.size(); ++c) out[c] += scale * coords[c];
}

/// Writes I (x) (scale * m) acting on row-major n x n coordinates: X -> scale * X m.
void right_multiplication_block(const SymBlock& m, double scale, std::span<double> out) {
  const int n = m.dim();
  const int nn = n * n;
  std::fill(out.begin(), out.end(), 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      for (int k = 0; k < n; ++k) out[(r * n + c) * nn + (r * n + k)] = scale * m(k, c);
}

}  // namespace

OperatorBasis OperatorBasis::standard(int n) {
  OperatorBasis basis;
  basis.n = n;
  SymBlock l1(n);
  SymBlock l2(n);
  for (int j = 0; j < n; ++j) l1.upper(0, j) = 1.0;
  for (int i = 0; i + 1 < n; ++i) l2.upper(i, i) = i + 1.0;
  basis.elements = {l1, l2};
  return basis;
}

BlockColumn grad_L(const OperatorBasis& basis, const SymBlock& x) {
  if (x.dim() != basis.n) throw Error(ErrorCode::kShapeMismatch, "block and basis dimensions differ");
  const GenBlock xf = x.full();
  BlockColumn out;
  out.reserve(basis.elements.size());
  for (const auto& l : basis.elements) {
    const GenBlock lf = l.full();
    out.push_back(lf * xf - xf * lf);
  }
  return out;
}

SymBlock div_L(const OperatorBasis& basis, const BlockColumn& y) {
  if (static_cast<int>(y.size()) != basis.size()) {
    throw Error(ErrorCode::kShapeMismatch, "block column length differs from basis size");
  }
  const int n = basis.n;
  GenBlock acc = GenBlock::Zero(n, n);
  for (int k = 0; k < basis.size(); ++k) {
    if (y[k].rows() != n || y[k].cols() != n) {
      throw Error(ErrorCode::kShapeMismatch, "block and basis dimensions differ");
    }
    const GenBlock lf = basis.elements[k].full();
    acc += lf * y[k] - y[k] * lf;
  }
  return sym_from_full(acc);
}

int verify_kernel(const OperatorBasis& basis) {
  const int n = basis.n;
  const int s = packed_size(n);
  const int big_n = basis.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(big_n) * n * n, s);
  for (int b = 0; b < s; ++b) {
    const GenBlock e = sym_basis_element(n, b);
    const BlockColumn g = grad_L(basis, SymBlock::from_symmetric(e));
    for (int k = 0; k < big_n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m((k * n + i) * n + j, b) = g[k](i, j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double largest = sv.size() > 0 ? sv(0) : 0.0;
  const double tol = 1e-10 * std::max(1.0, largest);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return s - rank;
}

void validate_marginals(const MatrixProblem& problem) {
  const int n = problem.basis.n;
  if (n < 1 || n > kMaxBlockDim) throw Error(ErrorCode::kInvalidArgument, "block dimension out of range");
  for (const auto& l : problem.basis.elements) {
    if (l.dim() != n) throw Error(ErrorCode::kShapeMismatch, "basis element has wrong dimension");
  }
  if (!(problem.gamma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be positive");
  const Grid& g = problem.grid;
  for (const StaggeredField* marginal : {&problem.rho0, &problem.rho1}) {
    if (marginal->kind() != FieldKind::kSpatialCell ||
        marginal->format() != BlockFormat::kPackedSymmetric || marginal->n() != n ||
        marginal->grid().dim != g.dim || marginal->grid().extent != g.extent) {
      throw Error(ErrorCode::kShapeMismatch, "marginal does not match the problem grid");
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < marginal->count(); ++i) {
      const SymBlock b = SymBlock::from_packed(n, marginal->block(i));
      const SymEigen eig = sym_eigen(b);
      const double tr = b.trace();
      if (!(eig.values(n - 1) >= 1e-10 * tr / n) || !(tr > 0.0)) {
        throw Error(ErrorCode::kNotPositiveDefinite, "marginal block below the eigenvalue floor");
      }
      mass += tr;
    }
    mass *= g.cell_volume();
    if (std::abs(mass - 1.0) > 1e-12) {
      throw Error(ErrorCode::kInvalidArgument, "marginal does not have unit trace mass");
    }
  }
}

struct MatrixOmt::Averages {
  std::vector<SymBlock> rho_inv;  // per interior time face
  std::vector<SymBlock> q;        // per cell: A2(rho^-1) + a
  std::vector<SymBlock> z;        // per cell: sum_a A1(p_a^T p_a) + gamma sum_k u_k^T u_k
};

MatrixOmt::MatrixOmt(MatrixProblem problem) : problem_(std::move(problem)) {
  validate_marginals(problem_);
  if (verify_kernel(problem_.basis) != 1) {
    throw Error(ErrorCode::kKernelAssumption, "operator basis kernel is not spanned by the identity");
  }
  const Grid& g = grid();
  const int n = this->n();
  const int s = sym_size();
  for (const auto& l : problem_.basis.elements) basis_full_.push_back(l.full());

  std::size_t offset = 0;
  for (int a = 0; a < 3; ++a) {
    p_offset_[a] = offset;
    offset += g.space_faces(a) * n * n;
  }
  rho_offset_ = offset;
  offset += g.time_faces() * s;
  u_offset_ = offset;
  offset += g.cells() * problem_.basis.size() * n * n;
  primal_size_ = offset;

  const std::size_t spatial = g.spatial_cells();
  for (std::size_t i = 0; i < spatial; ++i) {
    rho0_inv_.push_back(block_inverse(SymBlock::from_packed(n, problem_.rho0.block(i))));
    rho1_inv_.push_back(block_inverse(SymBlock::from_packed(n, problem_.rho1.block(i))));
  }

  boundary_inverse_.assign(g.cells(), SymBlock(n));
  rhs_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dual_size()));
  for (std::size_t i = 0; i < spatial; ++i) {
    const std::size_t first = g.cell_index(0, 0, 0, 0) + i;
    const std::size_t last = g.cell_index(0, 0, 0, g.nt - 1) + i;
    boundary_inverse_[first] += 0.5 * rho0_inv_[i];
    boundary_inverse_[last] += 0.5 * rho1_inv_[i];
    add_coords(SymBlock::from_packed(n, problem_.rho0.block(i)), 1.0 / g.ht(), rhs_.data() + first * s);
    add_coords(SymBlock::from_packed(n, problem_.rho1.block(i)), -1.0 / g.ht(), rhs_.data() + last * s);
  }
  constraint_ = build_constraint_matrix();

  // Identity in every cell.
  dual_kernel_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dual_size()), 1);
  const double unit = 1.0 / std::sqrt(static_cast<double>(g.cells()) * n);
  for (std::size_t c = 0; c < g.cells(); ++c)
    for (int d = 0; d < n; ++d) dual_kernel_(static_cast<Eigen::Index>(c * s + packed_index(n, d, d)), 0) = unit;
}

void MatrixOmt::add_d1(int axis, std::span<const double> p, std::span<double> out) const {
  const Grid& g = grid();
  const int n = this->n();
  const int s = sym_size();
  const double inv_h = 1.0 / g.h(axis);
  detail::parallel_for(g.cells(), [&](std::size_t cell) {
    const auto pos = g.cell_position(cell);
    GenBlock acc = GenBlock::Zero(n, n);
    bool touched = false;
    if (pos.x[axis] + 1 < g.extent[axis]) {
      acc += load_gen(p.data() + g.face_index(axis, pos.x, pos.t) * n * n, n);
      touched = true;
    }
    if (pos.x[axis] >= 1) {
      auto left = pos.x;
      left[axis] -= 1;
      acc -= load_gen(p.data() + g.face_index(axis, left, pos.t) * n * n, n);
      touched = true;
    }
    if (!touched) return;
    double coords[kMaxPackedSize];
    sym_coords_of(acc, {coords, static_cast<std::size_t>(s)});
    for (int c = 0; c < s; ++c) out[cell * s + c] += inv_h * coords[c];
  });
}

void MatrixOmt::add_d1_adjoint(int axis, std::span<const double> lambda, std::span<double> p_out) const {
  const Grid& g = grid();
  const int n = this->n();
  const int s = sym_size();
  const double inv_h = 1.0 / g.h(axis);
  detail::parallel_for(g.space_faces(axis), [&](std::size_t face) {
    const auto pos = g.face_position(axis, face);
    auto right = pos.x;
    right[axis] += 1;
    const std::size_t lc = g.cell_index(pos.x[0], pos.x[1], pos.x[2], pos.t);
    const std::size_t rc = g.cell_index(right[0], right[1], right[2], pos.t);
    const GenBlock diff =
        SymBlock::from_coords(n, lambda.subspan(lc * s, s)).full() -
        SymBlock::from_coords(n, lambda.subspan(rc * s, s)).full();
    add_gen(diff, inv_h, p_out.data() + face * n * n);
  });
}

void MatrixOmt::add_d2(std::span<const double> rho, std::span<double> out) const {
  const Grid& g = grid();
  const int s = sym_size();
  const double inv_ht = 1.0 / g.ht();
  const std::size_t spatial = g.spatial_cells();
  detail::parallel_for(g.cells(), [&](std::size_t cell) {
    const std::size_t sp = cell % spatial;
    const int t = static_cast<int>(cell / spatial);
    double* o = out.data() + cell * s;
    if (t + 1 < g.nt) {
      const double* r = rho.data() + g.time_face_index(sp, t) * s;
      for (int c = 0; c < s; ++c) o[c] += inv_ht * r[c];
    }
    if (t >= 1) {
      const double* r = rho.data() + g.time_face_index(sp, t - 1) * s;
      for (int c = 0; c < s; ++c) o[c] -= inv_ht * r[c];
    }
  });
}

void MatrixOmt::add_d2_adjoint(std::span<const double> lambda, std::span<double> rho_out) const {
  const Grid& g = grid();
  const int s = sym_size();
  const double inv_ht = 1.0 / g.ht();
  const std::size_t spatial = g.spatial_cells();
  detail::parallel_for(g.time_faces(), [&](std::size_t face) {
    const std::size_t sp = face % spatial;
    const int f = static_cast<int>(face / spatial);
    const double* before = lambda.data() + g.cell_index(0, 0, 0, f) * s + sp * s;
    const double* after = lambda.data() + g.cell_index(0, 0, 0, f + 1) * s + sp * s;
    double* o = rho_out.data() + face * s;
    for (int c = 0; c < s; ++c) o[c] += inv_ht * (before[c] - after[c]);
  });
}

void MatrixOmt::d3_cell(const double* u, double* out) const {
  // -1/2 div_L(u - u^T), blockwise transpose.
  const int n = this->n();
  GenBlock acc = GenBlock::Zero(n, n);
  for (int k = 0; k < problem_.basis.size(); ++k) {
    const GenBlock uk = load_gen(u + k * n * n, n);
    const GenBlock y = uk - uk.transpose();
    acc += basis_full_[k] * y - y * basis_full_[k];
  }
  const int s = sym_size();
  double coords[kMaxPackedSize];
  sym_coords_of(acc, {coords, static_cast<std::size_t>(s)});
  for (int c = 0; c < s; ++c) out[c] += -0.5 * coords[c];
}

void MatrixOmt::d3_adjoint_cell(const double* lambda, double* u_out) const {
  const int n = this->n();
  const GenBlock lf = SymBlock::from_coords(n, {lambda, static_cast<std::size_t>(sym_size())}).full();
  for (int k = 0; k < problem_.basis.size(); ++k) {
    const GenBlock g = basis_full_[k] * lf - lf * basis_full_[k];
    add_gen(g, -1.0, u_out + k * n * n);
  }
}

void MatrixOmt::add_d3(std::span<const double> u, std::span<double> out) const {
  const int nn = n() * n() * problem_.basis.size();
  const int s = sym_size();
  detail::parallel_for(grid().cells(),
                       [&](std::size_t cell) { d3_cell(u.data() + cell * nn, out.data() + cell * s); });
}

void MatrixOmt::add_d3_adjoint(std::span<const double> lambda, std::span<double> u_out) const {
  const int nn = n() * n() * problem_.basis.size();
  const int s = sym_size();
  detail::parallel_for(grid().cells(), [&](std::size_t cell) {
    d3_adjoint_cell(lambda.data() + cell * s, u_out.data() + cell * nn);
  });
}

Eigen::VectorXd MatrixOmt::apply_constraint(const Eigen::VectorXd& w) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dual_size()));
  std::span<const double> ws(w.data(), w.size());
  std::span<double> os(out.data(), out.size());
  const Grid& g = grid();
  for (int a = 0; a < g.dim; ++a) {
    add_d1(a, ws.subspan(p_offset_[a], g.space_faces(a) * n() * n()), os);
  }
  add_d2(ws.subspan(rho_offset_, u_offset_ - rho_offset_), os);
  add_d3(ws.subspan(u_offset_), os);
  return out;
}

Eigen::VectorXd MatrixOmt::apply_constraint_adjoint(const Eigen::VectorXd& lambda) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(primal_size_));
  std::span<const double> ls(lambda.data(), lambda.size());
  std::span<double> os(out.data(), out.size());
  const Grid& g = grid();
  for (int a = 0; a < g.dim; ++a) {
    add_d1_adjoint(a, ls, os.subspan(p_offset_[a], g.space_faces(a) * n() * n()));
  }
  add_d2_adjoint(ls, os.subspan(rho_offset_, u_offset_ - rho_offset_));
  add_d3_adjoint(ls, os.subspan(u_offset_));
  return out;
}

MatrixOmt::Averages MatrixOmt::averages(const Eigen::VectorXd& w) const {
  const Grid& g = grid();
  const int n = this->n();
  const int s = sym_size();
  const int big_n = problem_.basis.size();
  const std::size_t spatial = g.spatial_cells();
  Averages avg;

  avg.rho_inv.resize(g.time_faces());
  detail::parallel_for(g.time_faces(), [&](std::size_t f) {
    avg.rho_inv[f] = block_inverse(
        SymBlock::from_coords(n, {w.data() + rho_offset_ + f * s, static_cast<std::size_t>(s)}));
  });

  // Square first, then average.
  std::array<std::vector<SymBlock>, 3> squares;
  for (int a = 0; a < g.dim; ++a) {
    squares[a].resize(g.space_faces(a));
    detail::parallel_for(g.space_faces(a), [&](std::size_t f) {
      const GenBlock p = load_gen(w.data() + p_offset_[a] + f * n * n, n);
      squares[a][f] = sym_from_full(p.transpose() * p);
    });
  }

  avg.q.assign(g.cells(), SymBlock(n));
  avg.z.assign(g.cells(), SymBlock(n));
  detail::parallel_for(g.cells(), [&](std::size_t cell) {
    const auto pos = g.cell_position(cell);
    const std::size_t sp = cell % spatial;
    SymBlock q = boundary_inverse_[cell];
    if (pos.t >= 1) q += 0.5 * avg.rho_inv[g.time_face_index(sp, pos.t - 1)];
    if (pos.t + 1 < g.nt) q += 0.5 * avg.rho_inv[g.time_face_index(sp, pos.t)];
    avg.q[cell] = q;

    SymBlock z(n);
    for (int a = 0; a < g.dim; ++a) {
      if (pos.x[a] + 1 < g.extent[a]) z += 0.5 * squares[a][g.face_index(a, pos.x, pos.t)];
      if (pos.x[a] >= 1) {
        auto left = pos.x;
        left[a] -= 1;
        z += 0.5 * squares[a][g.face_index(a, left, pos.t)];
      }
    }
    GenBlock uu = GenBlock::Zero(n, n);
    for (int k = 0; k < big_n; ++k) {
      const GenBlock uk = load_gen(w.data() + u_offset_ + (cell * big_n + k) * n * n, n);
      uu += uk.transpose() * uk;
    }
    z += problem_.gamma * sym_from_full(uu);
    avg.z[cell] = z;
  });
  return avg;
}

double MatrixOmt::cost(const Eigen::VectorXd& w) const {
  const Averages avg = averages(w);
  const Grid& g = grid();
  std::vector<double> per_cell(g.cells());
  detail::parallel_for(g.cells(), [&](std::size_t c) { per_cell[c] = trace_inner(avg.z[c], avg.q[c]); });
  double sum = 0.0;
  for (double v : per_cell) sum += v;
  return sum * g.cell_volume() * g.ht();
}

KktResidual MatrixOmt::kkt_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& lambda) const {
  if (static_cast<std::size_t>(w.size()) != primal_size_ ||
      static_cast<std::size_t>(lambda.size()) != dual_size()) {
    throw Error(ErrorCode::kShapeMismatch, "state does not match the problem layout");
  }
  const Averages avg = averages(w);
  const Grid& g = grid();
  const int n = this->n();
  const int s = sym_size();
  const int big_n = problem_.basis.size();
  const std::size_t spatial = g.spatial_cells();

  KktResidual r;
  r.primal = apply_constraint_adjoint(lambda);
  r.dual = apply_constraint(w) - rhs_;

  for (int a = 0; a < g.dim; ++a) {
    detail::parallel_for(g.space_faces(a), [&](std::size_t f) {
      const auto pos = g.face_position(a, f);
      auto right = pos.x;
      right[a] += 1;
      const std::size_t lc = g.cell_index(pos.x[0], pos.x[1], pos.x[2], pos.t);
      const std::size_t rc = g.cell_index(right[0], right[1], right[2], pos.t);
      const GenBlock m = 0.5 * (avg.q[lc].full() + avg.q[rc].full());
      const GenBlock p = load_gen(w.data() + p_offset_[a] + f * n * n, n);
      add_gen(p * m, 2.0, r.primal.data() + p_offset_[a] + f * n * n);
    });
  }

  detail::parallel_for(g.time_faces(), [&](std::size_t f) {
    const std::size_t sp = f % spatial;
    const int tf = static_cast<int>(f / spatial);
    const GenBlock c = 0.5 * (avg.z[g.time_face_index(sp, tf)].full() +
                              avg.z[g.time_face_index(sp, tf + 1)].full());
    const GenBlock rinv = avg.rho_inv[f].full();
    const GenBlock rcr = rinv * c * rinv;
    double coords[kMaxPackedSize];
    sym_coords_of(rcr, {coords, static_cast<std::size_t>(s)});
    double* o = r.primal.data() + rho_offset_ + f * s;
    for (int k = 0; k < s; ++k) o[k] -= coords[k];
  });

  const double gamma = problem_.gamma;
  detail::parallel_for(g.cells(), [&](std::size_t cell) {
    const GenBlock q = avg.q[cell].full();
    for (int k = 0; k < big_n; ++k) {
      const std::size_t off = u_offset_ + (cell * big_n + k) * n * n;
      const GenBlock uk = load_gen(w.data() + off, n);
      add_gen(uk * q, 2.0 * gamma, r.primal.data() + off);
    }
  });
  return r;
}

HessianApprox MatrixOmt::hessian(const Eigen::VectorXd& w, const ShiftPolicy& policy) const {
  const Averages avg = averages(w);
  const Grid& g = grid();
  const int n = this->n();
  const int s = sym_size();
  const int nn = n * n;
  const int big_n = problem_.basis.size();
  const std::size_t spatial = g.spatial_cells();

  HessianApprox h;
  std::array<std::size_t, 3> p_base{};
  for (int a = 0; a < g.dim; ++a) {
    p_base[a] = h.blocks.block_count();
    for (std::size_t f = 0; f < g.space_faces(a); ++f) h.blocks.add_block(nn);
  }
  const std::size_t rho_base = h.blocks.block_count();
  for (std::size_t f = 0; f < g.time_faces(); ++f) h.blocks.add_block(s);
  const std::size_t u_base = h.blocks.block_count();
  for (std::size_t c = 0; c < g.cells() * big_n; ++c) h.blocks.add_block(nn);

  // Momentum: X -> 2 X M with M = A1^*(A2(rho^-1) + a).
  for (int a = 0; a < g.dim; ++a) {
    detail::parallel_for(g.space_faces(a), [&](std::size_t f) {
      const auto pos = g.face_position(a, f);
      auto right = pos.x;
      right[a] += 1;
      const std::size_t lc = g.cell_index(pos.x[0], pos.x[1], pos.x[2], pos.t);
      const std::size_t rc = g.cell_index(right[0], right[1], right[2], pos.t);
      const SymBlock m = 0.5 * (avg.q[lc] + avg.q[rc]);
      right_multiplication_block(m, 2.0, h.blocks.values(p_base[a] + f));
      right_multiplication_block(block_inverse(m), 0.5, h.blocks.inverse_values(p_base[a] + f));
    });
  }

  // Density: g(X) = R C R X R + R X R C R on orthonormal symmetric coordinates.
  std::vector<GenBlock> basis;
  for (int b = 0; b < s; ++b) basis.push_back(sym_basis_element(n, b));
  std::vector<double> diag_sums(g.time_faces(), 0.0);
  detail::parallel_for(g.time_faces(), [&](std::size_t f) {
    const std::size_t sp = f % spatial;
    const int tf = static_cast<int>(f / spatial);
    const GenBlock c = 0.5 * (avg.z[g.time_face_index(sp, tf)].full() +
                              avg.z[g.time_face_index(sp, tf + 1)].full());
    const GenBlock rinv = avg.rho_inv[f].full();
    const GenBlock rcr = rinv * c * rinv;
    auto vals = h.blocks.values(rho_base + f);
    double coords[kMaxPackedSize];
    for (int b = 0; b < s; ++b) {
      const GenBlock gx = rcr * basis[b] * rinv + rinv * basis[b] * rcr;
      sym_coords_of(gx, {coords, static_cast<std::size_t>(s)});
      for (int r = 0; r < s; ++r) vals[r * s + b] = coords[r];
    }
    for (int r = 0; r < s; ++r) {
      for (int b = r + 1; b < s; ++b) {
        const double v = 0.5 * (vals[r * s + b] + vals[b * s + r]);
        vals[r * s + b] = vals[b * s + r] = v;
      }
      diag_sums[f] += vals[r * s + r];
    }
  });
  double diag_total = 0.0;
  for (double v : diag_sums) diag_total += v;
  const double mean_diag = g.time_faces() > 0 ? diag_total / (static_cast<double>(g.time_faces()) * s) : 0.0;
  h.shift = std::max(policy.floor, policy.relative * mean_diag);
  detail::parallel_for(g.time_faces(), [&](std::size_t f) {
    auto vals = h.blocks.values(rho_base + f);
    CoordMatrix m(s, s);
    for (int r = 0; r < s; ++r) {
      vals[r * s + r] += h.shift;
      for (int b = 0; b < s; ++b) m(r, b) = vals[r * s + b];
    }
    Eigen::LLT<CoordMatrix> llt(m);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::kNotPositiveDefinite, "density Hessian block is not positive definite");
    }
    const CoordMatrix inv = llt.solve(CoordMatrix::Identity(s, s));
    auto ivals = h.blocks.inverse_values(rho_base + f);
    for (int r = 0; r < s; ++r)
      for (int b = 0; b < s; ++b) ivals[r * s + b] = 0.5 * (inv(r, b) + inv(b, r));
  });

  // Flux: X -> 2 gamma X (A2(rho^-1) + a).
  const double gamma = problem_.gamma;
  detail::parallel_for(g.cells(), [&](std::size_t cell) {
    const SymBlock q_inv = block_inverse(avg.q[cell]);
    for (int k = 0; k < big_n; ++k) {
      const std::size_t b = u_base + cell * big_n + k;
      right_multiplication_block(avg.q[cell], 2.0 * gamma, h.blocks.values(b));
      right_multiplication_block(q_inv, 0.5 / gamma, h.blocks.inverse_values(b));
    }
  });
  return h;
}

bool MatrixOmt::is_positive(const Eigen::VectorXd& w) const {
  const int n = this->n();
  const int s = sym_size();
  for (std::size_t f = 0; f < grid().time_faces(); ++f) {
    const SymBlock b =
        SymBlock::from_coords(n, {w.data() + rho_offset_ + f * s, static_cast<std::size_t>(s)});
    if (!is_positive_definite(b)) return false;
  }
  return true;
}

Eigen::VectorXd MatrixOmt::initial_primal() const {
  const Grid& g = grid();
  const int n = this->n();
  const int s = sym_size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(primal_size_));
  const std::size_t spatial = g.spatial_cells();
  for (std::size_t f = 0; f < g.time_faces(); ++f) {
    const std::size_t sp = f % spatial;
    const double theta = static_cast<double>(f / spatial + 1) / g.nt;
    const SymBlock b = (1.0 - theta) * SymBlock::from_packed(n, problem_.rho0.block(sp)) +
                       theta * SymBlock::from_packed(n, problem_.rho1.block(sp));
    b.to_coords({w.data() + rho_offset_ + f * s, static_cast<std::size_t>(s)});
  }
  return w;
}

SymBlock MatrixOmt::density_at(const Eigen::VectorXd& w, std::size_t spatial, int j) const {
  const int n = this->n();
  if (j == 0) return SymBlock::from_packed(n, problem_.rho0.block(spatial));
  if (j == grid().nt) return SymBlock::from_packed(n, problem_.rho1.block(spatial));
  const int s = sym_size();
  const std::size_t f = grid().time_face_index(spatial, j - 1);
  return SymBlock::from_coords(n, {w.data() + rho_offset_ + f * s, static_cast<std::size_t>(s)});
}

std::vector<double> MatrixOmt::slice_masses(const Eigen::VectorXd& w) const {
  const Grid& g = grid();
  std::vector<double> masses;
  for (int j = 0; j <= g.nt; ++j) {
    double m = 0.0;
    for (std::size_t sp = 0; sp < g.spatial_cells(); ++sp) m += density_at(w, sp, j).trace();
    masses.push_back(m * g.cell_volume());
  }
  return masses;
}

ConstraintMatrix MatrixOmt::build_constraint_matrix() const {
  const Grid& g = grid();
  const int n = this->n();
  const int s = sym_size();
  const int big_n = problem_.basis.size();
  const double half_sqrt2 = 0.5 * std::numbers::sqrt2;
  std::vector<Eigen::Triplet<double, std::ptrdiff_t>> triplets;

  for (int a = 0; a < g.dim; ++a) {
    const double inv_h = 1.0 / g.h(a);
    for (std::size_t f = 0; f < g.space_faces(a); ++f) {
      const auto pos = g.face_position(a, f);
      auto right = pos.x;
      right[a] += 1;
      const std::size_t lc = g.cell_index(pos.x[0], pos.x[1], pos.x[2], pos.t);
      const std::size_t rc = g.cell_index(right[0], right[1], right[2], pos.t);
      const std::size_t col0 = p_offset_[a] + f * n * n;
      int q = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j, ++q) {
          for (const auto& [cell, sign] : {std::pair{lc, 1.0}, std::pair{rc, -1.0}}) {
            const auto row = static_cast<std::ptrdiff_t>(cell * s + q);
            if (i == j) {
              triplets.emplace_back(row, col0 + i * n + i, sign * inv_h);
            } else {
              triplets.emplace_back(row, col0 + i * n + j, sign * half_sqrt2 * inv_h);
              triplets.emplace_back(row, col0 + j * n + i, sign * half_sqrt2 * inv_h);
            }
          }
        }
      }
    }
  }

  const double inv_ht = 1.0 / g.ht();
  const std::size_t spatial = g.spatial_cells();
  for (std::size_t f = 0; f < g.time_faces(); ++f) {
    const std::size_t sp = f % spatial;
    const int tf = static_cast<int>(f / spatial);
    const std::size_t before = g.time_face_index(sp, tf);
    const std::size_t after = g.time_face_index(sp, tf + 1);
    for (int q = 0; q < s; ++q) {
      const auto col = static_cast<std::ptrdiff_t>(rho_offset_ + f * s + q);
      triplets.emplace_back(before * s + q, col, inv_ht);
      triplets.emplace_back(after * s + q, col, -inv_ht);
    }
  }

  // The flux map is the same in every cell; probe it once.
  const int nu = big_n * n * n;
  std::vector<double> cell_map(static_cast<std::size_t>(s) * nu, 0.0);
  std::vector<double> unit(nu, 0.0);
  std::vector<double> column(s, 0.0);
  for (int j = 0; j < nu; ++j) {
    unit[j] = 1.0;
    std::fill(column.begin(), column.end(), 0.0);
    d3_cell(unit.data(), column.data());
    for (int q = 0; q < s; ++q) cell_map[q * nu + j] = column[q];
    unit[j] = 0.0;
  }
  for (std::size_t cell = 0; cell < g.cells(); ++cell) {
    for (int q = 0; q < s; ++q) {
      for (int j = 0; j < nu; ++j) {
        const double v = cell_map[q * nu + j];
        if (v != 0.0) triplets.emplace_back(cell * s + q, u_offset_ + cell * nu + j, v);
      }
    }
  }

  ConstraintMatrix d(static_cast<std::ptrdiff_t>(dual_size()), static_cast<std::ptrdiff_t>(primal_size_));
  d.setFromTriplets(triplets.begin(), triplets.end());
  d.makeCompressed();
  return d;
}

}  // namespace momt
