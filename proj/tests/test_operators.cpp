#include <cmath>
#include <random>

#include "dense_oracle.hpp"
#include "doctest.h"
#include "momt/matrix_omt.hpp"
#include "momt/problem.hpp"
#include "momt/vector_omt.hpp"
#include "support.hpp"

using namespace momt;
using test::random_problem;
using test::random_state;
using test::random_vector;

namespace {

GenBlock random_block(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  GenBlock m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
  return m;
}

double column_inner(const BlockColumn& a, const BlockColumn& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += trace_inner(a[k], b[k]);
  return s;
}

// Interior density blocks of the Hessian: every block inside the density range.
template <class F>
void for_density_blocks(const TransportModel& m, const HessianApprox& h, F&& f) {
  const auto [rb, re] = m.density_range();
  for (std::size_t b = 0; b < h.blocks.block_count(); ++b) {
    const auto& blk = h.blocks.block(b);
    if (blk.offset >= rb && blk.offset < re) f(blk, h.blocks.values(b));
  }
}

}  // namespace

TEST_CASE("grad_L") {
  const OperatorBasis basis = OperatorBasis::standard(2);
  SUBCASE("identity commutes with every generator") {
    for (const auto& b : grad_L(OperatorBasis::standard(4), SymBlock::identity(4))) CHECK(b.isZero(0.0));
  }
  SUBCASE("n = 2, X = diag(0, 1)") {
    SymBlock x(2);
    x.upper(1, 1) = 1.0;
    const BlockColumn g = grad_L(basis, x);
    REQUIRE(g.size() == 2);
    GenBlock expected(2, 2);
    expected << 0.0, 1.0, -1.0, 0.0;
    CHECK(g[0].isApprox(expected));
    CHECK(g[1].isZero(0.0));
  }
  SUBCASE("blocks are skew for random symmetric X") {
    std::mt19937_64 rng(11);
    for (int n = 2; n <= 5; ++n) {
      const SymBlock x = sym_from_full(random_block(n, rng));
      for (const auto& b : grad_L(OperatorBasis::standard(n), x)) CHECK((b + b.transpose()).isZero(1e-13));
    }
  }
}

TEST_CASE("div_L") {
  const OperatorBasis basis = OperatorBasis::standard(2);
  SUBCASE("zero input") {
    const BlockColumn y(2, GenBlock::Zero(2, 2));
    CHECK(div_L(basis, y).full().isZero(0.0));
  }
  SUBCASE("n = 2 by hand: L1 Y1 - Y1 L1 with Y1 = [[0,1],[-1,0]]") {
    BlockColumn y(2, GenBlock::Zero(2, 2));
    y[0] << 0.0, 1.0, -1.0, 0.0;
    GenBlock expected(2, 2);
    expected << -2.0, 1.0, 1.0, 2.0;
    CHECK(div_L(basis, y).full().isApprox(expected));
  }
  SUBCASE("adjoint of grad_L under the trace inner product") {
    std::mt19937_64 rng(12);
    for (int n = 2; n <= 5; ++n) {
      const OperatorBasis b = OperatorBasis::standard(n);
      for (int trial = 0; trial < 20; ++trial) {
        const SymBlock x = sym_from_full(random_block(n, rng));
        BlockColumn y;
        for (int k = 0; k < b.size(); ++k) y.push_back(random_block(n, rng));
        const double lhs = column_inner(grad_L(b, x), y);
        const double rhs = trace_inner(x, div_L(b, y));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
      }
    }
  }
}

TEST_CASE("verify_kernel") {
  for (int n = 2; n <= 5; ++n) CHECK(verify_kernel(OperatorBasis::standard(n)) == 1);
  OperatorBasis identity_only;
  identity_only.n = 3;
  identity_only.elements = {SymBlock::identity(3)};
  CHECK(verify_kernel(identity_only) == packed_size(3));
}

TEST_CASE("graph operators") {
  const Graph k3 = Graph::complete3();
  Eigen::MatrixXd expected(3, 3);
  expected << 1, 1, 0, -1, 0, 1, 0, -1, -1;
  CHECK(k3.incidence().isApprox(expected));
  CHECK((k3.source_part() - k3.sink_part()).isApprox(expected));
  CHECK(k3.laplacian_nullity() == 1);
  CHECK(Graph::single().laplacian_nullity() == 1);

  CHECK(graph_grad(k3, Eigen::Vector3d(1, 1, 1)).isZero(0.0));
  CHECK(graph_grad(k3, Eigen::Vector3d(1, 0, 0)).isApprox(Eigen::Vector3d(1, 1, 0)));

  Graph weighted = k3;
  weighted.edges[1].weight = 4.0;
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = random_vector(3, rng);
    const Eigen::VectorXd y = random_vector(3, rng);
    CHECK(graph_grad(weighted, x).dot(y) == doctest::Approx(x.dot(graph_div(weighted, y))).epsilon(1e-13));
  }

  Graph split;
  split.nodes = 4;
  split.edges = {{0, 1, 1.0}, {2, 3, 1.0}};
  CHECK(split.laplacian_nullity() == 2);
}

TEST_CASE("matrix constraint stencils") {
  const auto p = random_problem(ProblemKind::kMatrix, 2, {3, 3, 1}, 4, 3, 0.1, 21);
  const MatrixOmt m(to_matrix_problem(p));
  const Grid& g = m.grid();
  const int s = m.sym_size();

  SUBCASE("density constant in time has no interior differences") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m.primal_size());
    for (std::size_t f = 0; f < g.time_faces(); ++f) {
      SymBlock::from_packed(3, {p.rho0.data() + (f % g.spatial_cells()) * 6, 6})
          .to_coords({w.data() + m.rho_offset() + f * s, static_cast<std::size_t>(s)});
    }
    const Eigen::VectorXd dw = m.apply_constraint(w);
    for (std::size_t c = g.spatial_cells(); c < g.cells() - g.spatial_cells(); ++c) {
      CHECK(dw.segment(c * s, s).norm() < 1e-12);
    }
  }
  SUBCASE("first time cell sees the first interior slice over ht") {
    std::mt19937_64 rng(22);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m.primal_size());
    w.segment(m.rho_offset(), m.u_offset() - m.rho_offset()) = random_vector(m.u_offset() - m.rho_offset(), rng);
    const Eigen::VectorXd dw = m.apply_constraint(w);
    for (std::size_t sp = 0; sp < g.spatial_cells(); ++sp) {
      const Eigen::VectorXd rho = w.segment(m.rho_offset() + g.time_face_index(sp, 0) * s, s);
      CHECK((dw.segment(sp * s, s) - rho / g.ht()).norm() < 1e-12);
    }
  }
  SUBCASE("assembled matrix equals the matrix-free operator") {
    std::mt19937_64 rng(23);
    const Eigen::VectorXd w = random_vector(m.primal_size(), rng);
    CHECK(test::relative_error(m.constraint_matrix() * w, m.apply_constraint(w)) < 1e-13);
    const Eigen::VectorXd l = random_vector(m.dual_size(), rng);
    CHECK(test::relative_error(m.constraint_matrix().transpose() * l, m.apply_constraint_adjoint(l)) < 1e-13);
  }
  SUBCASE("dual kernel is orthonormal and annihilated by the adjoint") {
    const Eigen::MatrixXd k = m.dual_kernel();
    CHECK((k.transpose() * k - Eigen::MatrixXd::Identity(k.cols(), k.cols())).norm() < 1e-12);
    CHECK(m.apply_constraint_adjoint(k.col(0)).norm() < 1e-10);
  }
}

TEST_CASE("vector constraint stencils") {
  const auto p = random_problem(ProblemKind::kVector, 2, {4, 3, 1}, 3, 3, 0.1, 24);
  const VectorOmt m(to_vector_problem(p));
  const Grid& g = m.grid();
  std::mt19937_64 rng(25);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m.primal_size());
  w.segment(m.rho_offset(), m.u_offset() - m.rho_offset()) = random_vector(m.u_offset() - m.rho_offset(), rng);
  const Eigen::VectorXd dw = m.apply_constraint(w);
  for (std::size_t sp = 0; sp < g.spatial_cells(); ++sp) {
    const Eigen::VectorXd rho = w.segment(m.rho_offset() + g.time_face_index(sp, 0) * 3, 3);
    CHECK((dw.segment(sp * 3, 3) - rho / g.ht()).norm() < 1e-12);
  }
  const Eigen::VectorXd x = random_vector(m.primal_size(), rng);
  CHECK(test::relative_error(m.constraint_matrix() * x, m.apply_constraint(x)) < 1e-13);
  const Eigen::MatrixXd k = m.dual_kernel();
  CHECK(std::abs(k.col(0).norm() - 1.0) < 1e-12);
  CHECK(m.apply_constraint_adjoint(k.col(0)).norm() < 1e-10);
}

TEST_CASE("cost") {
  SUBCASE("zero momentum and flux cost nothing") {
    for (auto kind : {ProblemKind::kMatrix, ProblemKind::kVector}) {
      const auto m = make_model(random_problem(kind, 2, {4, 4, 1}, 3, 3, 0.1, 31));
      CHECK(m->cost(m->initial_primal()) == 0.0);
    }
  }
  SUBCASE("single cell by hand") {
    ProblemFile p;
    p.kind = ProblemKind::kMatrix;
    p.grid = Grid::make(1, {1, 1, 1}, 1);
    p.n = 1;
    p.gamma = 0.3;
    p.basis = OperatorBasis::standard(1).elements;
    p.rho0 = {1.0};
    p.rho1 = {1.0};
    const auto m = make_model(p);
    REQUIRE(m->primal_size() == 2);
    Eigen::VectorXd w(2);
    w << 1.7, 0.0;
    // Q = half of each marginal inverse = 1, Z = gamma u^2.
    CHECK(m->cost(w) == doctest::Approx(0.3 * 1.7 * 1.7).epsilon(1e-14));
  }
  SUBCASE("random 1D states match the dense re-evaluation") {
    std::mt19937_64 rng(32);
    for (int n : {1, 2, 3}) {
      const auto p = random_problem(ProblemKind::kMatrix, 1, {5, 1, 1}, 4, n, 0.2, 33 + n);
      const auto m = make_model(p);
      const test::DenseOracle oracle(p);
      for (int trial = 0; trial < 3; ++trial) {
        const Eigen::VectorXd w = random_state(*m, rng);
        const Eigen::VectorXd x = oracle.from_model(w);
        CHECK(m->cost(w) == doctest::Approx(oracle.cost(x)).epsilon(1e-12));
        const Eigen::VectorXd r = oracle.dual_from_model(m->apply_constraint(w) - m->constraint_rhs());
        CHECK(test::relative_error(r, oracle.constraint(x)) < 1e-12);
      }
    }
  }
  SUBCASE("scalar vector problems match the dense re-evaluation") {
    std::mt19937_64 rng(34);
    const auto p = random_problem(ProblemKind::kVector, 1, {6, 1, 1}, 3, 1, 0.2, 35);
    const auto m = make_model(p);
    const test::DenseOracle oracle(p);
    const Eigen::VectorXd w = random_state(*m, rng);
    CHECK(m->cost(w) == doctest::Approx(oracle.cost(oracle.from_model(w))).epsilon(1e-12));
  }
}

TEST_CASE("KKT residual at rest") {
  for (auto kind : {ProblemKind::kMatrix, ProblemKind::kVector}) {
    const auto m = make_model(random_problem(kind, 2, {4, 3, 1}, 3, 3, 0.1, 41));
    const Eigen::VectorXd w = m->initial_primal();
    const KktResidual r = m->kkt_residual(w, Eigen::VectorXd::Zero(m->dual_size()));
    const auto [rb, re] = m->density_range();
    CHECK(r.primal.head(rb).isZero(0.0));
    CHECK(r.primal.tail(r.primal.size() - re).isZero(0.0));
    CHECK((r.dual - (m->apply_constraint(w) - m->constraint_rhs())).norm() == 0.0);
  }
}

TEST_CASE("Hessian approximation") {
  std::mt19937_64 rng(51);
  for (auto kind : {ProblemKind::kMatrix, ProblemKind::kVector}) {
    CAPTURE(static_cast<int>(kind));
    const auto m = make_model(random_problem(kind, 2, {4, 3, 1}, 3, 3, 0.1, 52));

    SUBCASE("density block is the shift alone without transport") {
      const auto h = m->hessian(m->initial_primal(), ShiftPolicy{});
      CHECK(h.shift == doctest::Approx(1e-8));
      for_density_blocks(*m, h, [&](const BlockDiagonal::Block& blk, std::span<const double> v) {
        for (int r = 0; r < blk.size; ++r)
          for (int c = 0; c < blk.size; ++c) CHECK(v[r * blk.size + c] == (r == c ? h.shift : 0.0));
      });
    }
    SUBCASE("blocks are positive semidefinite and invert exactly") {
      const Eigen::VectorXd w = random_state(*m, rng);
      const auto h = m->hessian(w, ShiftPolicy{});
      const auto [rb, re] = m->density_range();
      for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(w.size());
        x.segment(rb, re - rb) = random_vector(re - rb, rng);
        CHECK(x.dot(h.blocks.apply(x)) >= 0.0);
      }
      const Eigen::VectorXd x = random_vector(w.size(), rng);
      CHECK(test::relative_error(h.blocks.apply_inverse(h.blocks.apply(x)), x) < 1e-10);
    }
  }
}
