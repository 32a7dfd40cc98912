#include <random>

#include "doctest.h"
#include "momt/error.hpp"
#include "momt/generators.hpp"
#include "momt/problem.hpp"
#include "momt/sqp.hpp"
#include "support.hpp"

using namespace momt;
using test::random_problem;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::kInvalidArgument;
}

ProblemFile small_disk(ProblemKind kind, int nt = 4) {
  GeneratorOptions o;
  o.kind = kind;
  o.extent = {16, 16, 1};
  o.nt = nt;
  o.gamma = 0.05;
  return generate(o);
}

}  // namespace

TEST_CASE("initialize") {
  SUBCASE("equal marginals start feasible at zero cost") {
    GeneratorOptions o;
    o.name = "static";
    o.extent = {16, 16, 1};
    o.nt = 4;
    for (auto kind : {ProblemKind::kMatrix, ProblemKind::kVector}) {
      o.kind = kind;
      const auto m = make_model(generate(o));
      const SqpState s = initialize(*m);
      CHECK(m->cost(s.w) == 0.0);
      CHECK((m->apply_constraint(s.w) - m->constraint_rhs()).norm() < 1e-10 * m->constraint_rhs().norm());
      CHECK(s.lambda.isZero(0.0));
    }
  }
  SUBCASE("a single time cell is rejected") {
    const auto m = make_model(random_problem(ProblemKind::kMatrix, 1, {4, 1, 1}, 1, 2, 0.1, 91));
    CHECK(code_of([&] { initialize(*m); }) == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("solver configuration") {
  CHECK_NOTHROW(SolverConfig{}.validate());
  auto rejects = [](auto mutate) {
    SolverConfig c;
    mutate(c);
    return code_of([&] { c.validate(); }) == ErrorCode::kInvalidArgument;
  };
  CHECK(rejects([](SolverConfig& c) { c.tol_outer = 0.0; }));
  CHECK(rejects([](SolverConfig& c) { c.tol_outer = 2.0; }));
  CHECK(rejects([](SolverConfig& c) { c.tol_inner = 1.0; }));
  CHECK(rejects([](SolverConfig& c) { c.fraction_to_boundary = 1.0; }));
  CHECK(rejects([](SolverConfig& c) { c.max_inner = 0; }));
  CHECK(rejects([](SolverConfig& c) { c.max_outer = -1; }));
  CHECK(rejects([](SolverConfig& c) { c.tol_inner_cap = 1e-6; }));

  SolverConfig absolute;
  absolute.absolute_tol = true;
  absolute.tol_outer = 5.0;
  CHECK_NOTHROW(absolute.validate());
}

TEST_CASE("fraction to the boundary") {
  const auto m = make_model(small_disk(ProblemKind::kMatrix));
  const Eigen::VectorXd w = m->initial_primal();
  const auto [rb, re] = m->density_range();
  Eigen::VectorXd dw = Eigen::VectorXd::Zero(w.size());
  CHECK(boundary_step(*m, w, dw, 0.995, 12) == doctest::Approx(1.0 / 0.995));
  dw.segment(rb, re - rb) = -w.segment(rb, re - rb);
  const double alpha = boundary_step(*m, w, dw, 0.995, 30);
  CHECK(alpha < 1.0);
  CHECK(alpha > 1.0 - 1e-6);
  CHECK(m->is_positive(w + alpha * dw));
}

TEST_CASE("solve") {
  for (auto kind : {ProblemKind::kMatrix, ProblemKind::kVector}) {
    CAPTURE(static_cast<int>(kind));
    const auto m = make_model(small_disk(kind));

    SUBCASE("merit decreases monotonically to convergence") {
      const SolveResult r = solve(*m, SolverConfig{});
      CHECK(r.converged);
      CHECK_FALSE(r.failure.has_value());
      const auto& h = r.state.merit_history;
      REQUIRE(h.size() >= 2);
      for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] < h[i - 1]);
      CHECK(r.trace.size() == static_cast<std::size_t>(r.state.iteration));
      CHECK(r.distance2 == doctest::Approx(m->cost(r.state.w)));
      CHECK(r.distance2 > 0.0);
      CHECK(m->is_positive(r.state.w));
    }
    SUBCASE("iteration limit") {
      SolverConfig c;
      c.max_outer = 1;
      const SolveResult r = solve(*m, c);
      CHECK_FALSE(r.converged);
      CHECK(r.state.iteration == 1);
      CHECK(r.residual > c.tol_outer);
    }
    SUBCASE("starved inner solves warn, relax and still converge") {
      SolverConfig c;
      c.max_inner = 5;
      const SolveResult r = solve(*m, c);
      bool relaxed = false;
      for (const auto& w : r.warnings) relaxed |= w.find("relaxed") != std::string::npos;
      CHECK(r.warnings.size() >= 2);
      CHECK(relaxed);
      CHECK(r.converged);
    }
  }
}
