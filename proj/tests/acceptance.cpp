// Acceptance checks; prints one PASS/FAIL line per criterion and exits nonzero on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dense_oracle.hpp"
#include "momt/bench.hpp"
#include "momt/generators.hpp"
#include "momt/kkt_solver.hpp"
#include "momt/matrix_omt.hpp"
#include "momt/problem.hpp"
#include "momt/sqp.hpp"
#include "momt/vector_omt.hpp"
#include "support.hpp"

using namespace momt;
using test::random_problem;
using test::random_state;
using test::random_vector;

namespace {

constexpr double kAdjointTol = 1e-12;
constexpr int kAdjointPairs = 50;
constexpr double kGradientTol = 1e-6;
constexpr int kGradientInstances = 5;
constexpr double kHessianTol = 1e-6;
constexpr double kOracleTol = 1e-4;
constexpr double kScalarTol = 1e-8;
constexpr double kPcgTol = 1e-3;
constexpr double kZeroTransportDistance = 1e-10;
constexpr int kZeroTransportIterations = 2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s  criterion %2d  %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Case {
  const char* name;
  ProblemKind kind;
  int dim;
  std::array<int, 3> extent;
  int nt;
};

const std::vector<Case> kOperatorCases = {
    {"matrix-1d", ProblemKind::kMatrix, 1, {7, 1, 1}, 4},
    {"matrix-2d", ProblemKind::kMatrix, 2, {4, 3, 1}, 3},
    {"matrix-3d", ProblemKind::kMatrix, 3, {3, 3, 2}, 3},
    {"vector-1d", ProblemKind::kVector, 1, {7, 1, 1}, 4},
    {"vector-2d", ProblemKind::kVector, 2, {5, 4, 1}, 3},
};

// ---- 1: adjointness ----------------------------------------------------------------------

template <class Model>
double adjoint_ratio(const Model& m, std::mt19937_64& rng) {
  const Grid& g = m.grid();
  const std::size_t duals = m.dual_size();
  using Apply = std::function<void(std::span<const double>, std::span<double>)>;
  struct Op {
    std::size_t size;
    Apply fwd, adj;
  };
  std::vector<Op> ops;
  for (int a = 0; a < g.dim; ++a) {
    const std::size_t end = a + 1 < 3 ? m.p_offset(a + 1) : m.rho_offset();
    ops.push_back({end - m.p_offset(a), [&m, a](auto w, auto o) { m.add_d1(a, w, o); },
                   [&m, a](auto l, auto o) { m.add_d1_adjoint(a, l, o); }});
  }
  ops.push_back({m.u_offset() - m.rho_offset(), [&m](auto w, auto o) { m.add_d2(w, o); },
                 [&m](auto l, auto o) { m.add_d2_adjoint(l, o); }});
  if (m.primal_size() > m.u_offset()) {
    ops.push_back({m.primal_size() - m.u_offset(), [&m](auto w, auto o) { m.add_d3(w, o); },
                   [&m](auto l, auto o) { m.add_d3_adjoint(l, o); }});
  }
  ops.push_back({m.primal_size(),
                 [&m](auto w, auto o) {
                   const Eigen::VectorXd r = m.apply_constraint(Eigen::Map<const Eigen::VectorXd>(w.data(), w.size()));
                   for (std::size_t i = 0; i < o.size(); ++i) o[i] += r[i];
                 },
                 [&m](auto l, auto o) {
                   const Eigen::VectorXd r =
                       m.apply_constraint_adjoint(Eigen::Map<const Eigen::VectorXd>(l.data(), l.size()));
                   for (std::size_t i = 0; i < o.size(); ++i) o[i] += r[i];
                 }});
  double worst = 0.0;
  for (const auto& op : ops) {
    for (int pair = 0; pair < kAdjointPairs; ++pair) {
      const Eigen::VectorXd w = random_vector(op.size, rng);
      const Eigen::VectorXd l = random_vector(duals, rng);
      Eigen::VectorXd dw = Eigen::VectorXd::Zero(duals);
      Eigen::VectorXd dl = Eigen::VectorXd::Zero(op.size);
      op.fwd({w.data(), op.size}, {dw.data(), duals});
      op.adj({l.data(), duals}, {dl.data(), op.size});
      worst = std::max(worst, std::abs(dw.dot(l) - w.dot(dl)) / (w.norm() * l.norm()));
    }
  }
  return worst;
}

Outcome criterion_adjoint() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (const auto& c : kOperatorCases) {
    const auto p = random_problem(c.kind, c.dim, c.extent, c.nt, 3, 0.1, 7);
    if (c.kind == ProblemKind::kMatrix) {
      worst = std::max(worst, adjoint_ratio(MatrixOmt(to_matrix_problem(p)), rng));
    } else {
      worst = std::max(worst, adjoint_ratio(VectorOmt(to_vector_problem(p)), rng));
    }
  }
  return {worst <= kAdjointTol, fmt("max |<Dw,l>-<w,D*l>|/(|w||l|) = %.2e over D1, D2, D3 and D", worst)};
}

// ---- 2, 3: derivatives --------------------------------------------------------------------

double lagrangian(const TransportModel& m, const Eigen::VectorXd& w, const Eigen::VectorXd& l) {
  const Grid& g = m.grid();
  return m.cost(w) / (g.cell_volume() * g.ht()) + l.dot(m.apply_constraint(w) - m.constraint_rhs());
}

Outcome criterion_gradient() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (const auto& c : kOperatorCases) {
    for (int inst = 0; inst < kGradientInstances; ++inst) {
      const auto p = random_problem(c.kind, c.dim, c.extent, c.nt, 3, 0.1, 100 + inst);
      const auto m = make_model(p);
      const Eigen::VectorXd w = random_state(*m, rng);
      const Eigen::VectorXd l = random_vector(m->dual_size(), rng);
      const KktResidual r = m->kkt_residual(w, l);
      Eigen::VectorXd fd_w(w.size());
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(w[i]));
        Eigen::VectorXd a = w, b = w;
        a[i] += h;
        b[i] -= h;
        fd_w[i] = (lagrangian(*m, a, l) - lagrangian(*m, b, l)) / (2 * h);
      }
      Eigen::VectorXd fd_l(l.size());
      for (Eigen::Index i = 0; i < l.size(); ++i) {
        Eigen::VectorXd a = l, b = l;
        a[i] += 1e-3;
        b[i] -= 1e-3;
        fd_l[i] = (lagrangian(*m, w, a) - lagrangian(*m, w, b)) / 2e-3;
      }
      worst = std::max({worst, test::relative_error(r.primal, fd_w), test::relative_error(r.dual, fd_l)});
    }
  }
  return {worst <= kGradientTol, fmt("max relative error vs central differences = %.2e", worst)};
}

Outcome criterion_hessian() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (const auto& c : kOperatorCases) {
    for (int inst = 0; inst < kGradientInstances; ++inst) {
      const auto p = random_problem(c.kind, c.dim, c.extent, c.nt, 3, 0.1, 200 + inst);
      const auto m = make_model(p);
      const Eigen::VectorXd w = random_state(*m, rng);
      const Eigen::VectorXd l = random_vector(m->dual_size(), rng);
      const auto [rb, re] = m->density_range();
      const auto h = m->hessian(w, ShiftPolicy{0.0, 0.0});
      const double scale = w.segment(rb, re - rb).cwiseAbs().maxCoeff();
      for (int dir = 0; dir < 3; ++dir) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(w.size());
        x.segment(rb, re - rb) = random_vector(re - rb, rng, scale);
        const Eigen::VectorXd hx = h.blocks.apply(x).segment(rb, re - rb);
        const double eps = 1e-5;
        const Eigen::VectorXd fd =
            (m->kkt_residual(w + eps * x, l).primal - m->kkt_residual(w - eps * x, l).primal).segment(rb, re - rb) /
            (2 * eps);
        worst = std::max(worst, test::relative_error(hx, fd));
      }
    }
  }
  return {worst <= kHessianTol, fmt("max relative error of the density block = %.2e", worst)};
}

// ---- 4 ----------------------------------------------------------------------------------

Outcome criterion_kernel() {
  std::string detail = "nullity";
  bool ok = true;
  for (int n = 2; n <= 5; ++n) {
    const int k = verify_kernel(OperatorBasis::standard(n));
    ok = ok && k == 1;
    detail += fmt(" n=%d:%d", n, k);
  }
  return {ok, detail};
}

// ---- solver runs shared by 5, 9, 10, 11 ---------------------------------------------------

struct Run {
  int iterations = 0;
  bool converged = false;
  double distance2 = 0.0;
  double mass_error = 0.0;
  std::string status;
};

GeneratorOptions disk(ProblemKind kind, int nx, int nt, double contrast, double gamma) {
  GeneratorOptions o;
  o.kind = kind;
  o.extent = {nx, nx, 1};
  o.nt = nt;
  o.contrast = contrast;
  o.gamma = gamma;
  return o;
}

SolverConfig config_for(ProblemKind kind, double tol_outer) {
  SolverConfig c;
  c.tol_outer = tol_outer;
  c.tol_inner = kind == ProblemKind::kVector ? 1e-2 : 1e-3;
  return c;
}

std::vector<std::pair<double, double>> mass_log;  // (mass error, tol_outer) of converged runs

Run run(const GeneratorOptions& o, const SolverConfig& c) {
  const ProblemFile p = generate(o);
  const auto m = make_model(p);
  const SolveResult r = solve(*m, c);
  Run out;
  out.iterations = static_cast<int>(r.trace.size());
  out.converged = r.converged;
  out.distance2 = r.distance2;
  out.status = r.failure ? r.failure_message : (r.converged ? "converged" : "not converged");
  for (double mass : m->slice_masses(r.state.w)) out.mass_error = std::max(out.mass_error, std::abs(mass - 1.0));
  if (r.converged) mass_log.emplace_back(out.mass_error, c.tol_outer);
  std::printf("      %s %dx%dx%d contrast=%g gamma=%g: %s in %d iterations, distance^2=%.6g\n",
              o.kind == ProblemKind::kMatrix ? "matrix" : "vector", o.extent[0], o.extent[1], o.nt, o.contrast,
              o.gamma, out.status.c_str(), out.iterations, out.distance2);
  std::fflush(stdout);
  return out;
}

Outcome band(const std::vector<std::tuple<Run, int, int>>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& [r, limit, reference] : runs) {
    ok = ok && r.converged && r.iterations <= limit;
    detail += fmt("%s%d iterations (limit %d, reference %d)", detail.empty() ? "" : "; ", r.iterations, limit,
                  reference);
  }
  return {ok, detail};
}

Outcome criterion_matrix_band() {
  const auto M = ProblemKind::kMatrix;
  return band({{run(disk(M, 16, 10, 10, 0.01), config_for(M, 1e-3)), 40, 19},
               {run(disk(M, 32, 20, 10, 0.01), config_for(M, 1e-3)), 55, 27}});
}

Outcome criterion_vector_band() {
  const auto V = ProblemKind::kVector;
  return band({{run(disk(V, 32, 10, 10, 0.01), config_for(V, 1e-3)), 25, 11},
               {run(disk(V, 64, 20, 10, 0.01), config_for(V, 1e-3)), 25, 12}});
}

Outcome criterion_trends() {
  const auto M = ProblemKind::kMatrix;
  const auto V = ProblemKind::kVector;
  auto series = [](const std::vector<Run>& runs, const char* name, bool& ok) {
    std::string s = std::string(name) + " ";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      ok = ok && runs[i].converged && (i == 0 || runs[i].iterations >= runs[i - 1].iterations);
      s += (i ? "->" : "") + std::to_string(runs[i].iterations);
    }
    return s;
  };
  bool ok = true;
  std::vector<Run> mg, vg, mc, vc;
  for (double gamma : {0.01, 0.1, 1.0}) mg.push_back(run(disk(M, 32, 20, 50, gamma), config_for(M, 1e-2)));
  for (double gamma : {0.01, 0.1, 1.0}) vg.push_back(run(disk(V, 32, 10, 100, gamma), config_for(V, 1e-3)));
  for (double contrast : {10.0, 50.0}) mc.push_back(run(disk(M, 16, 10, contrast, 0.01), config_for(M, 1e-3)));
  for (double contrast : {10.0, 100.0}) vc.push_back(run(disk(V, 32, 10, contrast, 0.01), config_for(V, 1e-3)));
  const std::string detail = series(mg, "matrix gamma", ok) + "; " + series(vg, "vector gamma", ok) + "; " +
                             series(mc, "matrix contrast", ok) + "; " + series(vc, "vector contrast", ok);
  return {ok, detail};
}

Outcome criterion_mass() {
  bool ok = !mass_log.empty();
  double worst = 0.0;
  for (const auto& [err, tol] : mass_log) {
    ok = ok && err <= tol;
    worst = std::max(worst, err / tol);
  }
  return {ok, fmt("%zu converged runs, max slice mass deviation / tol_outer = %.3g", mass_log.size(), worst)};
}

// ---- 6, 7 -------------------------------------------------------------------------------

Outcome criterion_oracle() {
  std::string detail;
  bool ok = true;
  for (int n : {1, 2}) {
    const auto p = random_problem(ProblemKind::kMatrix, 1, {4, 1, 1}, 3, n, 0.1, 17 + n);
    const auto m = make_model(p);
    SolverConfig c;
    c.tol_outer = 1e-9;
    c.max_outer = 200;
    const SolveResult r = solve(*m, c);
    const auto ref = test::DenseOracle(p).minimize();
    const double rel = std::abs(r.distance2 - ref.cost) / std::abs(ref.cost);
    ok = ok && r.converged && rel <= kOracleTol;
    detail += fmt("%sn=%d: sqp %.10g, oracle %.10g (rel %.1e, %d Newton steps)", detail.empty() ? "" : "; ", n,
                  r.distance2, ref.cost, rel, ref.iterations);
  }
  return {ok, detail};
}

Outcome criterion_scalar() {
  ProblemFile vec = random_problem(ProblemKind::kVector, 2, {8, 8, 1}, 6, 1, 0.1, 77);
  ProblemFile mat = vec;
  mat.kind = ProblemKind::kMatrix;
  mat.graph = Graph{};
  mat.basis = OperatorBasis::standard(1).elements;
  SolverConfig c;
  c.tol_outer = 1e-11;
  c.max_outer = 200;
  const SolveResult rv = solve(*make_model(vec), c);
  const SolveResult rm = solve(*make_model(mat), c);
  const double rel = std::abs(rv.distance2 - rm.distance2) / std::abs(rm.distance2);
  return {rv.converged && rm.converged && rel <= kScalarTol,
          fmt("vector %.14g, matrix %.14g, rel %.1e", rv.distance2, rm.distance2, rel)};
}

// ---- 8 ----------------------------------------------------------------------------------

Outcome criterion_pcg() {
  const auto p = generate(disk(ProblemKind::kMatrix, 16, 10, 10, 0.01));
  const auto m = make_model(p);
  const SqpState s = initialize(*m);
  const auto h = m->hessian(s.w, ShiftPolicy{});
  const KktResidual r = m->kkt_residual(s.w, s.lambda);
  const SparseSym schur = assemble_schur(m->constraint_matrix(), h.blocks);
  const Eigen::VectorXd rhs = r.dual - m->constraint_matrix() * h.blocks.apply_inverse(r.primal);
  const PcgResult pre = pcg(schur, ic_factorize(schur), rhs, kPcgTol, 100000);
  const PcgResult plain = cg(schur, rhs, kPcgTol, 100000);
  return {pre.converged && plain.converged && pre.iterations < plain.iterations,
          fmt("PCG %d iterations, CG %d iterations (Schur dimension %zu)", pre.iterations, plain.iterations,
              schur.dim)};
}

// ---- 12, 13 -----------------------------------------------------------------------------

Outcome criterion_zero_transport() {
  bool ok = true;
  std::string detail;
  for (auto kind : {ProblemKind::kMatrix, ProblemKind::kVector}) {
    GeneratorOptions o = disk(kind, 16, 10, 10, 0.01);
    o.name = "static";
    const Run r = run(o, config_for(kind, 1e-3));
    ok = ok && r.converged && r.distance2 <= kZeroTransportDistance && r.iterations <= kZeroTransportIterations;
    detail += fmt("%s%s: distance^2 %.1e in %d iterations", detail.empty() ? "" : "; ",
                  kind == ProblemKind::kMatrix ? "matrix" : "vector", r.distance2, r.iterations);
  }
  return {ok, detail};
}

Outcome criterion_bench_coverage() {
  bool large = false;
  for (const auto& c : bench_cases("table1")) large = large || (c.problem.extent[0] == 64 && c.problem.nt == 40);
  int three_d = 0;
  for (const auto& c : bench_cases("table7-3d")) three_d += c.problem.dim == 3;
  return {large && three_d == 3,
          fmt("bench table1 includes 64x64x40: %s; table7-3d has %d 3D cases (one-off runs are recorded in README)",
              large ? "yes" : "no", three_d)};
}

}  // namespace

int main() {
  report(1, "adjointness", criterion_adjoint);
  report(2, "gradient correctness", criterion_gradient);
  report(3, "density Hessian correctness", criterion_hessian);
  report(4, "kernel assumption", criterion_kernel);
  report(6, "dense oracle equivalence", criterion_oracle);
  report(7, "scalar consistency", criterion_scalar);
  report(8, "IC preconditioning", criterion_pcg);
  report(9, "matrix iteration band", criterion_matrix_band);
  report(10, "vector iteration band", criterion_vector_band);
  report(11, "monotone trends", criterion_trends);
  report(12, "zero transport", criterion_zero_transport);
  report(5, "mass conservation", criterion_mass);
  report(13, "large-run bench coverage", criterion_bench_coverage);
  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
