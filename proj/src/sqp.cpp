#include "momt/sqp.hpp"

#include <cmath>
#include <sstream>

namespace momt {

void SolverConfig::validate() const {
  auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open_unit(tol_outer) && !absolute_tol) throw Error(ErrorCode::kInvalidArgument, "tol_outer must lie in (0, 1)");
  if (!(tol_outer > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol_outer must be positive");
  if (!open_unit(tol_inner)) throw Error(ErrorCode::kInvalidArgument, "tol_inner must lie in (0, 1)");
  if (!open_unit(fraction_to_boundary)) throw Error(ErrorCode::kInvalidArgument, "fraction_to_boundary must lie in (0, 1)");
  if (!open_unit(backtrack)) throw Error(ErrorCode::kInvalidArgument, "backtrack must lie in (0, 1)");
  if (!open_unit(sufficient_decrease)) throw Error(ErrorCode::kInvalidArgument, "sufficient_decrease must lie in (0, 1)");
  if (max_outer < 0 || max_inner < 1 || max_backtracks < 0 || boundary_bisections < 1) {
    throw Error(ErrorCode::kInvalidArgument, "iteration limits out of range");
  }
  if (!(tol_inner_cap >= tol_inner && tol_inner_cap < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tol_inner_cap must lie in [tol_inner, 1)");
  }
}

SqpState initialize(const TransportModel& model) {
  if (model.grid().nt < 2) throw Error(ErrorCode::kInvalidArgument, "at least two time cells are required");
  SqpState s;
  s.w = model.initial_primal();
  s.lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dual_size()));
  return s;
}

double residual_scale(const TransportModel& model, const SolverConfig& config) {
  if (config.absolute_tol) return 1.0;
  const double b = model.constraint_rhs().norm();
  return b > 0.0 ? b : 1.0;
}

double boundary_step(const TransportModel& model, const Eigen::VectorXd& w, const Eigen::VectorXd& dw,
                     double tau, int bisections) {
  double hi = 1.0 / tau;
  if (model.is_positive(w + hi * dw)) return hi;
  double lo = 0.0;
  for (int i = 0; i < bisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (model.is_positive(w + mid * dw)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

StepReport sqp_step(const TransportModel& model, const SchurAssembler& assembler, SqpState& state,
                    const SolverConfig& config, double tol_inner) {
  StepReport report;
  const KktResidual f0 = model.kkt_residual(state.w, state.lambda);
  const double phi0 = f0.norm();
  report.merit_before = phi0;

  const HessianApprox h = model.hessian(state.w, config.shift);
  report.hessian_shift = h.shift;
  const KktStep step = solve_kkt(assembler, model.constraint_matrix(), h.blocks, f0, tol_inner, config.max_inner,
                                 model.dual_kernel());
  report.pcg_iterations = step.pcg_iterations;
  report.pcg_residual = step.pcg_residual;
  report.pcg_converged = step.pcg_converged;
  report.ic_shift = step.ic_shift;

  // Only the reduced system is solved inexactly; its residual is what the
  // linearized constraint row leaves over.
  const Eigen::VectorXd schur_rhs = f0.dual - model.constraint_matrix() * h.blocks.apply_inverse(f0.primal);
  const double predicted = phi0 - step.pcg_residual * schur_rhs.norm();

  report.alpha_max = boundary_step(model, state.w, step.dw, config.fraction_to_boundary,
                                   config.boundary_bisections);
  double alpha = std::min(1.0, config.fraction_to_boundary * report.alpha_max);
  if (!(alpha > 0.0)) throw Error(ErrorCode::kLineSearchFailed, "no positive step keeps the density admissible");

  for (int k = 0;; ++k) {
    const Eigen::VectorXd w = state.w + alpha * step.dw;
    const Eigen::VectorXd lambda = state.lambda + alpha * step.dlambda;
    const double phi = model.kkt_residual(w, lambda).norm();
    if (phi < phi0 && phi <= phi0 - config.sufficient_decrease * alpha * predicted) {
      if (!model.is_positive(w)) throw Error(ErrorCode::kPositivityLost, "accepted iterate left the admissible cone");
      state.w = w;
      state.lambda = lambda;
      ++state.iteration;
      state.merit_history.push_back(phi);
      report.alpha = alpha;
      report.backtracks = k;
      report.merit_after = phi;
      return report;
    }
    if (k == config.max_backtracks) {
      std::ostringstream msg;
      msg << "no sufficient decrease after " << config.max_backtracks << " backtracks (merit " << phi0
          << ", last trial " << phi << ", alpha " << alpha << ", pcg residual " << step.pcg_residual << ")";
      throw Error(ErrorCode::kLineSearchFailed, msg.str());
    }
    alpha *= config.backtrack;
  }
}

SolveResult solve(const TransportModel& model, const SolverConfig& config) {
  config.validate();
  SolveResult result;
  result.state = initialize(model);
  const double scale = residual_scale(model, config);
  double tol_inner = config.tol_inner;
  int unconverged_run = 0;

  const SchurAssembler assembler(model.constraint_matrix(), model.hessian(result.state.w, config.shift).blocks);
  SqpState& state = result.state;
  state.merit_history.push_back(model.kkt_residual(state.w, state.lambda).norm());

  while (true) {
    const double merit = state.merit_history.back();
    result.residual = merit / scale;
    if (result.residual <= config.tol_outer) {
      result.converged = true;
      break;
    }
    if (state.iteration >= config.max_outer) break;

    TraceRecord rec;
    rec.iter = state.iteration + 1;
    rec.merit = merit;
    rec.cost = model.cost(state.w);
    StepReport report;
    try {
      report = sqp_step(model, assembler, state, config, tol_inner);
    } catch (const Error& e) {
      result.failure = e.code();
      result.failure_message = e.what();
      break;
    }
    rec.alpha = report.alpha;
    rec.pcg_iters = report.pcg_iterations;
    rec.shift = report.hessian_shift;
    result.trace.push_back(rec);

    if (report.pcg_converged) {
      unconverged_run = 0;
    } else {
      std::ostringstream msg;
      msg << "iteration " << rec.iter << ": inner solve stopped at relative residual " << report.pcg_residual
          << " after " << report.pcg_iterations << " iterations";
      result.warnings.push_back(msg.str());
      if (++unconverged_run >= 2 && tol_inner < config.tol_inner_cap) {
        tol_inner = std::min(config.tol_inner_cap, 2.0 * tol_inner);
        unconverged_run = 0;
        std::ostringstream relax;
        relax << "iteration " << rec.iter << ": inner tolerance relaxed to " << tol_inner;
        result.warnings.push_back(relax.str());
      }
    }
  }
  result.distance2 = model.cost(state.w);
  return result;
}

}  // namespace momt
