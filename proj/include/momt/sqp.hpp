#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "momt/error.hpp"
#include "momt/kkt_solver.hpp"
#include "momt/model.hpp"

namespace momt {

struct SolverConfig {
  double tol_outer = 1e-3;
  double tol_inner = 1e-3;
  int max_outer = 100;
  int max_inner = 500;
  double backtrack = 0.5;
  double sufficient_decrease = 1e-4;
  double fraction_to_boundary = 0.995;
  int max_backtracks = 30;
  int boundary_bisections = 12;
  /// Cap for the inner tolerance after repeated unconverged inner solves.
  double tol_inner_cap = 0.5;
  /// Measure the KKT residual in absolute terms instead of relative to ||b||.
  bool absolute_tol = false;
  ShiftPolicy shift;

  /// Throws kInvalidArgument when a field is out of range.
  void validate() const;
};

struct SqpState {
  Eigen::VectorXd w;
  Eigen::VectorXd lambda;
  int iteration = 0;
  std::vector<double> merit_history;
};

struct StepReport {
  double merit_before = 0.0;
  double merit_after = 0.0;
  double alpha = 0.0;
  double alpha_max = 0.0;
  int backtracks = 0;
  int pcg_iterations = 0;
  double pcg_residual = 0.0;
  bool pcg_converged = false;
  double hessian_shift = 0.0;
  double ic_shift = 0.0;
};

struct TraceRecord {
  int iter = 0;
  double merit = 0.0;  // KKT residual norm at the start of the iteration
  double cost = 0.0;
  double alpha = 0.0;
  int pcg_iters = 0;
  double shift = 0.0;
};

struct SolveResult {
  SqpState state;
  double distance2 = 0.0;
  bool converged = false;
  double residual = 0.0;  // final KKT measure compared with tol_outer
  std::vector<TraceRecord> trace;
  std::vector<std::string> warnings;
  /// Set when a hard error stopped the iteration; the state is the last accepted iterate.
  std::optional<ErrorCode> failure;
  std::string failure_message;
};

/// Linear-in-time density between the marginals, zero momentum, flux and multiplier.
/// Throws kInvalidArgument for nt < 2.
SqpState initialize(const TransportModel& model);

/// Scale used to normalize the KKT residual: ||b||, or 1 for absolute tolerances.
double residual_scale(const TransportModel& model, const SolverConfig& config);

/// One inexact SQP iteration with fraction-to-boundary and backtracking on ||KKT residual||.
/// The state is updated in place only when a step is accepted.
StepReport sqp_step(const TransportModel& model, const SchurAssembler& assembler, SqpState& state,
                    const SolverConfig& config, double tol_inner);

SolveResult solve(const TransportModel& model, const SolverConfig& config);

/// Largest step in [0, 1/tau] keeping the density positive, by bisection.
double boundary_step(const TransportModel& model, const Eigen::VectorXd& w, const Eigen::VectorXd& dw,
                     double tau, int bisections);

}  // namespace momt
