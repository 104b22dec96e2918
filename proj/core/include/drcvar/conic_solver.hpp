#pragma once

#include "drcvar/sdp_problem.hpp"

#include <cstddef>
#include <functional>

namespace drcvar {

struct SolverSettings {
  double tol_gap = 1e-8;
  double tol_feas = 1e-8;
  std::size_t max_iter = 200;
  /// Fraction of the distance to the cone boundary taken per step.
  double step_fraction = 0.99;
  /// Farkas-ratio threshold used by the infeasibility/unboundedness heuristics.
  double tol_infeas = 1e-8;
  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct IterationInfo {
  std::size_t iteration = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double mu = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double primal_step = 0.0;
  double dual_step = 0.0;
  double sigma = 0.0;
};

/// Optional per-iteration callback (logging, determinism tests).
using IterationObserver = std::function<void(const IterationInfo&)>;

/// Primal-dual path-following solver for  min c'x  s.t.  M0 + sum x_k M_k >= 0
/// (block diagonal), paired with its dual  max -<M0, Y>  s.t.  <M_k, Y> = c_k,
/// Y >= 0.
///
/// Infeasible start from scaled identities, Nesterov-Todd scaling,
/// Mehrotra predictor-corrector, dense Cholesky of the Schur complement.
/// When progress stops short of the tolerances (stalled or slow steps, a
/// breakdown, the iteration limit) the best iterate is returned as optimal if
/// it is within 100x of every tolerance; `message` then starts with
/// "reduced accuracy". max_iter otherwise also returns the best iterate.
/// Infeasibility is reported from divergence of approximate Farkas ratios:
///   infeasible  when ||(<M_k, Y>)_k|| <= tol_infeas * (-<M0, Y>),
///   unbounded   when sum x_k M_k >= -tol_infeas * (-c'x) I, ||x|| > 1e8, c'x < 0.
SdpSolution solve_sdp(const SdpProblem& problem, const SolverSettings& settings = {},
                      const IterationObserver& observer = {});

}  // namespace drcvar
