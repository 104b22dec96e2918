#pragma once

#include "drcvar/conic_solver.hpp"
#include "drcvar/core_model.hpp"
#include "drcvar/errors.hpp"
#include "drcvar/sdp_problem.hpp"
#include "drcvar/wc_dual.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace drcvar {

enum class FitMethod { dr_cvar, dr_mse, nominal_cvar, nominal_mse };

std::string to_string(FitMethod m);
/// Throws std::invalid_argument for unknown names.
FitMethod parse_fit_method(std::string_view name);

/// Raised when the conic solver returns anything but `optimal`.
class SolveFailure : public SolverError {
 public:
  SolveFailure(SolveStatus status, const std::string& what) : SolverError(what), status_(status) {}
  SolveStatus status() const { return status_; }

 private:
  SolveStatus status_;
};

struct FitResult {
  explicit FitResult(AffineEstimator e) : estimator(std::move(e)) {}

  AffineEstimator estimator;
  /// Optimal value of the fitted problem (SDP objective, or nominal MSE).
  double optimal_value = 0.0;
  double gamma = 0.0;
  double tau = 0.0;
  FitMethod method = FitMethod::dr_cvar;
  RiskSpec spec;
  /// |optimal_value - independent evaluation at the fitted estimator|: the
  /// worst-case dual for dr_* fits, the nominal CVaR for nominal fits.
  double cross_check_gap = 0.0;
  double cross_check_value = 0.0;
  /// The dual minimizer or the SDP multiplier sits at the open boundary
  /// gamma = sigma_max(F)^2 (only relaxed by the strict margin).
  bool boundary_gamma = false;
  double strict_margin = 0.0;
  std::size_t solver_iterations = 0;
  double solve_time_s = 0.0;
  /// Radius-zero dr_* requests are answered by the nominal problem.
  bool routed_to_nominal = false;
};

struct FitOptions {
  SolverSettings solver;
  /// Negative selects default_strict_margin(dist).
  double strict_margin = -1.0;
  DualSearchSettings dual;
};

/// 1e-5 (1 + |value|).
double cross_check_tolerance(double value);

/// Worst-case CVaR estimator via the SDP; cross-checked against
/// worst_case_cvar at the fitted estimator. Radius zero is routed to
/// fit_nominal_cvar. Throws SolveFailure on solver failure.
FitResult fit_dr_cvar(const EmpiricalDistribution& dist, const RiskSpec& spec, const FitOptions& options = {});

/// fit_dr_cvar at alpha = 1.
FitResult fit_dr_mse(const EmpiricalDistribution& dist, double radius, const FitOptions& options = {});

/// Least-squares affine regression of x on y (ridge 1e-10 when the
/// observation covariance is singular).
FitResult fit_nominal_mse(const EmpiricalDistribution& dist);

/// Nominal CVaR minimization as a small SDP (no transport terms).
FitResult fit_nominal_cvar(const EmpiricalDistribution& dist, double alpha, const FitOptions& options = {});

/// Dispatch on `method`. dr_mse ignores spec.alpha; nominal_* ignore spec.radius.
FitResult fit(const EmpiricalDistribution& dist, FitMethod method, const RiskSpec& spec, const FitOptions& options = {});

}  // namespace drcvar
