#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace drcvar {

/// CVaR and VaR of an equally weighted discrete loss sample.
struct RiskReport {
  double cvar = 0.0;
  /// Minimizing tau of the Rockafellar-Uryasev objective; the (k+1)-th largest
  /// loss with k = floor(alpha N).
  double var = 0.0;
  /// Number of losses strictly greater than `var`.
  std::size_t tail_count = 0;
};

/// Exact CVaR at level alpha of the uniform distribution on `losses`:
///   min_tau  tau + (1/alpha) mean((l_i - tau)_+).
///
/// Computed from the descending order statistics. alpha * N < 1 yields the
/// maximum loss. Throws std::invalid_argument for alpha outside (0, 1], an
/// empty sample or non-finite losses.
RiskReport cvar_discrete(const Eigen::Ref<const Eigen::VectorXd>& losses, double alpha);

/// tau + (1/alpha) mean((l_i - tau)_+), the objective minimized by cvar_discrete.
double cvar_objective(const Eigen::Ref<const Eigen::VectorXd>& losses, double alpha, double tau);

}  // namespace drcvar
