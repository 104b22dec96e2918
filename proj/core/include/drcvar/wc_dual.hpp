#pragma once

#include "drcvar/core_model.hpp"
#include "drcvar/extended_real.hpp"

#include <cstddef>
#include <utility>

namespace drcvar {

/// Feasible multipliers {gamma >= 0 : gamma I - Q > 0}.
///
/// This is (lambda_max, inf) when lambda_max(Q) >= 0 and [0, inf) otherwise.
struct GammaDomain {
  double lambda_max = 0.0;
  /// True when the lower end lambda_max is excluded (lambda_max >= 0).
  bool lower_open = true;

  double lower_bound() const { return lower_open ? lambda_max : 0.0; }
  bool contains(double gamma) const { return lower_open ? gamma > lambda_max : gamma >= 0.0; }
};

GammaDomain gamma_domain(const QuadraticForm& qf);

/// Per-atom dual transform
///   phi(tau, gamma, z) = sup_v (l(v) - tau)_+ - gamma ||v - z||^2
/// for the loss l = qf, in closed form
///   ((gamma z + q)' (gamma I - Q)^{-1} (gamma z + q) - gamma ||z||^2 + c - tau)_+
/// on the interior of the gamma domain, and +infinity elsewhere (including
/// the boundary gamma = lambda_max).
ExtendedReal phi(double tau, double gamma, const Eigen::Ref<const Vector>& z, const QuadraticForm& qf);

/// Raw grid maximum of (l(v) - tau)_+ - gamma ||v - z||^2 over a cube of
/// half-width `grid_radius` centred at z with `grid_steps` points per axis.
/// Defined for every gamma; used to observe divergence outside the domain.
double phi_grid_max(double tau, double gamma, const Eigen::Ref<const Vector>& z, const QuadraticForm& qf,
                    double grid_radius, std::size_t grid_steps);

/// Brute-force phi: dense grids around z and around the stationary point,
/// then compass-search refinement from the best grid point. A lower bound on
/// phi that converges to it. Throws std::domain_error when gamma lies
/// outside the interior of the domain (the supremum is unbounded there).
double phi_oracle(double tau, double gamma, const Eigen::Ref<const Vector>& z, const QuadraticForm& qf,
                  double grid_radius, std::size_t grid_steps);

/// One-dimensional dual
///   CVaR_alpha over atoms of (gamma z + q)' Q_gamma^{-1} (gamma z + q) + gamma (r^2/alpha - ||z||^2)
/// plus qf.c(). Infinite outside the interior of the gamma domain.
ExtendedReal dual_objective(double gamma, const QuadraticForm& qf, const EmpiricalDistribution& dist,
                            const RiskSpec& spec);

/// Two-variable dual  tau + (1/alpha)(gamma r^2 + mean_i phi(tau, gamma, z_i)).
ExtendedReal joint_dual_objective(double tau, double gamma, const QuadraticForm& qf,
                                  const EmpiricalDistribution& dist, const RiskSpec& spec);

struct DualCertificate {
  double gamma_star = 0.0;
  /// Minimizing tau of the two-variable dual at gamma_star.
  double tau_star = 0.0;
  /// Worst-case CVaR (offset c included).
  double value = 0.0;
  /// Row i holds the maximizer v_i = Q_gamma^{-1}(gamma z_i + q).
  Matrix per_atom_transported;
  /// gamma_star sits at the margin above lambda_max because the infimum is
  /// approached at the open boundary of the domain.
  bool at_boundary = false;
  /// Two-variable dual evaluated at (tau_star, gamma_star).
  double joint_value = 0.0;
  std::size_t evaluations = 0;
};

struct DualSearchSettings {
  double relative_width = 1e-10;
  std::size_t max_doublings = 400;
  std::size_t max_golden_iterations = 2000;
  /// Allowed |joint - one-dimensional| disagreement, relative to 1 + |value|.
  double consistency_tolerance = 1e-8;
};

/// Worst-case CVaR of qf over the type-2 Wasserstein ball of radius
/// spec.radius around `dist`, by bracketing and golden-section search on the
/// one-dimensional dual. Requires spec.radius > 0. Throws SolverError when
/// the bracket does not close or the two dual forms disagree.
DualCertificate worst_case_cvar(const QuadraticForm& qf, const EmpiricalDistribution& dist, const RiskSpec& spec,
                                const DualSearchSettings& settings = {});

/// (sqrt(MSE_0) + r sigma_max(F))^2 with F = [-I, A].
///
/// The worst-case mean squared error when every singular value of F is equal
/// (always the case for n = 1). Otherwise an upper bound; see
/// worst_case_mse_spectral for the exact value.
double worst_case_mse_closed(const AffineEstimator& est, const EmpiricalDistribution& dist, double radius);

/// Exact worst-case mean squared error from the eigendecomposition of
/// F F' = I + A A':  min_{g > s_1}  g r^2 + sum_j g/(g - s_j) mean_i (u_j' e_i)^2,
/// where e_i are the nominal residuals. Shares no code with worst_case_cvar.
double worst_case_mse_spectral(const AffineEstimator& est, const EmpiricalDistribution& dist, double radius);

struct PrimalCandidate {
  EmpiricalDistribution distribution;
  double lower_bound = 0.0;
  /// Step actually used after enforcing the transport budget.
  double step = 0.0;
  double mean_squared_displacement = 0.0;
};

/// Moves atom i to z_i + t (v_i - z_i), shrinking t until the mean squared
/// displacement fits in r^2. The CVaR of qf under the moved atoms is a
/// feasible-point lower bound on the worst-case CVaR.
PrimalCandidate primal_candidate(const DualCertificate& cert, const QuadraticForm& qf,
                                 const EmpiricalDistribution& dist, const RiskSpec& spec, double t);

}  // namespace drcvar
