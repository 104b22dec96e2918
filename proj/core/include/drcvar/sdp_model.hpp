#pragma once

#include "drcvar/core_model.hpp"
#include "drcvar/sdp_problem.hpp"

namespace drcvar {

/// 1e-9 (1 + max |atom entry|): the default relaxation of the strict LMI.
double default_strict_margin(const EmpiricalDistribution& dist);

/// Worst-case CVaR estimation SDP over variables [vec(A), b, gamma, tau, s]:
///
///   minimize   tau + (gamma r^2 + mean_i s_i) / alpha
///   subject to [gamma I_d, F'; F, I_n] >= margin I,          F = [-I_n, A]
///              [tau + s_i + gamma ||z_i||^2, gamma z_i', -b';
///               gamma z_i,                   gamma I_d,  F';
///               -b,                          F,          I_n] >= 0   for each atom
///              gamma >= 0,  s_i >= 0.
///
/// Requires spec.radius > 0; radius zero is the nominal problem below.
SdpProblem build_drcvar_sdp(const EmpiricalDistribution& dist, const RiskSpec& spec, double strict_margin);

/// Same variables, objective and feasible set as build_drcvar_sdp, with each
/// per-atom block replaced by the congruent T' M T, T = [1, 0; -z_i, I]:
///
///   [tau + s_i,   0,         -(F z_i + b)';
///    0,           gamma I_d,  F';
///    -(F z_i + b), F,         I_n] >= 0.
///
/// The gamma z_i entries are gone, which keeps the blocks well scaled when
/// the optimal gamma is large (small radii). Used by the estimation fits.
SdpProblem build_drcvar_sdp_centered(const EmpiricalDistribution& dist, const RiskSpec& spec, double strict_margin);

/// Nominal CVaR estimation over [vec(A), b, tau, s]:
///   minimize tau + mean_i s_i / alpha
///   subject to [tau + s_i, e_i'; e_i, I_n] >= 0 with e_i = x_i - A y_i - b, s_i >= 0.
SdpProblem build_nominal_cvar_sdp(const EmpiricalDistribution& dist, double alpha);

struct ExtractedSolution {
  AffineEstimator estimator;
  double gamma = 0.0;
  double tau = 0.0;
  Eigen::VectorXd s;
  /// Smallest eigenvalue over all blocks at the solution.
  double worst_lmi_eigenvalue = 0.0;
};

/// Unpacks the variable layout and validates s >= -1e-9, gamma >= -1e-9 and
/// every block >= -1e-7 (relative to its scale). Throws SolverError on a
/// non-optimal status or a failed validation.
ExtractedSolution extract_estimator(const SdpProblem& problem, const SdpSolution& sol);

}  // namespace drcvar
