#include "drcvar/estimation.hpp"

#include "drcvar/risk_measures.hpp"
#include "drcvar/sdp_model.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace drcvar {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SdpSolution solve_or_throw(const SdpProblem& problem, const SolverSettings& settings, const char* what) {
  SdpSolution sol = solve_sdp(problem, settings);
  if (sol.status != SolveStatus::optimal) {
    std::ostringstream os;
    os << what << ": solver returned " << to_string(sol.status) << " after " << sol.iterations
       << " iterations (gap " << sol.duality_gap << ", primal residual " << sol.primal_residual
       << ", dual residual " << sol.dual_residual << ")";
    if (!sol.message.empty()) os << ": " << sol.message;
    throw SolveFailure(sol.status, os.str());
  }
  return sol;
}

}  // namespace

std::string to_string(FitMethod m) {
  switch (m) {
    case FitMethod::dr_cvar: return "dr_cvar";
    case FitMethod::dr_mse: return "dr_mse";
    case FitMethod::nominal_cvar: return "nominal_cvar";
    case FitMethod::nominal_mse: return "nominal_mse";
  }
  return "unknown";
}

FitMethod parse_fit_method(std::string_view name) {
  if (name == "dr_cvar") return FitMethod::dr_cvar;
  if (name == "dr_mse") return FitMethod::dr_mse;
  if (name == "nominal_cvar") return FitMethod::nominal_cvar;
  if (name == "nominal_mse") return FitMethod::nominal_mse;
  throw std::invalid_argument("unknown fit method '" + std::string(name) + "'");
}

double cross_check_tolerance(double value) { return 1e-5 * (1.0 + std::abs(value)); }

FitResult fit_dr_cvar(const EmpiricalDistribution& dist, const RiskSpec& spec, const FitOptions& options) {
  if (spec.radius == 0.0) {
    FitResult r = fit_nominal_cvar(dist, spec.alpha, options);
    r.method = FitMethod::dr_cvar;
    r.spec = spec;
    r.routed_to_nominal = true;
    return r;
  }
  const auto t0 = Clock::now();
  const double margin = options.strict_margin >= 0.0 ? options.strict_margin : default_strict_margin(dist);
  const SdpProblem problem = build_drcvar_sdp_centered(dist, spec, margin);
  const SdpSolution sol = solve_or_throw(problem, options.solver, "fit_dr_cvar");
  ExtractedSolution ex = extract_estimator(problem, sol);

  FitResult r{std::move(ex.estimator)};
  r.method = FitMethod::dr_cvar;
  r.spec = spec;
  r.optimal_value = sol.objective_value;
  r.gamma = ex.gamma;
  r.tau = ex.tau;
  r.strict_margin = margin;
  r.solver_iterations = sol.iterations;
  r.solve_time_s = seconds_since(t0);

  const QuadraticForm qf = affine_to_quadratic(r.estimator);
  const DualCertificate cert = worst_case_cvar(qf, dist, spec, options.dual);
  r.cross_check_value = cert.value;
  r.cross_check_gap = std::abs(r.optimal_value - cert.value);
  const double sigma2 = gamma_domain(qf).lambda_max;
  r.boundary_gamma = cert.at_boundary || (r.gamma - sigma2) <= 1e-5 * (1.0 + std::abs(sigma2));
  return r;
}

FitResult fit_dr_mse(const EmpiricalDistribution& dist, double radius, const FitOptions& options) {
  FitResult r = fit_dr_cvar(dist, RiskSpec(1.0, radius), options);
  r.method = FitMethod::dr_mse;
  return r;
}

FitResult fit_nominal_mse(const EmpiricalDistribution& dist) {
  const auto t0 = Clock::now();
  const auto n = static_cast<Eigen::Index>(dist.latent_dim());
  const auto m = static_cast<Eigen::Index>(dist.observation_dim());
  const Matrix& Z = dist.atoms();
  const Vector xbar = Z.leftCols(n).colwise().mean().transpose();
  const Vector ybar = Z.rightCols(m).colwise().mean().transpose();
  const Matrix Xc = Z.leftCols(n).rowwise() - xbar.transpose();
  const Matrix Yc = Z.rightCols(m).rowwise() - ybar.transpose();
  const double inv_n = 1.0 / static_cast<double>(Z.rows());
  Matrix Cyy = Yc.transpose() * Yc * inv_n;
  const Matrix Cxy = Xc.transpose() * Yc * inv_n;

  Matrix A = Matrix::Zero(n, m);
  if (m > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Cyy, Eigen::EigenvaluesOnly);
    const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() <= 1e-12 * top) Cyy.diagonal().array() += 1e-10;
    A = Cyy.ldlt().solve(Cxy.transpose()).transpose();
  }
  const Vector b = xbar - A * ybar;

  FitResult r{AffineEstimator(std::move(A), b)};
  r.method = FitMethod::nominal_mse;
  r.spec = RiskSpec(1.0, 0.0);
  const Vector l = losses(r.estimator, dist);
  r.optimal_value = l.mean();
  const RiskReport risk = cvar_discrete(l, 1.0);
  r.tau = risk.var;
  r.cross_check_value = risk.cvar;
  r.cross_check_gap = std::abs(r.optimal_value - risk.cvar);
  r.solve_time_s = seconds_since(t0);
  return r;
}

FitResult fit_nominal_cvar(const EmpiricalDistribution& dist, double alpha, const FitOptions& options) {
  const auto t0 = Clock::now();
  const SdpProblem problem = build_nominal_cvar_sdp(dist, alpha);
  const SdpSolution sol = solve_or_throw(problem, options.solver, "fit_nominal_cvar");
  ExtractedSolution ex = extract_estimator(problem, sol);

  FitResult r{std::move(ex.estimator)};
  r.method = FitMethod::nominal_cvar;
  r.spec = RiskSpec(alpha, 0.0);
  r.optimal_value = sol.objective_value;
  r.tau = ex.tau;
  r.solver_iterations = sol.iterations;
  r.solve_time_s = seconds_since(t0);
  const RiskReport risk = cvar_discrete(losses(r.estimator, dist), alpha);
  r.cross_check_value = risk.cvar;
  r.cross_check_gap = std::abs(r.optimal_value - risk.cvar);
  return r;
}

FitResult fit(const EmpiricalDistribution& dist, FitMethod method, const RiskSpec& spec, const FitOptions& options) {
  switch (method) {
    case FitMethod::dr_cvar: return fit_dr_cvar(dist, spec, options);
    case FitMethod::dr_mse: return fit_dr_mse(dist, spec.radius, options);
    case FitMethod::nominal_cvar: return fit_nominal_cvar(dist, spec.alpha, options);
    case FitMethod::nominal_mse: return fit_nominal_mse(dist);
  }
  throw std::invalid_argument("unknown fit method");
}

}  // namespace drcvar
