#include "drcvar/wc_dual.hpp"

#include "drcvar/errors.hpp"
#include "drcvar/risk_measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace drcvar {

namespace {

// Cholesky factor of Q_gamma = gamma I - Q, or nothing when gamma is outside
// the interior of the domain.
std::optional<Eigen::LLT<Matrix>> factor_shifted(const QuadraticForm& qf, const GammaDomain& dom, double gamma) {
  if (!std::isfinite(gamma) || !dom.contains(gamma)) return std::nullopt;
  const auto d = static_cast<Eigen::Index>(qf.dim());
  Matrix Qg = gamma * Matrix::Identity(d, d) - qf.Q();
  Eigen::LLT<Matrix> llt(Qg);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return llt;
}

// l(z) + g' Q_gamma^{-1} g with g = Qz + q, for every atom (as a column).
//
// Algebraically equal to (gamma z + q)' Q_gamma^{-1} (gamma z + q) - gamma ||z||^2 + c,
// but free of the O(gamma ||z||^2) cancellation when gamma is large.
Vector transformed_losses(const QuadraticForm& qf, const Eigen::LLT<Matrix>& llt, const Matrix& atoms) {
  const Matrix Zt = atoms.transpose();  // d x N
  const Matrix G = (qf.Q() * Zt).colwise() + qf.q();
  const Matrix W = llt.matrixL().solve(G);
  Vector base = (Zt.array() * (qf.Q() * Zt).array()).colwise().sum().transpose();
  base += 2.0 * (Zt.transpose() * qf.q());
  base.array() += qf.c();
  return base + W.colwise().squaredNorm().transpose();
}

void require_positive_radius(const RiskSpec& spec) {
  if (!(spec.radius > 0.0)) throw std::invalid_argument("the dual reformulation requires radius > 0");
}

void require_same_dim(const QuadraticForm& qf, std::size_t d) {
  if (qf.dim() != d) {
    throw DimensionError("quadratic form has dimension " + std::to_string(qf.dim()) + ", data has " +
                         std::to_string(d));
  }
}

double oracle_objective(double tau, double gamma, const Vector& z, const QuadraticForm& qf, const Vector& v) {
  return std::max(qf(v) - tau, 0.0) - gamma * (v - z).squaredNorm();
}

// Visits every point of a grid with `steps` points per axis spanning
// [center - radius, center + radius]^d, keeping the best.
void scan_grid(double tau, double gamma, const Vector& z, const QuadraticForm& qf, const Vector& center,
               double radius, std::size_t steps, double& best, Vector& best_v) {
  const auto d = center.size();
  steps = std::max<std::size_t>(steps, 2);
  const double h = 2.0 * radius / static_cast<double>(steps - 1);
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  Vector v(d);
  while (true) {
    for (Eigen::Index k = 0; k < d; ++k) {
      v[k] = center[k] - radius + h * static_cast<double>(idx[static_cast<std::size_t>(k)]);
    }
    const double val = oracle_objective(tau, gamma, z, qf, v);
    if (val > best) {
      best = val;
      best_v = v;
    }
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == steps) idx[k++] = 0;
    if (k == idx.size()) break;
  }
}

std::size_t capped_steps(std::size_t steps, Eigen::Index d) {
  constexpr double kMaxPoints = 4e6;
  while (steps > 3 && std::pow(static_cast<double>(steps), static_cast<double>(d)) > kMaxPoints) --steps;
  return steps;
}

}  // namespace

GammaDomain gamma_domain(const QuadraticForm& qf) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(qf.Q(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("eigenvalue computation failed in gamma_domain");
  GammaDomain dom;
  dom.lambda_max = es.eigenvalues().maxCoeff();
  dom.lower_open = dom.lambda_max >= 0.0;
  return dom;
}

ExtendedReal phi(double tau, double gamma, const Eigen::Ref<const Vector>& z, const QuadraticForm& qf) {
  require_same_dim(qf, static_cast<std::size_t>(z.size()));
  const auto llt = factor_shifted(qf, gamma_domain(qf), gamma);
  if (!llt) return ExtendedReal::infinity();
  const Vector g = qf.Q() * z + qf.q();
  const double inner = qf(z) + llt->matrixL().solve(g).squaredNorm();
  return ExtendedReal(std::max(inner - tau, 0.0));
}

double phi_grid_max(double tau, double gamma, const Eigen::Ref<const Vector>& z, const QuadraticForm& qf,
                    double grid_radius, std::size_t grid_steps) {
  require_same_dim(qf, static_cast<std::size_t>(z.size()));
  const Vector zc = z;
  double best = oracle_objective(tau, gamma, zc, qf, zc);
  Vector best_v = zc;
  scan_grid(tau, gamma, zc, qf, zc, grid_radius, capped_steps(grid_steps, zc.size()), best, best_v);
  return best;
}

double phi_oracle(double tau, double gamma, const Eigen::Ref<const Vector>& z, const QuadraticForm& qf,
                  double grid_radius, std::size_t grid_steps) {
  require_same_dim(qf, static_cast<std::size_t>(z.size()));
  const GammaDomain dom = gamma_domain(qf);
  if (!dom.contains(gamma) || gamma <= dom.lambda_max) {
    throw std::domain_error("phi_oracle: gamma outside the interior of the domain, supremum is unbounded");
  }
  const Vector zc = z;
  const auto d = zc.size();
  const std::size_t steps = capped_steps(grid_steps, d);

  // Stationary point of the quadratic branch; used only as a grid centre.
  const Matrix Qg = gamma * Matrix::Identity(d, d) - qf.Q();
  const Vector stationary = Qg.ldlt().solve(gamma * zc + qf.q());

  double best = oracle_objective(tau, gamma, zc, qf, zc);
  Vector best_v = zc;
  scan_grid(tau, gamma, zc, qf, zc, grid_radius, steps, best, best_v);
  if (stationary.allFinite()) scan_grid(tau, gamma, zc, qf, stationary, grid_radius, steps, best, best_v);

  // Compass search from the best grid point.
  double h = 2.0 * grid_radius / static_cast<double>(std::max<std::size_t>(steps, 2) - 1);
  Vector v = best_v;
  const double floor = 1e-13 * (1.0 + v.lpNorm<Eigen::Infinity>());
  while (h > floor) {
    bool moved = false;
    for (Eigen::Index k = 0; k < d; ++k) {
      for (const double sgn : {1.0, -1.0}) {
        Vector trial = v;
        trial[k] += sgn * h;
        const double val = oracle_objective(tau, gamma, zc, qf, trial);
        if (val > best) {
          best = val;
          v = trial;
          moved = true;
        }
      }
    }
    if (!moved) h *= 0.5;
  }
  return best;
}

ExtendedReal dual_objective(double gamma, const QuadraticForm& qf, const EmpiricalDistribution& dist,
                            const RiskSpec& spec) {
  require_positive_radius(spec);
  require_same_dim(qf, dist.dim());
  const auto llt = factor_shifted(qf, gamma_domain(qf), gamma);
  if (!llt) return ExtendedReal::infinity();
  Vector w = transformed_losses(qf, *llt, dist.atoms());
  // c is already inside the transformed losses; CVaR is translation equivariant.
  w.array() += gamma * spec.radius * spec.radius / spec.alpha;
  return ExtendedReal(cvar_discrete(w, spec.alpha).cvar);
}

ExtendedReal joint_dual_objective(double tau, double gamma, const QuadraticForm& qf,
                                  const EmpiricalDistribution& dist, const RiskSpec& spec) {
  require_positive_radius(spec);
  require_same_dim(qf, dist.dim());
  const auto llt = factor_shifted(qf, gamma_domain(qf), gamma);
  if (!llt) return ExtendedReal::infinity();
  const Vector h = transformed_losses(qf, *llt, dist.atoms());
  const double mean_phi = (h.array() - tau).max(0.0).mean();
  return ExtendedReal(tau + (gamma * spec.radius * spec.radius + mean_phi) / spec.alpha);
}

DualCertificate worst_case_cvar(const QuadraticForm& qf, const EmpiricalDistribution& dist, const RiskSpec& spec,
                                const DualSearchSettings& settings) {
  require_positive_radius(spec);
  require_same_dim(qf, dist.dim());
  const GammaDomain dom = gamma_domain(qf);
  const double lo = dom.lower_open ? dom.lambda_max * (1.0 + 1e-6) + 1e-9 : 0.0;

  DualCertificate cert;
  const Matrix& atoms = dist.atoms();
  const double transport = spec.radius * spec.radius / spec.alpha;
  auto eval = [&](double gamma) -> ExtendedReal {
    ++cert.evaluations;
    const auto llt = factor_shifted(qf, dom, gamma);
    if (!llt) return ExtendedReal::infinity();
    Vector w = transformed_losses(qf, *llt, atoms);
    w.array() += gamma * transport;
    return ExtendedReal(cvar_discrete(w, spec.alpha).cvar);
  };

  auto bracket_error = [&](const std::string& what, double a, double b, double c) {
    std::ostringstream os;
    os << "worst_case_cvar: " << what << " (bracket a=" << a << " b=" << b << " c=" << c
       << ", lambda_max=" << dom.lambda_max << ", evaluations=" << cert.evaluations << ")";
    return SolverError(os.str());
  };

  // Bracket the minimizer of the convex, coercive dual by doubling.
  double a = lo;
  ExtendedReal fa = eval(a);
  if (fa.is_infinite()) throw bracket_error("objective infinite at the lower margin", a, a, a);
  const double h0 = 1e-2 * std::max(1.0, std::abs(lo));
  double b = lo + h0;
  ExtendedReal fb = eval(b);
  double c = b;
  if (fb >= fa) {
    c = b;
    b = a;
    fb = fa;
  } else {
    c = lo + 2.0 * (b - lo);
    ExtendedReal fc = eval(c);
    std::size_t doublings = 0;
    while (fc < fb) {
      if (++doublings > settings.max_doublings) throw bracket_error("upper bracket did not close", a, b, c);
      a = b;
      b = c;
      fb = fc;
      c = lo + 2.0 * (c - lo);
      fc = eval(c);
    }
  }

  // Golden-section search on [a, c].
  constexpr double kInvPhi = 0.6180339887498949;
  double best_gamma = b;
  ExtendedReal best_f = fb;
  double x1 = c - kInvPhi * (c - a);
  double x2 = a + kInvPhi * (c - a);
  ExtendedReal f1 = eval(x1);
  ExtendedReal f2 = eval(x2);
  auto width_ok = [&] {
    return (c - a) <= settings.relative_width * std::max({std::abs(a), std::abs(c), 1e-6});
  };
  std::size_t iterations = 0;
  while (!width_ok()) {
    if (++iterations > settings.max_golden_iterations) throw bracket_error("golden section did not converge", a, b, c);
    if (f1 <= f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - kInvPhi * (c - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (c - a);
      f2 = eval(x2);
    }
  }
  for (const auto& [g, f] : {std::pair{x1, f1}, std::pair{x2, f2}, std::pair{a, eval(a)}}) {
    if (f < best_f) {
      best_f = f;
      best_gamma = g;
    }
  }

  const auto llt = factor_shifted(qf, dom, best_gamma);
  if (!llt) throw bracket_error("minimizer left the domain", a, best_gamma, c);
  const Vector h = transformed_losses(qf, *llt, atoms);
  Vector w = h;
  w.array() += best_gamma * transport;
  const RiskReport risk = cvar_discrete(w, spec.alpha);

  cert.gamma_star = best_gamma;
  cert.value = risk.cvar;
  cert.tau_star = risk.var - best_gamma * transport;
  cert.at_boundary = dom.lower_open && (best_gamma - lo) <= 4.0 * settings.relative_width * std::max(lo, 1e-6);

  const Matrix Zt = atoms.transpose();
  const Matrix G = (qf.Q() * Zt).colwise() + qf.q();
  cert.per_atom_transported = (Zt + llt->solve(G)).transpose();

  const double mean_phi = (h.array() - cert.tau_star).max(0.0).mean();
  cert.joint_value = cert.tau_star + (best_gamma * spec.radius * spec.radius + mean_phi) / spec.alpha;
  if (std::abs(cert.joint_value - cert.value) > settings.consistency_tolerance * (1.0 + std::abs(cert.value))) {
    std::ostringstream os;
    os << "worst_case_cvar: one- and two-variable duals disagree (" << cert.value << " vs " << cert.joint_value
       << ")";
    throw SolverError(os.str());
  }
  return cert;
}

double worst_case_mse_closed(const AffineEstimator& est, const EmpiricalDistribution& dist, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("radius must be >= 0");
  const double mse = losses(est, dist).mean();
  const Matrix F = residual_map(est);
  const double sigma = Eigen::JacobiSVD<Matrix>(F).singularValues()(0);
  const double root = std::sqrt(mse) + radius * sigma;
  return root * root;
}

double worst_case_mse_spectral(const AffineEstimator& est, const EmpiricalDistribution& dist, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("radius must be >= 0");
  check_compatible(est, dist);
  const auto n = static_cast<Eigen::Index>(dist.latent_dim());
  const auto m = static_cast<Eigen::Index>(dist.observation_dim());
  const Matrix& Z = dist.atoms();
  const Matrix E = Z.leftCols(n) - Z.rightCols(m) * est.A().transpose() - Vector::Ones(Z.rows()) * est.b().transpose();
  if (radius == 0.0) return E.rowwise().squaredNorm().mean();

  const Matrix FFt = Matrix::Identity(n, n) + est.A() * est.A().transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(FFt);
  const Vector s = es.eigenvalues();
  const Vector mass = (E * es.eigenvectors()).array().square().colwise().mean().transpose();
  const double s_top = s.maxCoeff();
  const double r2 = radius * radius;

  auto value = [&](double g) {
    double acc = g * r2;
    for (Eigen::Index j = 0; j < n; ++j) acc += g * mass[j] / (g - s[j]);
    return acc;
  };
  auto slope = [&](double g) {
    double acc = r2;
    for (Eigen::Index j = 0; j < n; ++j) acc -= mass[j] * s[j] / ((g - s[j]) * (g - s[j]));
    return acc;
  };

  // The objective is convex on (s_top, inf); bisect on its slope.
  double weighted = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) weighted += mass[j] * s[j];
  double lo = s_top;
  double hi = s_top + std::sqrt(weighted) / radius + 1e-300;
  if (slope(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) < 0.0 ? lo : hi) = mid;
  }
  return value(hi);
}

PrimalCandidate primal_candidate(const DualCertificate& cert, const QuadraticForm& qf,
                                 const EmpiricalDistribution& dist, const RiskSpec& spec, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("primal_candidate: t must lie in [0, 1]");
  require_same_dim(qf, dist.dim());
  if (cert.per_atom_transported.rows() != dist.atoms().rows() ||
      cert.per_atom_transported.cols() != dist.atoms().cols()) {
    throw DimensionError("certificate does not match the distribution");
  }
  const Matrix D = cert.per_atom_transported - dist.atoms();
  const double msd = D.rowwise().squaredNorm().mean();
  double step = t;
  const double r2 = spec.radius * spec.radius;
  if (step * step * msd > r2) step = std::sqrt(r2 / msd);

  EmpiricalDistribution moved(dist.atoms() + step * D, dist.latent_dim(), dist.observation_dim());
  Vector vals(static_cast<Eigen::Index>(moved.size()));
  for (std::size_t i = 0; i < moved.size(); ++i) vals[static_cast<Eigen::Index>(i)] = qf(moved.atom(i));
  const double bound = cvar_discrete(vals, spec.alpha).cvar;
  return PrimalCandidate{std::move(moved), bound, step, step * step * msd};
}

}  // namespace drcvar
