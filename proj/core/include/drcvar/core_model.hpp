#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace drcvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Nominal distribution: N equally weighted atoms z_i = (x_i, y_i) in R^(n+m).
///
/// Atoms are the rows of an N x d matrix. The split of each row into the
/// latent part x (first n entries) and the observation y (last m entries) is
/// metadata held here, not on the atoms themselves.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution(Matrix atoms, std::size_t n, std::size_t m);

  const Matrix& atoms() const { return atoms_; }
  std::size_t size() const { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t dim() const { return n_ + m_; }
  std::size_t latent_dim() const { return n_; }
  std::size_t observation_dim() const { return m_; }

  Eigen::VectorXd atom(std::size_t i) const { return atoms_.row(static_cast<Eigen::Index>(i)).transpose(); }
  auto latent(std::size_t i) const {
    return atoms_.row(static_cast<Eigen::Index>(i)).head(static_cast<Eigen::Index>(n_)).transpose();
  }
  auto observation(std::size_t i) const {
    return atoms_.row(static_cast<Eigen::Index>(i)).tail(static_cast<Eigen::Index>(m_)).transpose();
  }

 private:
  Matrix atoms_;
  std::size_t n_;
  std::size_t m_;
};

/// psi(y) = A y + b with A of shape n x m.
class AffineEstimator {
 public:
  AffineEstimator(Matrix A, Vector b);

  /// The zero estimator for the given shape.
  static AffineEstimator zero(std::size_t n, std::size_t m);

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  std::size_t latent_dim() const { return static_cast<std::size_t>(A_.rows()); }
  std::size_t observation_dim() const { return static_cast<std::size_t>(A_.cols()); }

  Vector predict(const Eigen::Ref<const Vector>& y) const;

 private:
  Matrix A_;
  Vector b_;
};

/// z -> z'Qz + 2q'z + c. Q is symmetrized on construction.
class QuadraticForm {
 public:
  QuadraticForm(Matrix Q, Vector q, double c = 0.0);

  const Matrix& Q() const { return Q_; }
  const Vector& q() const { return q_; }
  double c() const { return c_; }
  std::size_t dim() const { return static_cast<std::size_t>(Q_.rows()); }

  double operator()(const Eigen::Ref<const Vector>& z) const;

  QuadraticForm with_offset(double c) const { return QuadraticForm(Q_, q_, c); }

 private:
  Matrix Q_;
  Vector q_;
  double c_;
};

/// Risk level alpha in (0, 1] and type-2 Wasserstein radius r >= 0.
struct RiskSpec {
  double alpha = 1.0;
  double radius = 0.0;

  RiskSpec() = default;
  RiskSpec(double alpha_, double radius_);
};

/// F = [-I_n, A], the linear part of the residual x - Ay - b up to sign.
Matrix residual_map(const AffineEstimator& est);

/// Q = F'F, q = F'b, c = b'b so that z'Qz + 2q'z + c = ||x - Ay - b||^2.
QuadraticForm affine_to_quadratic(const AffineEstimator& est);

/// ||x - Ay - b||^2 at z = (x, y).
double loss_eval(const AffineEstimator& est, const Eigen::Ref<const Vector>& z);

/// Squared-error loss of `est` at every atom of `dist`.
Vector losses(const AffineEstimator& est, const EmpiricalDistribution& dist);

/// Throws DimensionError unless `est` matches the (n, m) split of `dist`.
void check_compatible(const AffineEstimator& est, const EmpiricalDistribution& dist);

}  // namespace drcvar
