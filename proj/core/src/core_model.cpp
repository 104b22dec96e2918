#include "drcvar/core_model.hpp"

#include "drcvar/errors.hpp"

#include <cmath>
#include <string>

namespace drcvar {

namespace {

std::string shape(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

EmpiricalDistribution::EmpiricalDistribution(Matrix atoms, std::size_t n, std::size_t m)
    : atoms_(std::move(atoms)), n_(n), m_(m) {
  if (atoms_.rows() < 1) throw DataError("empirical distribution needs at least one atom");
  if (static_cast<std::size_t>(atoms_.cols()) != n_ + m_) {
    throw DimensionError("atoms are " + shape(atoms_.rows(), atoms_.cols()) + " but n + m = " +
                         std::to_string(n_ + m_));
  }
  if (n_ == 0) throw DimensionError("latent dimension n must be positive");
  if (!atoms_.allFinite()) throw DataError("atoms contain non-finite entries");
}

AffineEstimator::AffineEstimator(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != b_.size()) {
    throw DimensionError("A is " + shape(A_.rows(), A_.cols()) + " but b has " + std::to_string(b_.size()) +
                         " entries");
  }
  if (!A_.allFinite() || !b_.allFinite()) throw DataError("estimator contains non-finite entries");
}

AffineEstimator AffineEstimator::zero(std::size_t n, std::size_t m) {
  return {Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)),
          Vector::Zero(static_cast<Eigen::Index>(n))};
}

Vector AffineEstimator::predict(const Eigen::Ref<const Vector>& y) const {
  if (y.size() != A_.cols()) throw DimensionError("observation has wrong length");
  return A_ * y + b_;
}

QuadraticForm::QuadraticForm(Matrix Q, Vector q, double c) : Q_(std::move(Q)), q_(std::move(q)), c_(c) {
  if (Q_.rows() != Q_.cols()) throw DimensionError("Q must be square, got " + shape(Q_.rows(), Q_.cols()));
  if (q_.size() != Q_.rows()) throw DimensionError("q length does not match Q");
  if (!Q_.allFinite() || !q_.allFinite() || !std::isfinite(c_)) {
    throw DataError("quadratic form has non-finite entries");
  }
  Q_ = (0.5 * (Q_ + Q_.transpose())).eval();
}

double QuadraticForm::operator()(const Eigen::Ref<const Vector>& z) const {
  if (z.size() != q_.size()) throw DimensionError("point has wrong length for quadratic form");
  return z.dot(Q_ * z) + 2.0 * q_.dot(z) + c_;
}

RiskSpec::RiskSpec(double alpha_, double radius_) : alpha(alpha_), radius(radius_) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw std::invalid_argument("radius must be finite and >= 0");
}

Matrix residual_map(const AffineEstimator& est) {
  const auto n = est.A().rows();
  const auto m = est.A().cols();
  Matrix F(n, n + m);
  F.leftCols(n) = -Matrix::Identity(n, n);
  F.rightCols(m) = est.A();
  return F;
}

QuadraticForm affine_to_quadratic(const AffineEstimator& est) {
  const Matrix F = residual_map(est);
  return {F.transpose() * F, F.transpose() * est.b(), est.b().squaredNorm()};
}

double loss_eval(const AffineEstimator& est, const Eigen::Ref<const Vector>& z) {
  const auto n = est.A().rows();
  const auto m = est.A().cols();
  if (z.size() != n + m) throw DimensionError("point has length " + std::to_string(z.size()) + ", expected " +
                                              std::to_string(n + m));
  return (z.head(n) - est.A() * z.tail(m) - est.b()).squaredNorm();
}

Vector losses(const AffineEstimator& est, const EmpiricalDistribution& dist) {
  check_compatible(est, dist);
  const auto n = static_cast<Eigen::Index>(dist.latent_dim());
  const auto m = static_cast<Eigen::Index>(dist.observation_dim());
  const Matrix& Z = dist.atoms();
  const Matrix R = Z.leftCols(n) - Z.rightCols(m) * est.A().transpose() - Vector::Ones(Z.rows()) * est.b().transpose();
  return R.rowwise().squaredNorm();
}

void check_compatible(const AffineEstimator& est, const EmpiricalDistribution& dist) {
  if (est.latent_dim() != dist.latent_dim() || est.observation_dim() != dist.observation_dim()) {
    throw DimensionError("estimator is " + shape(est.A().rows(), est.A().cols()) + " but distribution has n=" +
                         std::to_string(dist.latent_dim()) + ", m=" + std::to_string(dist.observation_dim()));
  }
}

}  // namespace drcvar
