#include "drcvar/errors.hpp"
#include "drcvar/risk_measures.hpp"
#include "drcvar/wc_dual.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace drcvar;
using drcvar::testing::Generator;
using drcvar::testing::golden_min;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

QuadraticForm scalar_form(double Q, double q, double c = 0.0) {
  return {Matrix::Constant(1, 1, Q), Vector::Constant(1, q), c};
}

EmpiricalDistribution line(std::initializer_list<double> pts) {
  Matrix atoms(static_cast<Eigen::Index>(pts.size()), 1);
  Eigen::Index i = 0;
  for (double p : pts) atoms(i++, 0) = p;
  // A one-dimensional sample is stored with n = 1 and no observation part.
  return {atoms, 1, 0};
}

// Independent evaluation of the one-dimensional dual: explicit inverse, no
// shared code with the library.
double dual_by_hand(double gamma, const QuadraticForm& qf, const EmpiricalDistribution& dist, const RiskSpec& spec) {
  const auto d = static_cast<Eigen::Index>(dist.dim());
  const Matrix inv = (gamma * Matrix::Identity(d, d) - qf.Q()).inverse();
  Vector w(static_cast<Eigen::Index>(dist.size()));
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const Vector z = dist.atom(i);
    const Vector g = gamma * z + qf.q();
    w(static_cast<Eigen::Index>(i)) = g.dot(inv * g) + gamma * (spec.radius * spec.radius / spec.alpha - z.squaredNorm());
  }
  return drcvar::testing::cvar_by_breakpoints(w, spec.alpha) + qf.c();
}

QuadraticForm random_form(Generator& g, Eigen::Index d) {
  return {g.symmetric(d), g.vector(d), g.normal()};
}

}  // namespace

TEST_CASE("gamma domain") {
  Matrix Q = Matrix::Zero(2, 2);
  Q(0, 0) = 2.0;
  Q(1, 1) = -1.0;
  auto dom = gamma_domain({Q, Vector::Zero(2)});
  CHECK(dom.lambda_max == doctest::Approx(2.0));
  CHECK(dom.lower_open);
  CHECK_FALSE(dom.contains(2.0));
  CHECK(dom.contains(2.0 + 1e-9));

  dom = gamma_domain({-Matrix::Identity(2, 2), Vector::Zero(2)});
  CHECK(dom.lambda_max == doctest::Approx(-1.0));
  CHECK_FALSE(dom.lower_open);
  CHECK(dom.contains(0.0));
  CHECK(dom.lower_bound() == 0.0);

  dom = gamma_domain(affine_to_quadratic(AffineEstimator::zero(1, 1)));
  CHECK(dom.lambda_max == doctest::Approx(1.0));
  CHECK(dom.lower_open);
}

TEST_CASE("phi hand cases") {
  CHECK(phi(-1.0, 1.0, vec({5.0}), scalar_form(0.0, 0.0)).value() == doctest::Approx(1.0));
  CHECK(phi(0.0, 2.0, vec({1.0}), scalar_form(1.0, 0.0)).value() == doctest::Approx(2.0));
  CHECK(phi(0.0, 0.5, vec({1.0}), scalar_form(1.0, 0.0)).is_infinite());
  CHECK(phi(0.0, 1.0, vec({1.0}), scalar_form(1.0, 0.0)).is_infinite());
}

TEST_CASE("phi_oracle agrees with the closed form on the hand cases") {
  CHECK(phi_oracle(-1.0, 1.0, vec({5.0}), scalar_form(0.0, 0.0), 4.0, 81) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(phi_oracle(0.0, 2.0, vec({1.0}), scalar_form(1.0, 0.0), 4.0, 81) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK_THROWS_AS(phi_oracle(0.0, 0.5, vec({1.0}), scalar_form(1.0, 0.0), 4.0, 81), std::domain_error);
}

TEST_CASE("loss-free penalty keeps the maximizer at z") {
  // Any v != z only adds -gamma ||v - z||^2, so the supremum is (-tau)_+.
  const auto qf = QuadraticForm(Matrix::Zero(2, 2), Vector::Zero(2));
  CHECK(phi_oracle(-0.7, 3.0, vec({0.3, -2.0}), qf, 2.0, 41) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(phi_grid_max(-0.7, 3.0, vec({0.3, -2.0}), qf, 2.0, 41) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("phi_oracle never exceeds the closed form") {
  Generator g(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto qf = random_form(g, 2);
    const double gamma = gamma_domain(qf).lower_bound() + g.uniform(0.2, 3.0);
    const Vector z = g.vector(2);
    const double tau = g.normal();
    const double closed = phi(tau, gamma, z, qf).value();
    const double oracle = phi_oracle(tau, gamma, z, qf, 3.0, 41);
    CHECK(oracle <= closed + 1e-9 * (1.0 + std::abs(closed)));
    CHECK(oracle == doctest::Approx(closed).epsilon(1e-6));
  }
}

TEST_CASE("phi grid maximum diverges below the domain") {
  const auto qf = scalar_form(1.0, 0.0);
  const double a = phi_grid_max(0.0, 0.5, vec({1.0}), qf, 10.0, 201);
  const double b = phi_grid_max(0.0, 0.5, vec({1.0}), qf, 100.0, 201);
  const double c = phi_grid_max(0.0, 0.5, vec({1.0}), qf, 1000.0, 201);
  CHECK(b > 10.0 * a);
  CHECK(c > 10.0 * b);
}

TEST_CASE("dual objective hand case") {
  const auto qf = scalar_form(0.0, 0.5);
  const auto dist = line({0.0, 1.0});
  const RiskSpec spec(1.0, 1.0);
  CHECK(dual_objective(0.5, qf, dist, spec).value() == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(dual_objective(0.5, qf.with_offset(2.0), dist, spec).value() == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(joint_dual_objective(0.0, 0.5, qf, dist, spec).value() >= 1.5 - 1e-12);
  CHECK(dual_objective(0.0, qf, dist, spec).is_infinite());
}

TEST_CASE("dual objective is coercive without a loss") {
  const auto qf = scalar_form(0.0, 0.0);
  const auto dist = line({0.0, 1.0});
  const RiskSpec spec(0.5, 2.0);
  for (double gamma : {1.0, 10.0, 1e3, 1e6}) {
    CHECK(dual_objective(gamma, qf, dist, spec).value() == doctest::Approx(gamma * 4.0 / 0.5).epsilon(1e-12));
  }
}

TEST_CASE("dual objective matches an independent evaluation") {
  Generator g(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = g.integer(1, 4);
    const auto qf = random_form(g, d);
    const auto dist = g.distribution(static_cast<std::size_t>(g.integer(1, 20)), static_cast<std::size_t>(d), 0);
    const RiskSpec spec(g.uniform(0.05, 1.0), g.uniform(0.05, 2.0));
    const double gamma = gamma_domain(qf).lower_bound() + g.uniform(0.01, 5.0);
    const double lib = dual_objective(gamma, qf, dist, spec).value();
    const double hand = dual_by_hand(gamma, qf, dist, spec);
    CHECK(std::abs(lib - hand) <= 1e-9 * (1.0 + std::abs(hand)));
  }
}

TEST_CASE("dual objective is midpoint convex in gamma") {
  Generator g(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto qf = random_form(g, 3);
    const auto dist = g.distribution(15, 3, 0);
    const RiskSpec spec(g.uniform(0.05, 1.0), g.uniform(0.1, 2.0));
    const double lo = gamma_domain(qf).lower_bound();
    const double a = lo + g.uniform(1e-3, 5.0), b = lo + g.uniform(1e-3, 5.0);
    const double fa = dual_objective(a, qf, dist, spec).value();
    const double fb = dual_objective(b, qf, dist, spec).value();
    const double fm = dual_objective(0.5 * (a + b), qf, dist, spec).value();
    CHECK(fm <= 0.5 * (fa + fb) + 1e-9 * (1.0 + std::abs(fa) + std::abs(fb)));
  }
}

TEST_CASE("worst-case CVaR of a linear loss") {
  Generator g(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = g.integer(1, 4);
    const Vector q = g.vector(d);
    const QuadraticForm qf(Matrix::Zero(d, d), q);
    const auto dist = g.distribution(static_cast<std::size_t>(g.integer(1, 20)), static_cast<std::size_t>(d), 0);
    for (double alpha : {0.1, 0.5, 1.0}) {
      for (double r : {0.1, 1.0}) {
        const auto cert = worst_case_cvar(qf, dist, RiskSpec(alpha, r));
        const Vector nominal = 2.0 * dist.atoms() * q;
        const double expected = cvar_discrete(nominal, alpha).cvar + 2.0 * q.norm() * r / std::sqrt(alpha);
        CHECK(std::abs(cert.value - expected) <= 1e-7 * (1.0 + std::abs(expected)));
        CHECK(cert.gamma_star == doctest::Approx(q.norm() * std::sqrt(alpha) / r).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("one-dimensional worst case with a known minimizer") {
  const auto cert = worst_case_cvar(scalar_form(0.0, 0.5), line({0.0, 1.0}), RiskSpec(1.0, 1.0));
  CHECK(cert.value == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(cert.gamma_star == doctest::Approx(0.5).epsilon(1e-5));
  CHECK_FALSE(cert.at_boundary);
  // v_i = z_i + q / gamma
  CHECK(cert.per_atom_transported(0, 0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(cert.per_atom_transported(1, 0) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("tiny radius recovers the nominal CVaR") {
  Generator g(4);
  const auto est = g.estimator(2, 2);
  const auto dist = g.distribution(12, 2, 2);
  for (double alpha : {0.1, 0.5, 1.0}) {
    const auto cert = worst_case_cvar(affine_to_quadratic(est), dist, RiskSpec(alpha, 1e-8));
    CHECK(std::abs(cert.value - cvar_discrete(losses(est, dist), alpha).cvar) <= 1e-3);
  }
}

TEST_CASE("single atom at the origin sits on the domain boundary") {
  const EmpiricalDistribution dist(Matrix::Zero(1, 2), 1, 1);
  const auto qf = affine_to_quadratic(AffineEstimator::zero(1, 1));
  for (double alpha : {0.5, 1.0}) {
    for (double r : {0.25, 0.5, 1.0}) {
      const auto cert = worst_case_cvar(qf, dist, RiskSpec(alpha, r));
      CHECK(cert.value == doctest::Approx(r * r / alpha).epsilon(1e-6));
      CHECK(cert.at_boundary);
    }
  }
}

TEST_CASE("the two dual forms agree at the optimum") {
  Generator g(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = g.integer(1, 4);
    const auto qf = random_form(g, d);
    const auto dist = g.distribution(static_cast<std::size_t>(g.integer(1, 30)), static_cast<std::size_t>(d), 0);
    const RiskSpec spec(g.uniform(0.05, 1.0), g.uniform(0.05, 2.0));
    const auto cert = worst_case_cvar(qf, dist, spec);
    const double joint = joint_dual_objective(cert.tau_star, cert.gamma_star, qf, dist, spec).value();
    const double one_d = dual_objective(cert.gamma_star, qf, dist, spec).value();
    CHECK(std::abs(joint - one_d) <= 1e-8 * (1.0 + std::abs(one_d)));
  }
}

TEST_CASE("golden section finds the dual minimum") {
  Generator g(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = g.integer(1, 3);
    const auto qf = random_form(g, d);
    const auto dist = g.distribution(10, static_cast<std::size_t>(d), 0);
    const RiskSpec spec(g.uniform(0.1, 1.0), g.uniform(0.2, 1.5));
    const auto cert = worst_case_cvar(qf, dist, spec);
    const double lo = gamma_domain(qf).lower_bound();
    // Coarse scan then fine golden search of the independent evaluation.
    double best_g = lo + 1e-6, best = dual_by_hand(best_g, qf, dist, spec);
    for (double t = 1e-4; t < 200.0; t *= 1.05) {
      const double v = dual_by_hand(lo + t, qf, dist, spec);
      if (v < best) best = v, best_g = lo + t;
    }
    const double fine = golden_min([&](double x) { return dual_by_hand(x, qf, dist, spec); },
                                   std::max(lo + 1e-9, best_g / 1.1 - lo * 0.1 / 1.1), best_g * 1.1 + 1e-3);
    CHECK(cert.value <= std::min(best, fine) + 1e-8 * (1.0 + std::abs(best)));
    const double at_star = dual_by_hand(cert.gamma_star, qf, dist, spec);
    CHECK(std::abs(cert.value - at_star) <= 1e-9 * (1.0 + std::abs(at_star)));
  }
}

TEST_CASE("worst case is monotone in radius and level and dominates the nominal CVaR") {
  Generator g(9);
  const auto est = g.estimator(2, 2);
  const auto dist = g.distribution(15, 2, 2);
  const auto qf = affine_to_quadratic(est);
  double prev = -1.0;
  for (double r : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
    const double v = worst_case_cvar(qf, dist, RiskSpec(0.3, r)).value;
    CHECK(v >= prev - 1e-9);
    CHECK(v >= cvar_discrete(losses(est, dist), 0.3).cvar - 1e-9);
    prev = v;
  }
  prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.05, 0.1, 0.25, 0.5, 1.0}) {
    const double v = worst_case_cvar(qf, dist, RiskSpec(alpha, 0.5)).value;
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
}

TEST_CASE("closed-form worst-case MSE hand cases") {
  Matrix atoms(2, 2);
  atoms << 0, 0, 1, 1;
  const EmpiricalDistribution two(atoms, 1, 1);
  CHECK(worst_case_mse_closed(AffineEstimator::zero(1, 1), two, 1.0) ==
        doctest::Approx(std::pow(std::sqrt(0.5) + 1.0, 2)).epsilon(1e-12));
  CHECK(worst_case_mse_closed(AffineEstimator::zero(1, 1), two, 0.0) == doctest::Approx(0.5));
  const EmpiricalDistribution one(Matrix::Ones(1, 2), 1, 1);
  const AffineEstimator identity(Matrix::Ones(1, 1), Vector::Zero(1));
  CHECK(worst_case_mse_closed(identity, one, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("closed form is exact for scalar signals") {
  Generator g(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = static_cast<std::size_t>(g.integer(1, 3));
    const auto est = g.estimator(1, m);
    const auto dist = g.distribution(static_cast<std::size_t>(g.integer(1, 20)), 1, m);
    const double r = g.uniform(0.05, 2.0);
    const double dual = worst_case_cvar(affine_to_quadratic(est), dist, RiskSpec(1.0, r)).value;
    CHECK(std::abs(worst_case_mse_closed(est, dist, r) - dual) <= 1e-6 * (1.0 + dual));
  }
}

TEST_CASE("spectral worst-case MSE is exact, the closed form an upper bound") {
  Generator g(43);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<std::size_t>(g.integer(2, 3));
    const auto m = static_cast<std::size_t>(g.integer(1, 3));
    const auto est = g.estimator(n, m);
    const auto dist = g.distribution(static_cast<std::size_t>(g.integer(1, 20)), n, m);
    const double r = g.uniform(0.05, 2.0);
    const double dual = worst_case_cvar(affine_to_quadratic(est), dist, RiskSpec(1.0, r)).value;
    CHECK(std::abs(worst_case_mse_spectral(est, dist, r) - dual) <= 1e-6 * (1.0 + dual));
    CHECK(worst_case_mse_closed(est, dist, r) >= dual - 1e-9 * (1.0 + dual));
  }
}

TEST_CASE("primal candidates lower-bound the dual value") {
  Generator g(51);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<std::size_t>(g.integer(1, 3));
    const auto m = static_cast<std::size_t>(g.integer(1, 3));
    const auto est = g.estimator(n, m);
    const auto dist = g.distribution(static_cast<std::size_t>(g.integer(1, 20)), n, m);
    const RiskSpec spec(g.uniform(0.05, 1.0), g.uniform(0.05, 1.0));
    const auto qf = affine_to_quadratic(est);
    const auto cert = worst_case_cvar(qf, dist, spec);
    const auto at_zero = primal_candidate(cert, qf, dist, spec, 0.0);
    CHECK(at_zero.lower_bound == doctest::Approx(cvar_discrete(losses(est, dist), spec.alpha).cvar).epsilon(1e-12));
    for (double t : {0.25, 0.5, 1.0}) {
      const auto pc = primal_candidate(cert, qf, dist, spec, t);
      CHECK(pc.mean_squared_displacement <= spec.radius * spec.radius * (1.0 + 1e-12));
      CHECK(pc.lower_bound <= cert.value + 1e-8);
    }
  }
}

TEST_CASE("primal candidate tightness at alpha = 1") {
  Generator g(52);
  double worst_ratio = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto est = g.estimator(2, 2);
    const auto dist = g.distribution(10, 2, 2);
    const double r = g.uniform(0.1, 1.0);
    const auto qf = affine_to_quadratic(est);
    const auto cert = worst_case_cvar(qf, dist, RiskSpec(1.0, r));
    const auto pc = primal_candidate(cert, qf, dist, RiskSpec(1.0, r), 1.0);
    CHECK(pc.lower_bound <= cert.value + 1e-8);
    worst_ratio = std::min(worst_ratio, pc.lower_bound / worst_case_mse_closed(est, dist, r));
  }
  MESSAGE("smallest primal/closed-form ratio observed: " << worst_ratio);
}

TEST_CASE("invalid requests") {
  const auto qf = scalar_form(0.0, 1.0);
  CHECK_THROWS_AS(worst_case_cvar(qf, line({0.0}), RiskSpec(1.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(worst_case_cvar(QuadraticForm(Matrix::Zero(2, 2), Vector::Zero(2)), line({0.0}), RiskSpec(1.0, 1.0)),
                  DimensionError);
}
