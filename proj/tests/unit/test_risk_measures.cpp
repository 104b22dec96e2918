#include "drcvar/risk_measures.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace drcvar;
using drcvar::testing::cvar_by_breakpoints;
using drcvar::testing::Generator;

namespace {

Eigen::VectorXd one_to_four() { return Eigen::VectorXd::LinSpaced(4, 1.0, 4.0); }

}  // namespace

TEST_CASE("cvar of {1,2,3,4}") {
  CHECK(cvar_discrete(one_to_four(), 1.0).cvar == doctest::Approx(2.5));
  CHECK(cvar_discrete(one_to_four(), 0.5).cvar == doctest::Approx(3.5));
  CHECK(cvar_discrete(one_to_four(), 0.1).cvar == doctest::Approx(4.0));
  CHECK(cvar_discrete(one_to_four(), 0.375).cvar == doctest::Approx(11.0 / 3.0).epsilon(1e-14));
  CHECK(cvar_by_breakpoints(one_to_four(), 0.375) == doctest::Approx(11.0 / 3.0).epsilon(1e-14));
  CHECK(drcvar::testing::golden_min([](double t) { return t + (one_to_four().array() - t).max(0.0).mean() / 0.375; },
                                    0.0, 5.0) == doctest::Approx(11.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("var is the (k+1)-th largest loss") {
  const auto r = cvar_discrete(one_to_four(), 0.5);
  CHECK(r.var == 2.0);
  CHECK(r.tail_count == 2);
  CHECK(cvar_discrete(one_to_four(), 1.0).var == 1.0);
  CHECK(cvar_discrete(one_to_four(), 0.1).var == 4.0);
}

TEST_CASE("sorting formula matches direct minimization") {
  Generator g(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int N = g.integer(1, 200);
    Eigen::VectorXd l(N);
    for (int i = 0; i < N; ++i) l(i) = g.normal() * 3.0 + (g.uniform(0, 1) < 0.1 ? 20.0 : 0.0);
    const double alpha = g.uniform(1e-3, 1.0);
    const auto r = cvar_discrete(l, alpha);
    const double oracle = cvar_by_breakpoints(l, alpha);
    CHECK(std::abs(r.cvar - oracle) <= 1e-10 * (1.0 + std::abs(oracle)));
    CHECK(cvar_objective(l, alpha, r.var) == doctest::Approx(r.cvar).epsilon(1e-12));
    CHECK(r.cvar >= r.var);
    CHECK(r.cvar >= l.mean() - 1e-12);
  }
}

TEST_CASE("translation equivariance, homogeneity, monotonicity") {
  Generator g(8);
  Eigen::VectorXd l = g.vector(37);
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.01, 0.05, 0.2, 0.5, 0.9, 1.0}) {
    const double base = cvar_discrete(l, alpha).cvar;
    CHECK(cvar_discrete((l.array() + 3.5).matrix(), alpha).cvar == doctest::Approx(base + 3.5).epsilon(1e-13));
    CHECK(cvar_discrete(2.5 * l, alpha).cvar == doctest::Approx(2.5 * base).epsilon(1e-13));
    CHECK(base <= prev + 1e-14);
    prev = base;
  }
  CHECK(cvar_discrete(l, 1.0).cvar == doctest::Approx(l.mean()).epsilon(1e-13));
  CHECK(cvar_discrete(l, 1.0 / 40.0).cvar == doctest::Approx(l.maxCoeff()).epsilon(1e-15));
}

TEST_CASE("alpha N exactly an integer") {
  // alpha = 0.3, N = 10: k = 3 exactly despite 0.3 * 10 rounding below 3.
  Eigen::VectorXd l = Eigen::VectorXd::LinSpaced(10, 1.0, 10.0);
  CHECK(cvar_discrete(l, 0.3).cvar == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(cvar_discrete(l, 0.3).var == 7.0);
}

TEST_CASE("invalid arguments") {
  CHECK_THROWS_AS(cvar_discrete(one_to_four(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(cvar_discrete(one_to_four(), 1.01), std::invalid_argument);
  CHECK_THROWS_AS(cvar_discrete(Eigen::VectorXd(0), 0.5), std::invalid_argument);
  Eigen::VectorXd bad = one_to_four();
  bad(2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cvar_discrete(bad, 0.5), std::invalid_argument);
}
