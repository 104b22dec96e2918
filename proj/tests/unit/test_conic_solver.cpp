#include "drcvar/conic_solver.hpp"
#include "drcvar/errors.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <sstream>

using namespace drcvar;
using drcvar::testing::Generator;
using drcvar::testing::kkt_instance;

namespace {

SdpProblem one_block(int size, std::size_t vars, std::vector<SymEntry> constant, std::vector<BlockTerm> terms,
                     Eigen::VectorXd c) {
  SdpProblem p;
  p.num_vars = vars;
  p.objective = std::move(c);
  p.blocks.push_back({size, std::move(constant), std::move(terms)});
  return p;
}

}  // namespace

TEST_CASE("eigenvalue condition of a 2x2 block") {
  // [[x, 1], [1, x]] >= 0  iff  x >= 1
  const auto p = one_block(2, 1, {{1, 0, 1.0}}, {{0, {{0, 0, 1.0}, {1, 1, 1.0}}}}, Eigen::VectorXd::Ones(1));
  const auto sol = solve_sdp(p);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.objective_value == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("diagonal block is a linear program") {
  const auto p = one_block(2, 2, {{0, 0, -1.0}, {1, 1, -2.0}}, {{0, {{0, 0, 1.0}}}, {1, {{1, 1, 1.0}}}},
                           Eigen::VectorXd::Ones(2));
  const auto sol = solve_sdp(p);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.objective_value == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.x(1) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("indefinite constant block is infeasible") {
  const auto p = one_block(2, 1, {{0, 0, -1.0}}, {{0, {{1, 1, 1.0}}}}, Eigen::VectorXd::Ones(1));
  const auto sol = solve_sdp(p);
  CHECK(sol.status == SolveStatus::infeasible);
}

TEST_CASE("unbounded objective is reported") {
  // x >= 1, minimize -x
  const auto p = one_block(1, 1, {{0, 0, -1.0}}, {{0, {{0, 0, 1.0}}}}, -Eigen::VectorXd::Ones(1));
  const auto sol = solve_sdp(p);
  CHECK(sol.status == SolveStatus::unbounded);
}

TEST_CASE("planted KKT instances reach 1e-6 objective accuracy") {
  Generator g(20240611);
  for (int t = 0; t < 30; ++t) {
    std::vector<int> sizes;
    const int nb = g.integer(1, 3);
    for (int b = 0; b < nb; ++b) sizes.push_back(g.integer(1, 8));
    const auto inst = kkt_instance(g, sizes, static_cast<std::size_t>(g.integer(1, 12)));
    const auto sol = solve_sdp(inst.problem);
    CAPTURE(t);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(std::abs(sol.objective_value - inst.optimal_value) <= 1e-6 * (1.0 + std::abs(inst.optimal_value)));
  }
}

TEST_CASE("reported metrics match an independent recomputation") {
  Generator g(7);
  const auto inst = kkt_instance(g, {4, 3}, 6);
  const auto sol = solve_sdp(inst.problem);
  REQUIRE(sol.status == SolveStatus::optimal);
  const auto m = evaluate_solution(inst.problem, sol.x, sol.slack, sol.dual);
  CHECK(std::abs(m.objective_value - sol.objective_value) <= 1e-10);
  CHECK(std::abs(m.dual_objective_value - sol.dual_objective_value) <= 1e-10);
  CHECK(std::abs(m.duality_gap - sol.duality_gap) <= 1e-10);
  CHECK(std::abs(m.primal_residual - sol.primal_residual) <= 1e-10);
  CHECK(std::abs(m.dual_residual - sol.dual_residual) <= 1e-10);
}

TEST_CASE("repeated solves produce identical iterate sequences") {
  Generator g(99);
  const auto inst = kkt_instance(g, {5, 2, 3}, 8);
  std::vector<IterationInfo> a, b;
  const auto s1 = solve_sdp(inst.problem, {}, [&](const IterationInfo& i) { a.push_back(i); });
  const auto s2 = solve_sdp(inst.problem, {}, [&](const IterationInfo& i) { b.push_back(i); });
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].primal_objective == b[k].primal_objective);
    CHECK(a[k].mu == b[k].mu);
  }
  CHECK((s1.x.array() == s2.x.array()).all());
}

TEST_CASE("settings are validated") {
  SolverSettings s;
  s.step_fraction = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.tol_gap = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("malformed problems are rejected") {
  auto p = one_block(2, 1, {{0, 1, 1.0}}, {{0, {{0, 0, 1.0}}}}, Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(p.validate(), DimensionError);
  CHECK_THROWS_AS(solve_sdp(p), DimensionError);
}

TEST_CASE("sparse dump round-trips") {
  Generator g(3);
  const auto inst = kkt_instance(g, {3, 2}, 4);
  std::stringstream ss;
  write_sparse(ss, inst.problem);
  const auto back = read_sparse(ss);
  REQUIRE(back.num_vars == inst.problem.num_vars);
  CHECK((back.objective - inst.problem.objective).norm() == 0.0);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  for (std::size_t j = 0; j < back.blocks.size(); ++j) {
    CHECK((back.blocks[j].evaluate(x) - inst.problem.blocks[j].evaluate(x)).norm() == 0.0);
  }
}
