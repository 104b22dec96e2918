#include "drcvar/conic_solver.hpp"
#include "drcvar/sdp_model.hpp"
#include "drcvar/wc_dual.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace drcvar;

namespace {

EmpiricalDistribution random_atoms(std::size_t N, std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix Z(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(n + m));
  for (Eigen::Index i = 0; i < Z.size(); ++i) Z.data()[i] = g(rng);
  return EmpiricalDistribution(std::move(Z), n, m);
}

AffineEstimator random_estimator(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  Vector b(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = 0.3 * g(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = g(rng);
  return AffineEstimator(std::move(A), std::move(b));
}

// args: atoms, latent dim (= observation dim)
void BM_SolveSdp(benchmark::State& state) {
  const auto N = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto dist = random_atoms(N, n, n, 1);
  const auto problem = build_drcvar_sdp_centered(dist, RiskSpec(0.1, 0.1), default_strict_margin(dist));
  std::size_t iterations = 0;
  for (auto _ : state) {
    const auto sol = solve_sdp(problem);
    iterations = sol.iterations;
    benchmark::DoNotOptimize(sol.objective_value);
  }
  state.counters["ipm_iterations"] = static_cast<double>(iterations);
  state.counters["block"] = static_cast<double>(1 + 3 * n);
}
BENCHMARK(BM_SolveSdp)->Args({10, 1})->Args({20, 3})->Args({40, 4})->Args({30, 8})->Unit(benchmark::kMillisecond);

void BM_DualObjective(benchmark::State& state) {
  const auto N = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto dist = random_atoms(N, n, n, 2);
  const auto qf = affine_to_quadratic(random_estimator(n, n, 3));
  const double gamma = gamma_domain(qf).lambda_max + 1.0;
  const RiskSpec spec(0.1, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(dual_objective(gamma, qf, dist, spec));
}
BENCHMARK(BM_DualObjective)->Args({30, 2})->Args({90, 24})->Unit(benchmark::kMicrosecond);

void BM_WorstCaseCvar(benchmark::State& state) {
  const auto N = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto dist = random_atoms(N, n, n, 4);
  const auto qf = affine_to_quadratic(random_estimator(n, n, 5));
  for (auto _ : state) benchmark::DoNotOptimize(worst_case_cvar(qf, dist, RiskSpec(0.1, 0.1)).value);
}
BENCHMARK(BM_WorstCaseCvar)->Args({30, 2})->Args({90, 24})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
