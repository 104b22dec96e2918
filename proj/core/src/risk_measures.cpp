#include "drcvar/risk_measures.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace drcvar {

RiskReport cvar_discrete(const Eigen::Ref<const Eigen::VectorXd>& losses, double alpha) {
  if (losses.size() == 0) throw std::invalid_argument("cvar of an empty sample");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!losses.allFinite()) throw std::invalid_argument("losses must be finite");

  const auto N = static_cast<std::size_t>(losses.size());
  std::vector<double> sorted(losses.data(), losses.data() + losses.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  // k atoms carry full weight 1/N in the tail; atom k+1 carries the remainder.
  // The small guard keeps alpha = k/N from rounding down to k - 1.
  const double alpha_n = alpha * static_cast<double>(N);
  auto k = static_cast<std::size_t>(std::floor(alpha_n + 1e-12 * alpha_n));
  k = std::min(k, N);

  double head = 0.0;
  for (std::size_t i = 0; i < k; ++i) head += sorted[i];
  const double inv_n = 1.0 / static_cast<double>(N);

  RiskReport out;
  if (k == N) {
    out.cvar = head * inv_n / alpha;
    out.var = sorted[N - 1];
  } else {
    const double remainder = std::max(0.0, alpha - static_cast<double>(k) * inv_n);
    out.cvar = (head * inv_n + remainder * sorted[k]) / alpha;
    out.var = sorted[k];
  }
  // Rounding can leave the weighted average a hair below its smallest term.
  out.cvar = std::max(out.cvar, out.var);
  out.tail_count = static_cast<std::size_t>(
      std::count_if(sorted.begin(), sorted.end(), [&](double l) { return l > out.var; }));
  return out;
}

double cvar_objective(const Eigen::Ref<const Eigen::VectorXd>& losses, double alpha, double tau) {
  if (losses.size() == 0) throw std::invalid_argument("cvar of an empty sample");
  const double excess = (losses.array() - tau).max(0.0).mean();
  return tau + excess / alpha;
}

}  // namespace drcvar
