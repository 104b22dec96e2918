#include "drcvar/tolerance.hpp"

#include <cstdlib>
#include <stdexcept>

namespace drcvar {

ToleranceProfile parse_tolerance_profile(std::string_view name) {
  if (name == "strict") return ToleranceProfile::strict;
  if (name == "fast") return ToleranceProfile::fast;
  throw std::invalid_argument("unknown tolerance profile '" + std::string(name) + "' (expected strict or fast)");
}

std::string to_string(ToleranceProfile p) { return p == ToleranceProfile::fast ? "fast" : "strict"; }

ToleranceProfile default_tolerance_profile() {
  const char* env = std::getenv(kToleranceProfileEnv);
  if (env == nullptr || *env == '\0') return ToleranceProfile::strict;
  return parse_tolerance_profile(env);
}

SolverSettings solver_settings(ToleranceProfile p) {
  SolverSettings s;
  if (p == ToleranceProfile::fast) {
    s.tol_gap = 1e-6;
    s.tol_feas = 1e-6;
    s.max_iter = 100;
  }
  return s;
}

}  // namespace drcvar
