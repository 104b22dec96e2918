#pragma once

#include "drcvar/conic_solver.hpp"

#include <string>
#include <string_view>

namespace drcvar {

/// Named solver tolerance presets.
///   strict: tol_gap = tol_feas = 1e-8, 200 iterations (the defaults)
///   fast:   tol_gap = tol_feas = 1e-6, 100 iterations
enum class ToleranceProfile { strict, fast };

/// Environment variable consulted by default_tolerance_profile().
inline constexpr const char* kToleranceProfileEnv = "DRCVAR_TOLERANCE_PROFILE";

/// Throws std::invalid_argument for unknown names.
ToleranceProfile parse_tolerance_profile(std::string_view name);
std::string to_string(ToleranceProfile p);

/// Reads DRCVAR_TOLERANCE_PROFILE; strict when unset.
ToleranceProfile default_tolerance_profile();

SolverSettings solver_settings(ToleranceProfile p);

}  // namespace drcvar
