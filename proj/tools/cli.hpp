#pragma once

#include "drcvar/core_model.hpp"
#include "drcvar/estimation.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace drcvar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitSolver = 3;

/// Runs one command line (without the program name). The result document is
/// written to `out` (or the --out file), diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Atom CSV: header of x* columns followed by y* columns, one atom per row.
EmpiricalDistribution read_atoms_csv(const std::string& path);
void write_atoms_csv(std::ostream& os, const EmpiricalDistribution& dist);

nlohmann::json fit_to_json(const FitResult& r);
/// Reads the "estimator" object of a fit document.
AffineEstimator estimator_from_json(const nlohmann::json& j);

}  // namespace drcvar::cli
