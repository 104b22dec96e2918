#pragma once

#include "drcvar/core_model.hpp"
#include "drcvar/dataset.hpp"
#include "drcvar/estimation.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace drcvar {

/// per_coordinate: one (min, max) per hour and quantity.
/// global: one (min, max) shared by all price hours and one by all load hours.
enum class ScaleMode { per_coordinate, global };

std::string to_string(ScaleMode mode);
ScaleMode parse_scale_mode(std::string_view name);

/// Min-max normalization of 48-dim day vectors [price(24), load(24)].
class MinMaxScaler {
 public:
  /// Fit on the rows of `rows` (days x coordinates). Throws DataError on an
  /// empty sample.
  static MinMaxScaler fit(const Matrix& rows, ScaleMode mode = ScaleMode::per_coordinate);

  MinMaxScaler(Vector min, Vector max, ScaleMode mode);

  /// (v - min) / (max - min); a coordinate with max == min maps to 0.5.
  /// Values outside the training range are not clipped.
  Matrix transform(const Matrix& rows) const;
  /// Inverse of transform. Constant coordinates map back to their min.
  Matrix inverse_transform(const Matrix& rows) const;

  const Vector& min() const { return min_; }
  const Vector& max() const { return max_; }
  Vector scale() const { return max_ - min_; }
  ScaleMode mode() const { return mode_; }
  /// Coordinates whose training range is degenerate.
  const std::vector<std::size_t>& constant_coordinates() const { return constant_; }

 private:
  Vector min_;
  Vector max_;
  ScaleMode mode_;
  std::vector<std::size_t> constant_;
};

/// Day vectors [price(24), load(24)] as rows.
Matrix day_matrix(const std::vector<DayRecord>& records);

struct SplitData {
  EmpiricalDistribution train;
  EmpiricalDistribution test;
  MinMaxScaler scaler;
  std::vector<Date> train_dates;
  std::vector<Date> test_dates;
  std::vector<std::string> warnings;
};

/// Days before `split_date` train, the rest test. The scaler is fitted on the
/// training days only. Atoms are x = normalized prices, y = normalized loads.
/// Throws DataError when either side is empty.
SplitData split_and_normalize(const Dataset& ds, const Date& split_date,
                              ScaleMode mode = ScaleMode::per_coordinate);

/// The first date after which `train_days` records precede the split.
Date split_after_days(const Dataset& ds, std::size_t train_days);

struct OutOfSampleMetrics {
  double cvar = 0.0;
  double mse = 0.0;
  /// Same quantities for residuals mapped back to $/MWh.
  std::optional<double> cvar_original;
  std::optional<double> mse_original;
  Vector losses;
};

/// Per-day squared error on `test`, its CVaR at `alpha` and its mean.
/// Passing the scaler also reports original-unit metrics.
OutOfSampleMetrics evaluate_out_of_sample(const AffineEstimator& est, const EmpiricalDistribution& test,
                                          double alpha, const MinMaxScaler* scaler = nullptr);

struct SweepRow {
  double radius = 0.0;
  FitMethod method = FitMethod::dr_cvar;
  /// "optimal" or the failure status; metric fields are NaN on failure.
  std::string status = "optimal";
  double in_sample = 0.0;
  double oos_cvar = 0.0;
  double oos_mse = 0.0;
  std::optional<double> oos_cvar_original;
  std::optional<double> oos_mse_original;
  double gamma = 0.0;
  double solve_time_s = 0.0;
  double cross_check_gap = 0.0;
  bool boundary_gamma = false;
  std::string message;
};

struct SweepReport {
  double alpha = 0.0;
  std::vector<double> radii;
  /// Two rows per radius, dr_cvar then dr_mse, in radius order.
  std::vector<SweepRow> rows;
  /// nominal_cvar and nominal_mse fits (radius 0).
  std::vector<SweepRow> baselines;
};

struct SweepOptions {
  FitOptions fit;
  std::size_t threads = 1;
  bool include_baselines = true;
  const MinMaxScaler* scaler = nullptr;
};

/// Fits dr_cvar (at alpha) and dr_mse for every radius and evaluates both
/// out of sample at alpha. Solver failures are recorded and the sweep goes on.
/// Throws std::invalid_argument unless radii are positive and increasing.
SweepReport radius_sweep(const EmpiricalDistribution& train, const EmpiricalDistribution& test, double alpha,
                         const std::vector<double>& radii, const SweepOptions& options = {});

/// 10^from, ..., 10^to with `per_decade` points per decade.
std::vector<double> log_radius_grid(int from_exponent, int to_exponent, std::size_t per_decade);

/// radius,method,in_sample,oos_cvar,oos_mse,gamma,solve_time_s,status
/// Sweep rows first, then the baselines with radius 0.
void write_sweep_csv(std::ostream& os, const SweepReport& report);
std::string sweep_to_json(const SweepReport& report, int indent = 2);
/// Whitespace-separated columns: radius, then oos_cvar per method.
void write_plot_data(std::ostream& os, const SweepReport& report);

}  // namespace drcvar
