#include "drcvar/experiment.hpp"

#include "drcvar/errors.hpp"
#include "drcvar/risk_measures.hpp"

#include <json.hpp>

#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace drcvar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json number_or_null(const std::optional<double>& v) {
  return v ? number_or_null(*v) : nlohmann::json(nullptr);
}

SweepRow run_fit(const EmpiricalDistribution& train, const EmpiricalDistribution& test, FitMethod method,
                 const RiskSpec& spec, double eval_alpha, const SweepOptions& options) {
  SweepRow row;
  row.radius = spec.radius;
  row.method = method;
  try {
    const FitResult fr = fit(train, method, spec, options.fit);
    const auto oos = evaluate_out_of_sample(fr.estimator, test, eval_alpha, options.scaler);
    row.in_sample = fr.optimal_value;
    row.oos_cvar = oos.cvar;
    row.oos_mse = oos.mse;
    row.oos_cvar_original = oos.cvar_original;
    row.oos_mse_original = oos.mse_original;
    row.gamma = fr.gamma;
    row.solve_time_s = fr.solve_time_s;
    row.cross_check_gap = fr.cross_check_gap;
    row.boundary_gamma = fr.boundary_gamma;
  } catch (const SolveFailure& e) {
    row.status = to_string(e.status());
    row.message = e.what();
  } catch (const SolverError& e) {
    row.status = "solver_error";
    row.message = e.what();
  }
  if (row.status != "optimal") {
    row.in_sample = row.oos_cvar = row.oos_mse = row.gamma = row.cross_check_gap = kNaN;
  }
  return row;
}

}  // namespace

std::string to_string(ScaleMode mode) { return mode == ScaleMode::global ? "global" : "per_coordinate"; }

ScaleMode parse_scale_mode(std::string_view name) {
  if (name == "per_coordinate") return ScaleMode::per_coordinate;
  if (name == "global") return ScaleMode::global;
  throw std::invalid_argument("unknown scale mode '" + std::string(name) + "'");
}

MinMaxScaler::MinMaxScaler(Vector min, Vector max, ScaleMode mode)
    : min_(std::move(min)), max_(std::move(max)), mode_(mode) {
  if (min_.size() != max_.size()) throw DimensionError("scaler min/max size mismatch");
  for (Eigen::Index j = 0; j < min_.size(); ++j) {
    if (!(max_(j) >= min_(j))) throw DataError("scaler max < min at coordinate " + std::to_string(j));
    if (max_(j) == min_(j)) constant_.push_back(static_cast<std::size_t>(j));
  }
}

MinMaxScaler MinMaxScaler::fit(const Matrix& rows, ScaleMode mode) {
  if (rows.rows() == 0) throw DataError("cannot fit a scaler on an empty sample");
  Vector lo = rows.colwise().minCoeff().transpose();
  Vector hi = rows.colwise().maxCoeff().transpose();
  if (mode == ScaleMode::global) {
    const Eigen::Index half = rows.cols() / 2;
    const Eigen::Index parts[2][2] = {{0, half}, {half, rows.cols() - half}};
    for (const auto& p : parts) {
      if (p[1] == 0) continue;
      lo.segment(p[0], p[1]).setConstant(lo.segment(p[0], p[1]).minCoeff());
      hi.segment(p[0], p[1]).setConstant(hi.segment(p[0], p[1]).maxCoeff());
    }
  }
  return MinMaxScaler(std::move(lo), std::move(hi), mode);
}

Matrix MinMaxScaler::transform(const Matrix& rows) const {
  if (rows.cols() != min_.size()) throw DimensionError("scaler expects " + std::to_string(min_.size()) + " columns");
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double s = max_(j) - min_(j);
    if (s > 0.0) {
      out.col(j) = (rows.col(j).array() - min_(j)) / s;
    } else {
      out.col(j).setConstant(0.5);
    }
  }
  return out;
}

Matrix MinMaxScaler::inverse_transform(const Matrix& rows) const {
  if (rows.cols() != min_.size()) throw DimensionError("scaler expects " + std::to_string(min_.size()) + " columns");
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    out.col(j) = rows.col(j).array() * (max_(j) - min_(j)) + min_(j);
  }
  return out;
}

Matrix day_matrix(const std::vector<DayRecord>& records) {
  constexpr auto H = static_cast<Eigen::Index>(kHoursPerDay);
  Matrix out(static_cast<Eigen::Index>(records.size()), 2 * H);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index h = 0; h < H; ++h) {
      out(r, h) = records[i].price[static_cast<std::size_t>(h)];
      out(r, H + h) = records[i].load[static_cast<std::size_t>(h)];
    }
  }
  return out;
}

SplitData split_and_normalize(const Dataset& ds, const Date& split_date, ScaleMode mode) {
  std::vector<DayRecord> train, test;
  for (const auto& r : ds.records) (r.date < split_date ? train : test).push_back(r);
  if (train.empty()) throw DataError("no training days before " + split_date.iso());
  if (test.empty()) throw DataError("no test days on or after " + split_date.iso());

  const Matrix train_raw = day_matrix(train);
  auto scaler = MinMaxScaler::fit(train_raw, mode);
  std::vector<std::string> warnings;
  const auto cols = wide_value_columns();
  for (auto j : scaler.constant_coordinates()) {
    warnings.push_back("coordinate " + cols[j] + " is constant on the training days; mapped to 0.5");
  }
  SplitData out{EmpiricalDistribution(scaler.transform(train_raw), kHoursPerDay, kHoursPerDay),
                EmpiricalDistribution(scaler.transform(day_matrix(test)), kHoursPerDay, kHoursPerDay),
                std::move(scaler),
                {},
                {},
                std::move(warnings)};
  for (const auto& r : train) out.train_dates.push_back(r.date);
  for (const auto& r : test) out.test_dates.push_back(r.date);
  return out;
}

Date split_after_days(const Dataset& ds, std::size_t train_days) {
  if (train_days == 0 || train_days >= ds.records.size()) {
    throw DataError("train_days must lie in [1, " + std::to_string(ds.records.size() - 1) + "]");
  }
  return ds.records[train_days].date;
}

OutOfSampleMetrics evaluate_out_of_sample(const AffineEstimator& est, const EmpiricalDistribution& test, double alpha,
                                          const MinMaxScaler* scaler) {
  if (test.size() == 0) throw DataError("empty test set");
  check_compatible(est, test);
  OutOfSampleMetrics m;
  m.losses = losses(est, test);
  m.cvar = cvar_discrete(m.losses, alpha).cvar;
  m.mse = m.losses.mean();
  if (scaler != nullptr) {
    const auto n = static_cast<Eigen::Index>(test.latent_dim());
    if (scaler->min().size() < n) throw DimensionError("scaler does not cover the latent coordinates");
    const Vector scale = scaler->scale().head(n);
    Vector orig(static_cast<Eigen::Index>(test.size()));
    for (std::size_t i = 0; i < test.size(); ++i) {
      const Vector resid = test.latent(i) - est.predict(test.observation(i));
      orig(static_cast<Eigen::Index>(i)) = resid.cwiseProduct(scale).squaredNorm();
    }
    m.cvar_original = cvar_discrete(orig, alpha).cvar;
    m.mse_original = orig.mean();
  }
  return m;
}

std::vector<double> log_radius_grid(int from_exponent, int to_exponent, std::size_t per_decade) {
  if (per_decade == 0) throw std::invalid_argument("per_decade must be positive");
  if (to_exponent < from_exponent) throw std::invalid_argument("radius grid bounds are reversed");
  const auto steps = static_cast<std::size_t>(to_exponent - from_exponent) * per_decade;
  std::vector<double> out;
  out.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double e = from_exponent + static_cast<double>(k) / static_cast<double>(per_decade);
    out.push_back(std::pow(10.0, e));
  }
  return out;
}

SweepReport radius_sweep(const EmpiricalDistribution& train, const EmpiricalDistribution& test, double alpha,
                         const std::vector<double>& radii, const SweepOptions& options) {
  RiskSpec(alpha, 0.0);
  if (radii.empty()) throw std::invalid_argument("radius list is empty");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0) || !std::isfinite(radii[k])) throw std::invalid_argument("radii must be positive");
    if (k > 0 && !(radii[k] > radii[k - 1])) throw std::invalid_argument("radii must be strictly increasing");
  }
  if (test.size() == 0) throw DataError("empty test set");

  SweepReport report;
  report.alpha = alpha;
  report.radii = radii;
  report.rows.resize(2 * radii.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < report.rows.size();) {
      const double r = radii[job / 2];
      const bool cvar = job % 2 == 0;
      report.rows[job] = run_fit(train, test, cvar ? FitMethod::dr_cvar : FitMethod::dr_mse,
                                 RiskSpec(cvar ? alpha : 1.0, r), alpha, options);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, report.rows.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (options.include_baselines) {
    report.baselines.push_back(run_fit(train, test, FitMethod::nominal_cvar, RiskSpec(alpha, 0.0), alpha, options));
    report.baselines.push_back(run_fit(train, test, FitMethod::nominal_mse, RiskSpec(1.0, 0.0), alpha, options));
  }
  return report;
}

void write_sweep_csv(std::ostream& os, const SweepReport& report) {
  os << "radius,method,in_sample,oos_cvar,oos_mse,gamma,solve_time_s,status\n";
  auto rows = report.rows;
  rows.insert(rows.end(), report.baselines.begin(), report.baselines.end());
  for (const auto& r : rows) {
    os << shortest(r.radius) << ',' << to_string(r.method) << ',' << shortest(r.in_sample) << ','
       << shortest(r.oos_cvar) << ',' << shortest(r.oos_mse) << ',' << shortest(r.gamma) << ','
       << shortest(r.solve_time_s) << ',' << r.status << '\n';
  }
}

std::string sweep_to_json(const SweepReport& report, int indent) {
  auto row_json = [](const SweepRow& r) {
    nlohmann::json j;
    j["radius"] = r.radius;
    j["method"] = to_string(r.method);
    j["status"] = r.status;
    j["in_sample"] = number_or_null(r.in_sample);
    j["oos_cvar"] = number_or_null(r.oos_cvar);
    j["oos_mse"] = number_or_null(r.oos_mse);
    j["oos_cvar_original"] = number_or_null(r.oos_cvar_original);
    j["oos_mse_original"] = number_or_null(r.oos_mse_original);
    j["gamma"] = number_or_null(r.gamma);
    j["solve_time_s"] = r.solve_time_s;
    j["cross_check_gap"] = number_or_null(r.cross_check_gap);
    j["boundary_gamma"] = r.boundary_gamma;
    if (!r.message.empty()) j["message"] = r.message;
    return j;
  };
  nlohmann::json doc;
  doc["alpha"] = report.alpha;
  doc["radii"] = report.radii;
  doc["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) doc["rows"].push_back(row_json(r));
  doc["baselines"] = nlohmann::json::array();
  for (const auto& r : report.baselines) doc["baselines"].push_back(row_json(r));
  return doc.dump(indent);
}

void write_plot_data(std::ostream& os, const SweepReport& report) {
  os << "# radius dr_cvar_oos_cvar dr_mse_oos_cvar\n";
  for (std::size_t k = 0; k < report.radii.size(); ++k) {
    os << shortest(report.radii[k]) << ' ' << shortest(report.rows[2 * k].oos_cvar) << ' '
       << shortest(report.rows[2 * k + 1].oos_cvar) << '\n';
  }
}

}  // namespace drcvar
