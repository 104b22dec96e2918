#include "cli.hpp"

#include "drcvar/dataset.hpp"
#include "drcvar/errors.hpp"
#include "drcvar/experiment.hpp"
#include "drcvar/synth.hpp"
#include "drcvar/tolerance.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace drcvar::cli {

namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return out;
}

// Where the training (and optional test) atoms come from.
struct InputOptions {
  std::string data;
  std::string atoms;
  std::string test_atoms;
  std::string split_date;
  std::size_t train_days = 0;
  std::string scale = "per_coordinate";

  void add(CLI::App& app, bool with_test) {
    auto* d = app.add_option("--data", data, "Market CSV (wide or long layout)");
    auto* a = app.add_option("--atoms", atoms, "Atom CSV with x* then y* columns");
    d->excludes(a);
    if (with_test) app.add_option("--test-atoms", test_atoms, "Atom CSV used as the test set")->needs(a);
    auto* s = app.add_option("--split-date", split_date, "First test day (ISO date) for --data");
    auto* t = app.add_option("--train-days", train_days, "Number of leading training days for --data");
    s->excludes(t);
    s->needs(d);
    t->needs(d);
    app.add_option("--scale", scale, "Min-max normalization mode")
        ->check(CLI::IsMember({"per_coordinate", "global"}));
  }

  bool has_split() const { return !split_date.empty() || train_days > 0; }
};

struct Inputs {
  std::optional<SplitData> split;
  std::optional<EmpiricalDistribution> train;
  std::optional<EmpiricalDistribution> test;
};

Inputs load_inputs(const InputOptions& o, bool need_test) {
  Inputs in;
  if (!o.data.empty()) {
    const Dataset ds = load_dataset(o.data);
    const ScaleMode mode = parse_scale_mode(o.scale);
    if (o.has_split()) {
      const Date split = o.split_date.empty() ? split_after_days(ds, o.train_days) : Date::parse(o.split_date);
      in.split = split_and_normalize(ds, split, mode);
      in.train = in.split->train;
      in.test = in.split->test;
    } else {
      if (need_test) throw std::invalid_argument("--data needs --split-date or --train-days here");
      const Matrix rows = day_matrix(ds.records);
      const auto scaler = MinMaxScaler::fit(rows, mode);
      in.train = EmpiricalDistribution(scaler.transform(rows), kHoursPerDay, kHoursPerDay);
    }
  } else if (!o.atoms.empty()) {
    in.train = read_atoms_csv(o.atoms);
    if (!o.test_atoms.empty()) in.test = read_atoms_csv(o.test_atoms);
  } else {
    throw std::invalid_argument("one of --data or --atoms is required");
  }
  if (need_test && !in.test) throw std::invalid_argument("a test set is required (--test-atoms or a --data split)");
  return in;
}

FitOptions fit_options(const std::string& profile) {
  FitOptions f;
  f.solver = solver_settings(profile.empty() ? default_tolerance_profile() : parse_tolerance_profile(profile));
  return f;
}

json metrics_to_json(const OutOfSampleMetrics& m, double alpha, std::size_t n) {
  json j{{"status", "optimal"}, {"alpha", alpha}, {"test_atoms", n}, {"cvar", m.cvar}, {"mse", m.mse}};
  j["cvar_original"] = m.cvar_original ? json(*m.cvar_original) : json(nullptr);
  j["mse_original"] = m.mse_original ? json(*m.mse_original) : json(nullptr);
  return j;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << text;
  if (!f) throw DataError("failed writing '" + path + "'");
}

// Output goes to --out when given, otherwise to the command's stream.
void emit(const std::string& path, std::ostream& out, const std::string& text) {
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

std::vector<double> parse_radii(const std::string& list) {
  std::vector<double> out;
  for (const auto& cell : split_csv_line(list)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cell.size() || cell.empty()) throw std::invalid_argument("bad radius '" + cell + "' in --radii");
    out.push_back(v);
  }
  return out;
}

}  // namespace

EmpiricalDistribution read_atoms_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open atom file '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": empty file");
  const auto header = split_csv_line(line);
  std::size_t n = 0;
  while (n < header.size() && !header[n].empty() && header[n][0] == 'x') ++n;
  std::size_t m = 0;
  while (n + m < header.size() && !header[n + m].empty() && header[n + m][0] == 'y') ++m;
  if (n == 0 || n + m != header.size()) {
    throw DataError(path + ": header must list x* columns followed by y* columns");
  }
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  std::vector<std::string> bad;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    std::vector<double> row;
    bool ok = cells.size() == header.size();
    for (std::size_t k = 0; ok && k < cells.size(); ++k) {
      std::size_t used = 0;
      try {
        row.push_back(std::stod(cells[k], &used));
      } catch (const std::exception&) {
        used = 0;
      }
      ok = used == cells[k].size() && !cells[k].empty() && std::isfinite(row.back());
    }
    if (!ok) {
      bad.push_back(std::to_string(lineno));
      continue;
    }
    rows.push_back(std::move(row));
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t k = 0; k < bad.size() && k < 20; ++k) list += (k ? ", " : "") + bad[k];
    throw DataError(path + ": malformed rows at lines " + list);
  }
  if (rows.empty()) throw DataError(path + ": no atoms");
  Matrix Z(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n + m));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < n + m; ++k) Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return EmpiricalDistribution(std::move(Z), n, m);
}

void write_atoms_csv(std::ostream& os, const EmpiricalDistribution& dist) {
  const auto n = dist.latent_dim();
  const auto m = dist.observation_dim();
  for (std::size_t k = 0; k < n; ++k) os << (k ? "," : "") << 'x' << k + 1;
  for (std::size_t k = 0; k < m; ++k) os << ",y" << k + 1;
  os << '\n' << std::setprecision(17);
  const Matrix& Z = dist.atoms();
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    for (Eigen::Index k = 0; k < Z.cols(); ++k) os << (k ? "," : "") << Z(i, k);
    os << '\n';
  }
}

json fit_to_json(const FitResult& r) {
  const Matrix& A = r.estimator.A();
  json rows = json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < A.cols(); ++k) row.push_back(A(i, k));
    rows.push_back(row);
  }
  json b = json::array();
  for (Eigen::Index i = 0; i < r.estimator.b().size(); ++i) b.push_back(r.estimator.b()(i));
  return json{{"status", "optimal"},
              {"method", to_string(r.method)},
              {"alpha", r.spec.alpha},
              {"radius", r.spec.radius},
              {"optimal_value", r.optimal_value},
              {"gamma", r.gamma},
              {"tau", r.tau},
              {"cross_check_value", number_or_null(r.cross_check_value)},
              {"cross_check_gap", number_or_null(r.cross_check_gap)},
              {"boundary_gamma", r.boundary_gamma},
              {"strict_margin", r.strict_margin},
              {"routed_to_nominal", r.routed_to_nominal},
              {"solver_iterations", r.solver_iterations},
              {"solve_time_s", r.solve_time_s},
              {"estimator", {{"n", A.rows()}, {"m", A.cols()}, {"A", rows}, {"b", b}}}};
}

AffineEstimator estimator_from_json(const json& doc) {
  const json& e = doc.contains("estimator") ? doc.at("estimator") : doc;
  const auto n = e.at("n").get<Eigen::Index>();
  const auto m = e.at("m").get<Eigen::Index>();
  Matrix A(n, m);
  Vector b(n);
  const auto& rows = e.at("A");
  if (static_cast<Eigen::Index>(rows.size()) != n || static_cast<Eigen::Index>(e.at("b").size()) != n) {
    throw DataError("estimator: A/b sizes do not match n");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m) {
      throw DataError("estimator: row " + std::to_string(i) + " of A has the wrong length");
    }
    for (Eigen::Index k = 0; k < m; ++k) A(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    b(i) = e.at("b")[static_cast<std::size_t>(i)].get<double>();
  }
  return AffineEstimator(std::move(A), std::move(b));
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributionally robust CVaR estimation"};
  app.name("drcvar");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string out_path;
  std::string profile;
  std::size_t max_iter = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", out_path, "Write the result document here instead of stdout");
    sub->add_option("--tolerance-profile", profile, "Solver tolerances (default from $DRCVAR_TOLERANCE_PROFILE)")
        ->check(CLI::IsMember({"strict", "fast"}));
    sub->add_option("--max-iter", max_iter, "Override the solver iteration limit")->check(CLI::PositiveNumber);
  };
  auto options = [&] {
    FitOptions f = fit_options(profile);
    if (max_iter > 0) f.solver.max_iter = max_iter;
    return f;
  };

  // fit
  InputOptions fit_in;
  std::string method = "dr_cvar";
  double alpha = 0.01;
  double radius = 0.01;
  auto* fit = app.add_subcommand("fit", "Fit an estimator and write its JSON");
  fit_in.add(*fit, false);
  fit->add_option("--method", method)->check(CLI::IsMember({"dr_cvar", "dr_mse", "nominal_cvar", "nominal_mse"}));
  fit->add_option("--alpha", alpha, "CVaR level in (0, 1]");
  fit->add_option("--radius", radius, "Wasserstein radius (>= 0)");
  common(fit);

  // eval
  InputOptions eval_in;
  std::string estimator_path;
  auto* eval = app.add_subcommand("eval", "Out-of-sample CVaR and MSE of a fitted estimator");
  eval_in.add(*eval, true);
  eval->add_option("--estimator", estimator_path, "Fit JSON written by 'fit'")->required();
  eval->add_option("--alpha", alpha, "CVaR level in (0, 1]");
  common(eval);

  // sweep
  InputOptions sweep_in;
  int log_from = -5;
  int log_to = 5;
  std::size_t per_decade = 3;
  std::string radii_list;
  std::size_t threads = 1;
  bool no_baselines = false;
  std::string csv_path, plot_path;
  auto* sweep = app.add_subcommand("sweep", "Fit dr_cvar and dr_mse over a radius grid");
  sweep_in.add(*sweep, true);
  sweep->add_option("--alpha", alpha, "CVaR level in (0, 1]");
  auto* lf = sweep->add_option("--radii-log-from", log_from, "Smallest exponent of the log grid");
  auto* lt = sweep->add_option("--radii-log-to", log_to, "Largest exponent of the log grid");
  auto* pd = sweep->add_option("--per-decade", per_decade, "Grid points per decade")->check(CLI::PositiveNumber);
  auto* rl = sweep->add_option("--radii", radii_list, "Comma-separated radii instead of the log grid");
  rl->excludes(lf)->excludes(lt)->excludes(pd);
  sweep->add_option("--threads", threads, "Concurrent fits")->check(CLI::PositiveNumber);
  sweep->add_flag("--no-baselines", no_baselines, "Skip the nominal fits");
  sweep->add_option("--csv", csv_path, "Also write the report as CSV");
  sweep->add_option("--plot-data", plot_path, "Also write whitespace-separated plot columns");
  common(sweep);

  // check-dual
  InputOptions check_in;
  auto* check = app.add_subcommand("check-dual", "Compare the SDP optimum with the dual evaluation");
  check_in.add(*check, false);
  check->add_option("--alpha", alpha, "CVaR level in (0, 1]");
  check->add_option("--radius", radius, "Wasserstein radius (> 0)");
  common(check);

  // gen-data
  SpikyConfig cfg;
  std::uint64_t seed = 0;
  std::string start = cfg.start.iso();
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic spiky market CSV");
  gen->add_option("--seed", seed, "Random seed")->required();
  gen->add_option("--days", cfg.days)->check(CLI::PositiveNumber);
  gen->add_option("--spike-prob", cfg.spike_prob);
  gen->add_option("--spike-scale", cfg.spike_scale);
  gen->add_option("--noise", cfg.noise);
  gen->add_option("--escalation-day", cfg.escalation_day);
  gen->add_option("--escalation-factor", cfg.escalation_factor);
  gen->add_option("--start", start, "First date (ISO)");
  gen->add_option("--out", out_path, "Output CSV (stdout when omitted)");

  auto fail_doc = [&](const std::string& status, const std::string& what, int code) {
    err << "drcvar: " << what << '\n';
    const json doc{{"status", status}, {"error", what}, {"exit_code", code}};
    try {
      emit(app.got_subcommand("gen-data") ? std::string() : out_path, out, doc.dump(2) + "\n");
    } catch (const std::exception&) {
      out << doc.dump(2) << '\n';
    }
    return code;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << app.help() << '\n';
    return fail_doc("usage_error", e.what(), kExitUsage);
  }

  try {
    if (*fit) {
      const Inputs in = load_inputs(fit_in, false);
      const FitResult r = drcvar::fit(*in.train, parse_fit_method(method), RiskSpec(alpha, radius), options());
      json doc = fit_to_json(r);
      doc["atoms"] = in.train->size();
      emit(out_path, out, doc.dump(2) + "\n");
    } else if (*eval) {
      const Inputs in = load_inputs(eval_in, true);
      std::ifstream f(estimator_path);
      if (!f) throw DataError("cannot open estimator '" + estimator_path + "'");
      json doc;
      try {
        doc = json::parse(f);
      } catch (const json::exception& e) {
        throw DataError(estimator_path + ": " + e.what());
      }
      const AffineEstimator est = estimator_from_json(doc);
      const auto m = evaluate_out_of_sample(est, *in.test, alpha, in.split ? &in.split->scaler : nullptr);
      emit(out_path, out, metrics_to_json(m, alpha, in.test->size()).dump(2) + "\n");
    } else if (*sweep) {
      const Inputs in = load_inputs(sweep_in, true);
      const auto radii = radii_list.empty() ? log_radius_grid(log_from, log_to, per_decade) : parse_radii(radii_list);
      SweepOptions so;
      so.fit = options();
      so.threads = threads;
      so.include_baselines = !no_baselines;
      if (in.split) so.scaler = &in.split->scaler;
      const SweepReport rep = radius_sweep(*in.train, *in.test, alpha, radii, so);
      if (!csv_path.empty()) {
        std::ostringstream os;
        write_sweep_csv(os, rep);
        write_file(csv_path, os.str());
      }
      if (!plot_path.empty()) {
        std::ostringstream os;
        write_plot_data(os, rep);
        write_file(plot_path, os.str());
      }
      json doc = json::parse(sweep_to_json(rep));
      doc["status"] = "optimal";
      for (const auto& r : rep.rows) {
        if (r.status != "optimal") doc["status"] = "partial";
      }
      emit(out_path, out, doc.dump(2) + "\n");
    } else if (*check) {
      const Inputs in = load_inputs(check_in, false);
      if (!(radius > 0.0)) throw std::invalid_argument("check-dual needs --radius > 0");
      const FitResult r = fit_dr_cvar(*in.train, RiskSpec(alpha, radius), options());
      const double tol = cross_check_tolerance(r.optimal_value);
      const bool pass = r.cross_check_gap <= tol;
      const json doc{{"status", pass ? "optimal" : "gap_exceeded"},
                     {"alpha", alpha},
                     {"radius", radius},
                     {"sdp_value", r.optimal_value},
                     {"dual_value", r.cross_check_value},
                     {"gap", r.cross_check_gap},
                     {"tolerance", tol},
                     {"pass", pass},
                     {"gamma", r.gamma},
                     {"boundary_gamma", r.boundary_gamma}};
      err << "gap " << r.cross_check_gap << " (tolerance " << tol << ")\n";
      emit(out_path, out, doc.dump(2) + "\n");
      return pass ? kExitOk : kExitSolver;
    } else if (*gen) {
      cfg.start = Date::parse(start);
      const SynthResult res = synth_spiky_labeled(cfg, seed);
      std::ostringstream os;
      write_dataset(os, res.data);
      emit(out_path, out, os.str());
      if (!out_path.empty()) {
        const auto spikes = std::count(res.spike_day.begin(), res.spike_day.end(), true);
        out << json{{"status", "optimal"}, {"path", out_path}, {"days", cfg.days}, {"seed", seed}, {"spike_days", spikes}}
                   .dump(2)
            << '\n';
      }
    }
  } catch (const SolveFailure& e) {
    return fail_doc(to_string(e.status()), e.what(), kExitSolver);
  } catch (const SolverError& e) {
    return fail_doc("numerical", e.what(), kExitSolver);
  } catch (const DataError& e) {
    return fail_doc("data_error", e.what(), kExitData);
  } catch (const DimensionError& e) {
    return fail_doc("data_error", e.what(), kExitData);
  } catch (const json::exception& e) {
    return fail_doc("data_error", e.what(), kExitData);
  } catch (const std::invalid_argument& e) {
    return fail_doc("usage_error", e.what(), kExitUsage);
  }
  return kExitOk;
}

}  // namespace drcvar::cli
