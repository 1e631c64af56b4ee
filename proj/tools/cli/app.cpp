#include "app.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "report.hpp"
#include "sisvive/dataset.hpp"
#include "sisvive/error.hpp"

#ifndef SISVIVE_VERSION
#define SISVIVE_VERSION "0.0.0"
#endif

namespace sisvive::cli {

namespace {

struct DataArgs {
  std::string path;
  std::string outcome;
  std::string exposure;
  std::vector<std::string> instruments;
  std::vector<std::string> covariates;
};

struct EstimateArgs {
  DataArgs data;
  std::optional<double> lambda;
  std::optional<int> folds;
  std::uint64_t seed = 0;
  std::string rule = "largest";
  std::string out;
};

struct IdentifyArgs {
  DataArgs data;
  std::vector<double> gamma;
  std::vector<double> big_gamma;
  Eigen::Index max_invalid = 0;
  double tol = kDefaultIdentificationTol;
  std::string out;
};

struct DiagnoseArgs {
  DataArgs data;
  std::optional<double> beta;
  std::optional<Eigen::Index> rip_order;
  std::string out;
};

struct SimulateArgs {
  std::string config;
  std::optional<Eigen::Index> n, l, s;
  std::optional<double> mu, endogeneity, beta_star, alpha_magnitude;
  std::optional<std::string> corr_structure, strength, relative, basis, rule;
  std::optional<int> folds;
  std::optional<std::string> sweep;
  std::vector<double> values;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool timing = false;
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool required) {
  auto* data = cmd->add_option("--data", a.path, "CSV file with a header row");
  auto* y = cmd->add_option("--outcome", a.outcome, "Outcome column");
  auto* d = cmd->add_option("--exposure", a.exposure, "Exposure column");
  auto* z = cmd->add_option("--instruments", a.instruments, "Instrument columns")->delimiter(',');
  cmd->add_option("--covariates", a.covariates, "Exogenous covariate columns")->delimiter(',');
  if (required) {
    data->required();
    y->required();
    d->required();
    z->required();
  } else {
    data->needs(y)->needs(d)->needs(z);
  }
}

std::pair<Dataset, std::string> load(const DataArgs& a) {
  ColumnRoles roles;
  roles.outcome = a.outcome;
  roles.exposure = a.exposure;
  roles.instruments = a.instruments;
  roles.covariates = a.covariates;
  const Dataset raw = load_csv(a.path, roles);
  return {preprocess(raw).first, file_digest(a.path)};
}

Json data_config(const DataArgs& a) {
  return Json{{"data", a.path},
              {"outcome", a.outcome},
              {"exposure", a.exposure},
              {"instruments", a.instruments},
              {"covariates", a.covariates}};
}

Json manifest(const std::string& subcommand, Json config, std::uint64_t seed,
              const std::optional<std::string>& input_digest) {
  return Json{{"tool", "sisvive"},
              {"version", SISVIVE_VERSION},
              {"subcommand", subcommand},
              {"config", std::move(config)},
              {"seed", seed},
              {"input_digest", input_digest ? Json(*input_digest) : Json(nullptr)}};
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kMissingFile, "cannot write '" + path + "'");
  file << text;
}

Json named_values(const std::vector<std::string>& names, const Eigen::VectorXd& v) {
  Json o = Json::object();
  for (std::size_t j = 0; j < names.size(); ++j) o[names[j]] = number(v(static_cast<Eigen::Index>(j)));
  return o;
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const OneSeRule rule = parse_one_se_rule(a.rule);
  const auto [ds, digest] = load(a.data);
  const auto& names = ds.instrument_names();

  SisviveFit fit;
  Json cv = nullptr;
  if (a.lambda) {
    fit = estimate_at_lambda(ds, *a.lambda);
  } else {
    CvOptions options;
    options.folds = a.folds.value_or(10);
    options.seed = a.seed;
    options.rule = rule;
    auto [f, report] = estimate(ds, options);
    fit = std::move(f);
    cv = cv_to_json(report);
  }

  Json invalid = Json::array();
  for (const Eigen::Index j : fit.invalid_set) invalid.push_back(names[static_cast<std::size_t>(j)]);

  const double tsls_beta = tsls_fit(ds).beta_hat;
  Json diagnostics{{"mip", mip_to_json(mip_constants(ds))},
                   {"strength", strength_to_json(strength(ds))},
                   {"tsls_beta", number(tsls_beta)},
                   {"sargan", ds.num_instruments() >= 2 ? sargan_to_json(sargan_test(ds, tsls_beta))
                                                        : Json(nullptr)}};

  Json config = data_config(a.data);
  config["lambda"] = a.lambda ? number(*a.lambda) : Json(nullptr);
  config["cv_folds"] = a.lambda ? Json(nullptr) : Json(a.folds.value_or(10));
  config["one_se_rule"] = to_string(rule);

  Json report{{"manifest", manifest("estimate", std::move(config), a.seed, digest)},
              {"n", ds.n()},
              {"instruments", names},
              {"beta_hat", number(fit.beta_hat)},
              {"lambda", number(fit.lambda)},
              {"lambda_source", a.lambda ? "fixed" : "cross_validation"},
              {"alpha_hat", named_values(names, fit.alpha_hat_raw)},
              {"alpha_hat_scaled", named_values(names, fit.alpha_hat)},
              {"invalid_instruments", invalid},
              {"estimating_eq_norm", number(fit.estimating_eq_norm)},
              {"cv", cv},
              {"diagnostics", diagnostics}};
  emit(report.dump(2) + "\n", a.out, out);
  return kOk;
}

int cmd_identify(const IdentifyArgs& a, std::ostream& out) {
  ReducedForm rf;
  std::vector<std::string> names;
  std::optional<std::string> digest;
  Json config;
  if (!a.data.path.empty()) {
    if (!a.gamma.empty() || !a.big_gamma.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "give either --data or --gamma/--big-gamma, not both");
    }
    auto [ds, d] = load(a.data);
    rf = reduced_form(ds);
    names = ds.instrument_names();
    digest = d;
    config = data_config(a.data);
  } else {
    if (a.gamma.empty() || a.big_gamma.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "give --data or both --gamma and --big-gamma");
    }
    rf = given_reduced_form(Eigen::Map<const Eigen::VectorXd>(a.gamma.data(), static_cast<Eigen::Index>(a.gamma.size())),
                            Eigen::Map<const Eigen::VectorXd>(a.big_gamma.data(), static_cast<Eigen::Index>(a.big_gamma.size())));
    for (std::size_t j = 0; j < a.gamma.size(); ++j) names.push_back("z" + std::to_string(j + 1));
    config = Json{{"gamma", a.gamma}, {"big_gamma", a.big_gamma}};
  }
  config["max_invalid"] = a.max_invalid;
  config["tol"] = a.tol;
  const IdentificationReport report = check_consistency_criterion(rf, a.max_invalid, a.tol);
  Json j{{"manifest", manifest("identify", std::move(config), 0, digest)}};
  const Json body = identification_to_json(report, rf, names);
  for (const auto& [k, v] : body.items()) j[k] = v;
  emit(j.dump(2) + "\n", a.out, out);
  return kOk;
}

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  const auto [ds, digest] = load(a.data);
  const double beta = a.beta ? *a.beta : tsls_fit(ds).beta_hat;
  Json rip = nullptr;
  if (a.rip_order) {
    rip = Json::array({rip_to_json(rip_constants(ds, *a.rip_order, RipMatrix::kInstruments)),
                       rip_to_json(rip_constants(ds, *a.rip_order, RipMatrix::kProjectedOnDhat))});
  }
  Json config = data_config(a.data);
  config["beta"] = a.beta ? number(*a.beta) : Json(nullptr);
  config["rip_order"] = a.rip_order ? Json(*a.rip_order) : Json(nullptr);
  Json j{{"manifest", manifest("diagnose", std::move(config), 0, digest)},
         {"n", ds.n()},
         {"instruments", ds.instrument_names()},
         {"beta_for_sargan", number(beta)},
         {"beta_source", a.beta ? "given" : "tsls_naive"},
         {"mip", mip_to_json(mip_constants(ds))},
         {"strength", strength_to_json(strength(ds))},
         {"sargan", ds.num_instruments() >= 2 ? sargan_to_json(sargan_test(ds, beta)) : Json(nullptr)},
         {"rip", rip}};
  emit(j.dump(2) + "\n", a.out, out);
  return kOk;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto started = std::chrono::steady_clock::now();
  SimulationConfig cfg;
  Sweep sweep;
  std::size_t reps = 0;
  std::optional<std::string> digest;
  std::string description;
  if (!a.config.empty()) {
    std::ifstream in(a.config, std::ios::binary);
    if (!in) throw Error(ErrorCode::kMissingFile, "cannot open config '" + a.config + "'");
    const Json j = Json::parse(in);
    digest = file_digest(a.config);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "config file must hold an object");
    for (const auto& [key, v] : j.items()) {
      if (key == "base") {
        cfg = config_from_json(v, cfg);
      } else if (key == "sweep") {
        if (!v.is_object() || !v.contains("axis") || !v["axis"].is_string()) {
          throw Error(ErrorCode::kInvalidArgument, "'sweep' needs a string 'axis'");
        }
        sweep.axis = parse_sweep_axis(v["axis"].get<std::string>());
        if (v.contains("values")) sweep.values = v["values"].get<std::vector<double>>();
      } else if (key == "reps") {
        reps = v.get<std::size_t>();
      } else if (key == "description") {
        description = v.get<std::string>();
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown config file key '" + key + "'");
      }
    }
  }
  if (a.n) cfg.n = *a.n;
  if (a.l) cfg.l = *a.l;
  if (a.s) cfg.s = *a.s;
  if (a.mu) cfg.mu = *a.mu;
  if (a.endogeneity) cfg.endogeneity = *a.endogeneity;
  if (a.beta_star) cfg.beta_star = *a.beta_star;
  if (a.alpha_magnitude) cfg.alpha_magnitude = *a.alpha_magnitude;
  if (a.corr_structure) cfg.corr_structure = parse_corr_structure(*a.corr_structure);
  if (a.strength) cfg.strength = parse_strength(*a.strength);
  if (a.relative) cfg.relative = parse_relative_strength(*a.relative);
  if (a.basis) cfg.concentration_basis = parse_concentration_basis(*a.basis);
  if (a.rule) cfg.one_se_rule = parse_one_se_rule(*a.rule);
  if (a.folds) cfg.cv_folds = *a.folds;
  if (a.seed) cfg.seed = *a.seed;
  if (a.sweep) sweep.axis = parse_sweep_axis(*a.sweep);
  if (!a.values.empty()) sweep.values = a.values;
  if (a.reps) reps = *a.reps;
  if (reps == 0) throw Error(ErrorCode::kInvalidArgument, "--reps (or 'reps' in the config) must be >= 1");
  validate(cfg);
  if (sweep.values.empty()) sweep.values = default_sweep_values(sweep.axis, cfg);

  const std::vector<GridCell> cells = run_grid(cfg, sweep, reps);

  std::ostringstream csv;
  write_grid_csv(csv, cells);
  const std::string csv_text = csv.str();

  Json resolved{{"base", config_to_json(cfg)},
                {"sweep", Json{{"axis", to_string(sweep.axis)}, {"values", sweep.values}}},
                {"reps", reps},
                {"description", description}};
  const std::string config_hash = hex_digest(resolved.dump());
  Json failures = Json::array();
  std::size_t total_failures = 0;
  for (const auto& cell : cells) {
    total_failures += cell.summary.failures;
    for (const auto& m : cell.summary.failure_messages) {
      failures.push_back(Json{{"axis_value", number(cell.axis_value)}, {"message", m}});
    }
  }
  Json m = manifest("simulate", resolved, cfg.seed, digest);
  m["config_hash"] = config_hash;
  m["outputs"] = Json::array({Json{{"file", "summary.csv"}, {"digest", hex_digest(csv_text)},
                                   {"rows", cells.size() * summary_metric_names().size()}}});
  m["failures"] = Json{{"count", total_failures}, {"details", failures}};
  if (a.timing) {
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - started;
    m["timing"] = Json{{"wall_seconds", wall.count()}};
  }

  if (a.out.empty()) {
    out << csv_text;
    return kOk;
  }
  std::filesystem::create_directories(a.out);
  emit(csv_text, (std::filesystem::path(a.out) / "summary.csv").string(), out);
  emit(m.dump(2) + "\n", (std::filesystem::path(a.out) / "manifest.json").string(), out);
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return kUsage;
    case ErrorKind::kData: return kDataError;
    case ErrorKind::kNumerical: return kNumericalError;
  }
  return kDataError;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal effect estimation with some invalid instruments", "sisvive"};
  app.set_version_flag("--version", SISVIVE_VERSION);
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate the causal effect from a CSV file");
  add_data_options(estimate_cmd, est.data, true);
  auto* lambda_opt = estimate_cmd->add_option("--lambda", est.lambda, "Fixed penalty (>= 0)");
  auto* folds_opt = estimate_cmd->add_option("--cv-folds", est.folds, "Cross-validation folds (default 10)");
  lambda_opt->excludes(folds_opt);
  estimate_cmd->add_option("--seed", est.seed, "Seed for the fold assignment");
  estimate_cmd->add_option("--one-se-rule", est.rule, "largest (default) or smallest");
  estimate_cmd->add_option("--out", est.out, "Write the JSON report here instead of stdout");

  IdentifyArgs idf;
  auto* identify_cmd = app.add_subcommand("identify", "Check identification from reduced-form coefficients");
  add_data_options(identify_cmd, idf.data, false);
  identify_cmd->add_option("--gamma", idf.gamma, "Instrument-exposure coefficients")->delimiter(',');
  identify_cmd->add_option("--big-gamma", idf.big_gamma, "Instrument-outcome coefficients")->delimiter(',');
  identify_cmd->add_option("--max-invalid", idf.max_invalid, "Upper bound U on the number of invalid instruments")
      ->required();
  identify_cmd->add_option("--tol", idf.tol, "Ratio clustering tolerance");
  identify_cmd->add_option("--out", idf.out, "Write the JSON report here instead of stdout");

  DiagnoseArgs dg;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "Instrument strength and validity diagnostics");
  add_data_options(diagnose_cmd, dg.data, true);
  diagnose_cmd->add_option("--beta", dg.beta, "Effect used for the Sargan residuals (default: naive TSLS)");
  diagnose_cmd->add_option("--rip-order", dg.rip_order, "Also compute exact RIP constants of this order");
  diagnose_cmd->add_option("--out", dg.out, "Write the JSON report here instead of stdout");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a Monte Carlo grid");
  simulate_cmd->add_option("--config", sim.config, "JSON config or preset file");
  simulate_cmd->add_option("--n", sim.n);
  simulate_cmd->add_option("--l", sim.l);
  simulate_cmd->add_option("--s", sim.s);
  simulate_cmd->add_option("--mu", sim.mu);
  simulate_cmd->add_option("--endogeneity", sim.endogeneity);
  simulate_cmd->add_option("--beta-star", sim.beta_star);
  simulate_cmd->add_option("--alpha-magnitude", sim.alpha_magnitude);
  simulate_cmd->add_option("--corr-structure", sim.corr_structure, "all_pairs, within_groups or between_groups");
  simulate_cmd->add_option("--strength", sim.strength, "strong or weak");
  simulate_cmd->add_option("--relative", sim.relative, "equal, variable, stronger_invalid or stronger_valid");
  simulate_cmd->add_option("--concentration-basis", sim.basis, "valid_partialled or all_instruments");
  simulate_cmd->add_option("--one-se-rule", sim.rule, "largest or smallest");
  simulate_cmd->add_option("--cv-folds", sim.folds);
  simulate_cmd->add_option("--sweep", sim.sweep, "endogeneity, s or mu");
  simulate_cmd->add_option("--values", sim.values, "Grid values for the sweep axis")->delimiter(',');
  simulate_cmd->add_option("--reps", sim.reps, "Replications per cell");
  simulate_cmd->add_option("--seed", sim.seed);
  simulate_cmd->add_option("--out", sim.out, "Output directory for summary.csv and manifest.json");
  simulate_cmd->add_flag("--timing", sim.timing, "Record wall-clock time in the manifest");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << SISVIVE_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "sisvive: usage error: " << one_line(e.what()) << "\n";
    return kUsage;
  }

  try {
    if (*estimate_cmd) return cmd_estimate(est, out);
    if (*identify_cmd) return cmd_identify(idf, out);
    if (*diagnose_cmd) return cmd_diagnose(dg, out);
    if (*simulate_cmd) return cmd_simulate(sim, out);
  } catch (const Error& e) {
    err << "sisvive: " << to_string(e.code()) << ": " << one_line(e.what()) << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "sisvive: invalid JSON: " << one_line(e.what()) << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "sisvive: " << one_line(e.what()) << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace sisvive::cli
