#include "sisvive/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sisvive/baselines.hpp"
#include "sisvive/csv.hpp"
#include "sisvive/diagnostics.hpp"
#include "sisvive/error.hpp"

namespace sisvive {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return kNaN;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double sum = 0.0;
  for (const double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

bool in_invalid_block(const SimulationConfig& cfg, Eigen::Index j) { return j < cfg.s; }

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(CorrStructure v) {
  switch (v) {
    case CorrStructure::kAllPairs: return "all_pairs";
    case CorrStructure::kWithinGroups: return "within_groups";
    case CorrStructure::kBetweenGroups: return "between_groups";
  }
  return "all_pairs";
}

std::string to_string(Strength v) { return v == Strength::kStrong ? "strong" : "weak"; }

std::string to_string(RelativeStrength v) {
  switch (v) {
    case RelativeStrength::kEqual: return "equal";
    case RelativeStrength::kVariable: return "variable";
    case RelativeStrength::kStrongerInvalid: return "stronger_invalid";
    case RelativeStrength::kStrongerValid: return "stronger_valid";
  }
  return "equal";
}

CorrStructure parse_corr_structure(const std::string& name) {
  for (auto v : {CorrStructure::kAllPairs, CorrStructure::kWithinGroups, CorrStructure::kBetweenGroups}) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown correlation structure '" + name + "'");
}

Strength parse_strength(const std::string& name) {
  for (auto v : {Strength::kStrong, Strength::kWeak}) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown instrument strength '" + name + "'");
}

RelativeStrength parse_relative_strength(const std::string& name) {
  for (auto v : {RelativeStrength::kEqual, RelativeStrength::kVariable,
                 RelativeStrength::kStrongerInvalid, RelativeStrength::kStrongerValid}) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown relative strength pattern '" + name + "'");
}

double concentration_target(Strength s) { return s == Strength::kStrong ? 100.0 : 10.0; }

std::string to_string(ConcentrationBasis v) {
  return v == ConcentrationBasis::kValidPartialled ? "valid_partialled" : "all_instruments";
}

ConcentrationBasis parse_concentration_basis(const std::string& name) {
  for (auto v : {ConcentrationBasis::kValidPartialled, ConcentrationBasis::kAllInstruments}) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown concentration basis '" + name + "'");
}

void validate(const SimulationConfig& cfg) {
  if (cfg.l < 1) throw Error(ErrorCode::kInvalidArgument, "l must be at least 1");
  if (cfg.s < 0 || cfg.s > cfg.l) throw Error(ErrorCode::kInvalidArgument, "s must lie in [0, l]");
  if (cfg.n < cfg.l + 2) throw Error(ErrorCode::kInvalidArgument, "n must be at least l + 2");
  if (!(std::abs(cfg.endogeneity) < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "endogeneity must lie in (-1, 1)");
  }
  if (!(std::abs(cfg.mu) < 1.0)) throw Error(ErrorCode::kInvalidArgument, "mu must lie in (-1, 1)");
  if (cfg.cv_folds < 2) throw Error(ErrorCode::kInvalidArgument, "cv_folds must be at least 2");
  const bool split_pattern = cfg.relative == RelativeStrength::kStrongerInvalid ||
                             cfg.relative == RelativeStrength::kStrongerValid;
  if (split_pattern && (cfg.s == 0 || cfg.s == cfg.l)) {
    throw Error(ErrorCode::kInfeasibleConfig,
                "pattern '" + to_string(cfg.relative) +
                    "' needs both invalid and valid instruments (0 < s < l)");
  }
}

Eigen::MatrixXd instrument_covariance(const SimulationConfig& cfg) {
  validate(cfg);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(cfg.l, cfg.l);
  for (Eigen::Index i = 0; i < cfg.l; ++i) {
    for (Eigen::Index j = 0; j < cfg.l; ++j) {
      if (i == j) continue;
      const bool same_block = in_invalid_block(cfg, i) == in_invalid_block(cfg, j);
      switch (cfg.corr_structure) {
        case CorrStructure::kAllPairs: sigma(i, j) = cfg.mu; break;
        case CorrStructure::kWithinGroups: sigma(i, j) = same_block ? cfg.mu : 0.0; break;
        case CorrStructure::kBetweenGroups: sigma(i, j) = same_block ? 0.0 : cfg.mu; break;
      }
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues()(0) > 1e-10)) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                "instrument covariance (" + to_string(cfg.corr_structure) + ", mu = " +
                    format_g17(cfg.mu) + ") is not positive definite");
  }
  return sigma;
}

Eigen::VectorXd calibrate_gamma(const SimulationConfig& cfg) {
  const Eigen::MatrixXd sigma = instrument_covariance(cfg);
  Eigen::VectorXd pattern = Eigen::VectorXd::Ones(cfg.l);
  for (Eigen::Index j = 0; j < cfg.l; ++j) {
    switch (cfg.relative) {
      case RelativeStrength::kEqual: break;
      case RelativeStrength::kVariable: pattern(j) = j % 2 == 0 ? 2.0 : 1.0; break;
      case RelativeStrength::kStrongerInvalid: pattern(j) = in_invalid_block(cfg, j) ? 2.0 : 1.0; break;
      case RelativeStrength::kStrongerValid: pattern(j) = in_invalid_block(cfg, j) ? 1.0 : 2.0; break;
    }
  }
  // xi has unit variance, so the concentration is n times a quadratic form
  // in gamma; no variance estimate is involved.
  double quad = 0.0;
  Eigen::Index count = cfg.l;
  if (cfg.concentration_basis == ConcentrationBasis::kValidPartialled && cfg.s < cfg.l) {
    const Eigen::Index s = cfg.s;
    const Eigen::Index v = cfg.l - cfg.s;
    Eigen::MatrixXd cond = sigma.bottomRightCorner(v, v);
    if (s > 0) {
      cond -= sigma.bottomLeftCorner(v, s) *
              sigma.topLeftCorner(s, s).llt().solve(sigma.topRightCorner(s, v));
    }
    const Eigen::VectorXd tail = pattern.tail(v);
    quad = tail.dot(cond * tail);
    count = v;
  } else {
    quad = pattern.dot(sigma * pattern);
  }
  const double goal = static_cast<double>(count) * concentration_target(cfg.strength);
  return pattern * std::sqrt(goal / (static_cast<double>(cfg.n) * quad));
}

std::pair<Dataset, TruthRecord> generate_dataset(const SimulationConfig& cfg, Rng& rng) {
  const Eigen::MatrixXd sigma = instrument_covariance(cfg);
  const Eigen::MatrixXd chol = sigma.llt().matrixL();
  const Eigen::Index n = cfg.n;
  const Eigen::Index l = cfg.l;

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(n, l);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) g(i, j) = normal(rng);
  }
  const Eigen::MatrixXd z = g * chol.transpose();

  TruthRecord truth;
  truth.epsilon.resize(n);
  truth.xi.resize(n);
  const double sigma_ex = cfg.endogeneity;
  const double comp = std::sqrt(1.0 - sigma_ex * sigma_ex);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e1 = normal(rng);
    const double e2 = normal(rng);
    truth.epsilon(i) = e1;
    truth.xi(i) = sigma_ex * e1 + comp * e2;
  }
  truth.beta = cfg.beta_star;
  truth.gamma = calibrate_gamma(cfg);
  truth.alpha = Eigen::VectorXd::Zero(l);
  for (Eigen::Index j = 0; j < cfg.s; ++j) {
    truth.alpha(j) = cfg.alpha_magnitude;
    truth.invalid_set.push_back(j);
  }

  Eigen::VectorXd d = (z * truth.gamma + truth.xi).array() + cfg.gamma0_star;
  Eigen::VectorXd y = (z * truth.alpha + d * truth.beta + truth.epsilon).array() + cfg.pi_star;
  return {Dataset(std::move(y), std::move(d), z), std::move(truth)};
}

std::pair<Dataset, TruthRecord> generate_dataset(const SimulationConfig& cfg,
                                                 std::uint64_t replication) {
  Rng rng = make_rng(cfg.seed, replication);
  return generate_dataset(cfg, rng);
}

std::string to_string(SimMethod m) {
  switch (m) {
    case SimMethod::kSisviveCv: return "sisvive_cv";
    case SimMethod::kSisviveTheory: return "sisvive_theory";
    case SimMethod::kTslsNaive: return "tsls_naive";
    case SimMethod::kTslsOracle: return "tsls_oracle";
    case SimMethod::kOls: return "ols";
  }
  return "sisvive_cv";
}

ReplicationResult run_replication(const SimulationConfig& cfg, std::uint64_t replication) {
  ReplicationResult r;
  try {
    auto generated = generate_dataset(cfg, replication);
    const TruthRecord& truth = generated.second;
    const Dataset ds = preprocess(generated.first).first;
    auto err = [&](double beta) { return std::abs(beta - truth.beta); };

    CvOptions cv;
    cv.folds = cfg.cv_folds;
    cv.seed = cfg.seed + replication;
    cv.rule = cfg.one_se_rule;
    const auto [fit_cv, report] = estimate(ds, cv);
    r.beta_cv = fit_cv.beta_hat;
    r.lambda_cv = report.chosen_lambda;

    r.lambda_theory = theory_lambda(ds, truth.epsilon);
    r.beta_theory = estimate_at_lambda(ds, r.lambda_theory).beta_hat;

    r.abs_error[static_cast<int>(SimMethod::kSisviveCv)] = err(r.beta_cv);
    r.abs_error[static_cast<int>(SimMethod::kSisviveTheory)] = err(r.beta_theory);
    r.abs_error[static_cast<int>(SimMethod::kTslsNaive)] = err(tsls_fit(ds).beta_hat);
    r.abs_error[static_cast<int>(SimMethod::kTslsOracle)] =
        cfg.s < cfg.l ? err(tsls_fit(ds, truth.invalid_set).beta_hat) : kNaN;
    r.abs_error[static_cast<int>(SimMethod::kOls)] = err(ols_fit(ds).beta_hat);

    std::vector<char> flagged(static_cast<std::size_t>(cfg.l), 0);
    for (const Eigen::Index j : fit_cv.invalid_set) flagged[static_cast<std::size_t>(j)] = 1;
    Eigen::Index hit_invalid = 0, hit_valid = 0;
    for (Eigen::Index j = 0; j < cfg.l; ++j) {
      const bool truly_invalid = j < cfg.s;
      const bool says_invalid = flagged[static_cast<std::size_t>(j)] != 0;
      if (truly_invalid && says_invalid) ++hit_invalid;
      if (!truly_invalid && !says_invalid) ++hit_valid;
    }
    r.prop_invalid = cfg.s == 0 ? 1.0 : static_cast<double>(hit_invalid) / static_cast<double>(cfg.s);
    r.prop_valid = cfg.s == cfg.l ? 1.0
                                  : static_cast<double>(hit_valid) / static_cast<double>(cfg.l - cfg.s);

    const MipDiagnostics mip = mip_constants(ds);
    r.rho = mip.rho;
    r.s_max = mip.s_max;
    r.concentration = strength(ds).concentration_scaled;
    r.ok = true;
  } catch (const Error& e) {
    r.ok = false;
    r.message = e.what();
  }
  return r;
}

unsigned simulation_threads() {
  if (const char* env = std::getenv("SISVIVE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SimulationSummary run_cell(const SimulationConfig& cfg, std::size_t reps, unsigned threads) {
  validate(cfg);
  if (reps < 1) throw Error(ErrorCode::kInvalidArgument, "reps must be at least 1");
  instrument_covariance(cfg);
  if (threads == 0) threads = simulation_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));

  std::vector<ReplicationResult> results(reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < reps; i = next++) results[i] = run_replication(cfg, i);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SimulationSummary out;
  out.replications = reps;
  std::vector<double> errors[kNumSimMethods];
  std::vector<double> valid, invalid, lcv, lth, rho, smax, conc;
  for (std::size_t i = 0; i < reps; ++i) {
    const ReplicationResult& r = results[i];
    if (!r.ok) {
      ++out.failures;
      out.failure_messages.push_back("replication " + std::to_string(i) + ": " + r.message);
      continue;
    }
    for (int m = 0; m < kNumSimMethods; ++m) errors[m].push_back(r.abs_error[m]);
    valid.push_back(r.prop_valid);
    invalid.push_back(r.prop_invalid);
    lcv.push_back(r.lambda_cv);
    lth.push_back(r.lambda_theory);
    rho.push_back(r.rho);
    smax.push_back(r.s_max);
    conc.push_back(r.concentration);
  }
  for (int m = 0; m < kNumSimMethods; ++m) out.median_abs_error[m] = median(errors[m]);
  out.prop_correct_valid = mean(valid);
  out.prop_correct_invalid = mean(invalid);
  out.mean_lambda_cv = mean(lcv);
  out.mean_lambda_theory = mean(lth);
  out.median_rho = median(rho);
  out.median_s_max = median(smax);
  out.mean_concentration = mean(conc);
  return out;
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kEndogeneity: return "endogeneity";
    case SweepAxis::kInvalidCount: return "s";
    case SweepAxis::kMu: return "mu";
  }
  return "endogeneity";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  for (auto a : {SweepAxis::kEndogeneity, SweepAxis::kInvalidCount, SweepAxis::kMu}) {
    if (to_string(a) == name) return a;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown sweep axis '" + name + "'");
}

std::vector<double> default_sweep_values(SweepAxis axis, const SimulationConfig& base) {
  std::vector<double> v;
  switch (axis) {
    case SweepAxis::kEndogeneity:
      for (int i = 0; i <= 9; ++i) v.push_back(i / 10.0);
      break;
    case SweepAxis::kInvalidCount:
      for (Eigen::Index s = 0; s < base.l; ++s) v.push_back(static_cast<double>(s));
      break;
    case SweepAxis::kMu:
      v = {0.0, 0.25, 0.5, 0.75};
      break;
  }
  return v;
}

std::vector<GridCell> run_grid(const SimulationConfig& base, const Sweep& sweep, std::size_t reps,
                               unsigned threads) {
  const std::vector<double> values =
      sweep.values.empty() ? default_sweep_values(sweep.axis, base) : sweep.values;
  std::vector<GridCell> cells;
  cells.reserve(values.size());
  for (const double v : values) {
    GridCell cell;
    cell.axis = sweep.axis;
    cell.axis_value = v;
    cell.config = base;
    switch (sweep.axis) {
      case SweepAxis::kEndogeneity:
        if (!(v >= 0.0 && v <= 0.9)) {
          throw Error(ErrorCode::kInvalidArgument, "endogeneity sweep values must lie in [0, 0.9]");
        }
        cell.config.endogeneity = v;
        break;
      case SweepAxis::kInvalidCount:
        if (!(v >= 0.0 && v <= static_cast<double>(base.l - 1)) || v != std::floor(v)) {
          throw Error(ErrorCode::kInvalidArgument, "s sweep values must be integers in [0, l-1]");
        }
        cell.config.s = static_cast<Eigen::Index>(v);
        break;
      case SweepAxis::kMu:
        if (!(v >= 0.0 && v < 1.0)) {
          throw Error(ErrorCode::kInvalidArgument, "mu sweep values must lie in [0, 1)");
        }
        cell.config.mu = v;
        break;
    }
    cell.summary = run_cell(cell.config, reps, threads);
    cells.push_back(std::move(cell));
  }
  return cells;
}

const std::vector<std::string>& summary_metric_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (int m = 0; m < kNumSimMethods; ++m) {
      v.push_back("median_abs_error_" + to_string(static_cast<SimMethod>(m)));
    }
    for (const char* s : {"prop_correct_valid", "prop_correct_invalid", "mean_lambda_cv",
                          "mean_lambda_theory", "median_rho", "median_s_max", "mean_concentration"}) {
      v.emplace_back(s);
    }
    return v;
  }();
  return names;
}

std::vector<double> summary_metric_values(const SimulationSummary& s) {
  std::vector<double> v(s.median_abs_error, s.median_abs_error + kNumSimMethods);
  v.insert(v.end(), {s.prop_correct_valid, s.prop_correct_invalid, s.mean_lambda_cv,
                     s.mean_lambda_theory, s.median_rho, s.median_s_max, s.mean_concentration});
  return v;
}

void write_grid_csv(std::ostream& out, const std::vector<GridCell>& cells) {
  out << "axis,axis_value,n,l,s,mu,endogeneity,corr_structure,strength,relative,"
         "replications,failures,metric,value\n";
  const auto& names = summary_metric_names();
  for (const auto& cell : cells) {
    const SimulationConfig& c = cell.config;
    const std::string prefix =
        to_string(cell.axis) + "," + format_g17(cell.axis_value) + "," + std::to_string(c.n) + "," +
        std::to_string(c.l) + "," + std::to_string(c.s) + "," + format_g17(c.mu) + "," +
        format_g17(c.endogeneity) + "," + to_string(c.corr_structure) + "," +
        to_string(c.strength) + "," + to_string(c.relative) + "," +
        std::to_string(cell.summary.replications) + "," + std::to_string(cell.summary.failures);
    const std::vector<double> values = summary_metric_values(cell.summary);
    for (std::size_t k = 0; k < names.size(); ++k) {
      out << prefix << ',' << csv::escape(names[k]) << ',' << format_g17(values[k]) << '\n';
    }
  }
}

}  // namespace sisvive
