#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sisvive/dataset.hpp"
#include "sisvive/estimator.hpp"
#include "sisvive/rng.hpp"

namespace sisvive {

enum class CorrStructure { kAllPairs, kWithinGroups, kBetweenGroups };
enum class Strength { kStrong, kWeak };
enum class RelativeStrength { kEqual, kVariable, kStrongerInvalid, kStrongerValid };

std::string to_string(CorrStructure v);
std::string to_string(Strength v);
std::string to_string(RelativeStrength v);
/// Inverse of to_string; throws Error(kInvalidArgument) on unknown names.
CorrStructure parse_corr_structure(const std::string& name);
Strength parse_strength(const std::string& name);
RelativeStrength parse_relative_strength(const std::string& name);

/// Scaled concentration target: 100 for strong, 10 for weak instruments.
double concentration_target(Strength s);

/// What the concentration target refers to.
///  kValidPartialled: the excluded (valid) instruments after partialling out
///    the invalid ones, per valid instrument: n g_V^T Sigma_{V|I} g_V = (l - s) * target.
///    With s = 0 or uncorrelated instruments this equals kAllInstruments.
///  kAllInstruments: all instruments, per instrument: n g^T Sigma g = l * target.
enum class ConcentrationBasis { kValidPartialled, kAllInstruments };
std::string to_string(ConcentrationBasis v);
ConcentrationBasis parse_concentration_basis(const std::string& name);

/// Data-generating design. The first s instruments are invalid with direct
/// effect alpha_magnitude; the structural errors have unit variances and
/// correlation `endogeneity`.
struct SimulationConfig {
  Eigen::Index n = 2000;
  Eigen::Index l = 10;
  Eigen::Index s = 3;
  double beta_star = 1.0;
  double alpha_magnitude = 1.0;
  double endogeneity = 0.8;
  CorrStructure corr_structure = CorrStructure::kAllPairs;
  double mu = 0.0;
  Strength strength = Strength::kStrong;
  ConcentrationBasis concentration_basis = ConcentrationBasis::kValidPartialled;
  RelativeStrength relative = RelativeStrength::kEqual;
  double pi_star = 0.0;
  double gamma0_star = 0.0;
  std::uint64_t seed = 0;
  int cv_folds = 10;
  OneSeRule one_se_rule = OneSeRule::kLargestLambda;
};

/// Throws Error(kInvalidArgument or kInfeasibleConfig) for an unusable design.
void validate(const SimulationConfig& cfg);

/// Population instrument covariance (unit diagonal). Throws
/// Error(kNotPositiveDefinite) when the requested structure is not PD.
Eigen::MatrixXd instrument_covariance(const SimulationConfig& cfg);

/// First-stage coefficients with the configured relative pattern, scaled to
/// the concentration target under cfg.concentration_basis.
Eigen::VectorXd calibrate_gamma(const SimulationConfig& cfg);

struct TruthRecord {
  Eigen::VectorXd alpha;  // original units
  double beta = 0.0;
  Eigen::VectorXd gamma;
  Eigen::VectorXd epsilon;
  Eigen::VectorXd xi;
  std::vector<Eigen::Index> invalid_set;
};

/// Draws one data set from `rng`: Z (row by row), then (epsilon, xi) pairs.
/// The returned dataset is raw; callers preprocess.
std::pair<Dataset, TruthRecord> generate_dataset(const SimulationConfig& cfg, Rng& rng);
/// Replication `replication` of cfg's seed stream.
std::pair<Dataset, TruthRecord> generate_dataset(const SimulationConfig& cfg,
                                                 std::uint64_t replication = 0);

enum class SimMethod { kSisviveCv, kSisviveTheory, kTslsNaive, kTslsOracle, kOls };
inline constexpr int kNumSimMethods = 5;
std::string to_string(SimMethod m);

struct SimulationSummary {
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;  // "replication i: message", in order
  double median_abs_error[kNumSimMethods] = {};
  double prop_correct_valid = 0.0;
  double prop_correct_invalid = 0.0;
  double mean_lambda_cv = 0.0;
  double mean_lambda_theory = 0.0;
  double median_rho = 0.0;
  double median_s_max = 0.0;
  double mean_concentration = 0.0;

  double error(SimMethod m) const { return median_abs_error[static_cast<int>(m)]; }
};

/// Outcome of one replication; exposed for tests and custom summaries.
struct ReplicationResult {
  bool ok = false;
  std::string message;
  double abs_error[kNumSimMethods] = {};
  double beta_cv = 0.0;
  double beta_theory = 0.0;
  double prop_valid = 0.0;
  double prop_invalid = 0.0;
  double lambda_cv = 0.0;
  double lambda_theory = 0.0;
  double rho = 0.0;
  double s_max = 0.0;
  double concentration = 0.0;
};

ReplicationResult run_replication(const SimulationConfig& cfg, std::uint64_t replication);

/// Worker count from SISVIVE_THREADS (default: hardware concurrency).
unsigned simulation_threads();

/// reps independent replications (streams seed + 0 .. seed + reps - 1),
/// optionally in parallel. The result does not depend on the thread count.
SimulationSummary run_cell(const SimulationConfig& cfg, std::size_t reps, unsigned threads = 0);

enum class SweepAxis { kEndogeneity, kInvalidCount, kMu };
std::string to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& name);

struct Sweep {
  SweepAxis axis = SweepAxis::kEndogeneity;
  std::vector<double> values;  // empty: the default grid for the axis
};

/// Default grids: endogeneity 0, 0.1, ..., 0.9; s = 0 .. l-1; mu in {0, .25, .5, .75}.
std::vector<double> default_sweep_values(SweepAxis axis, const SimulationConfig& base);

struct GridCell {
  SweepAxis axis = SweepAxis::kEndogeneity;
  double axis_value = 0.0;
  SimulationConfig config;
  SimulationSummary summary;
};

std::vector<GridCell> run_grid(const SimulationConfig& base, const Sweep& sweep, std::size_t reps,
                               unsigned threads = 0);

/// Metric names in CSV order.
const std::vector<std::string>& summary_metric_names();
std::vector<double> summary_metric_values(const SimulationSummary& s);

/// Long-format CSV: one row per (cell, metric), 17 significant digits.
void write_grid_csv(std::ostream& out, const std::vector<GridCell>& cells);

}  // namespace sisvive
