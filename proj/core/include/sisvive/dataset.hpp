#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sisvive {

/// Transforms applied by preprocess(), kept so that direct effects can be
/// reported in the instruments' original units.
struct ScalingRecord {
  Eigen::VectorXd z_means;  // column means before residualization/centering
  Eigen::VectorXd z_norms;  // norm of each residualized column, all > 0
  double y_mean = 0.0;
  double d_mean = 0.0;
  bool residualized_on_covariates = false;
};

/// Observed data: outcome y, exposure d, instruments z (n x L) and optional
/// exogenous covariates x (n x p). Immutable once built.
class Dataset {
 public:
  Dataset(Eigen::VectorXd y, Eigen::VectorXd d, Eigen::MatrixXd z,
          std::optional<Eigen::MatrixXd> x = std::nullopt,
          std::vector<std::string> instrument_names = {});

  const Eigen::VectorXd& y() const noexcept { return y_; }
  const Eigen::VectorXd& d() const noexcept { return d_; }
  const Eigen::MatrixXd& z() const noexcept { return z_; }
  const std::optional<Eigen::MatrixXd>& x() const noexcept { return x_; }
  const std::vector<std::string>& instrument_names() const noexcept { return names_; }
  const std::optional<ScalingRecord>& scaling() const noexcept { return scaling_; }

  Eigen::Index n() const noexcept { return y_.size(); }
  Eigen::Index num_instruments() const noexcept { return z_.cols(); }
  bool preprocessed() const noexcept { return preprocessed_; }

  /// Checks the preprocessed invariants (centered, unit-norm instruments,
  /// n >= L + 2, full column rank) and returns the same data flagged as
  /// preprocessed. Throws sisvive::Error when an invariant fails.
  static Dataset from_preprocessed(Eigen::VectorXd y, Eigen::VectorXd d, Eigen::MatrixXd z,
                                   std::vector<std::string> instrument_names = {});

  /// Rows `rows` of this dataset. The subset is never flagged preprocessed
  /// because its columns are no longer centered or unit-norm.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

 private:
  friend std::pair<Dataset, ScalingRecord> preprocess(const Dataset& ds);

  Eigen::VectorXd y_;
  Eigen::VectorXd d_;
  Eigen::MatrixXd z_;
  std::optional<Eigen::MatrixXd> x_;
  std::vector<std::string> names_;
  std::optional<ScalingRecord> scaling_;
  bool preprocessed_ = false;
};

/// Residualizes y, d and every instrument on [1, X] (plain centering when no
/// covariates are present), then scales each instrument column to unit
/// Euclidean norm.
std::pair<Dataset, ScalingRecord> preprocess(const Dataset& ds);

/// Tolerance on the centered instrument norm below which a column is treated
/// as constant.
inline constexpr double kZeroVarianceTol = 1e-12;

/// Numerical rank with tolerance rows * eps * largest singular value.
Eigen::Index numerical_rank(const Eigen::MatrixXd& m);

/// Column roles for load_csv().
struct ColumnRoles {
  std::string outcome;
  std::string exposure;
  std::vector<std::string> instruments;
  std::vector<std::string> covariates;
};

/// Reads an RFC-4180 style CSV with a header row. Only the columns named in
/// `roles` must be numeric and complete.
Dataset load_csv(const std::string& path, const ColumnRoles& roles);

}  // namespace sisvive
