#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sisvive/dataset.hpp"
#include "sisvive/lasso_path.hpp"
#include "sisvive/projection.hpp"

namespace sisvive {

/// Solution of the penalized estimating-equation problem
///   min_{alpha, beta} 1/2 ||P_Z (Y - Z alpha - D beta)||^2 + lambda ||alpha||_1
/// at one lambda.
struct SisviveFit {
  Eigen::VectorXd alpha_hat;      // unit-norm instrument scale
  Eigen::VectorXd alpha_hat_raw;  // original instrument units
  double beta_hat = 0.0;
  double lambda = 0.0;
  std::vector<Eigen::Index> invalid_set;  // support of alpha_hat
  Eigen::VectorXd residuals;              // Y - Z alpha_hat - D beta_hat
  double estimating_eq_norm = 0.0;        // ||P_Z residuals||
};

/// Reusable solver for one (Z, D, Y): computes Dhat and the full Lasso path
/// once, then evaluates any lambda by interpolation and the closed-form
/// beta step. Works on any rows, including CV training folds that are not
/// themselves centered.
class SisviveSolver {
 public:
  SisviveSolver(const Eigen::MatrixXd& z, const Eigen::VectorXd& d, const Eigen::VectorXd& y,
                const PathOptions& options = {});
  /// Requires a preprocessed dataset.
  explicit SisviveSolver(const Dataset& ds, const PathOptions& options = {});

  double lambda_max() const noexcept { return path_.knots.front(); }
  const LassoPath& path() const noexcept { return path_; }
  const LassoProblem& problem() const noexcept { return problem_; }
  const Eigen::VectorXd& dhat() const noexcept { return dhat_; }

  /// beta for given direct effects: Dhat^T (Y - Z alpha) / ||Dhat||^2.
  double beta_for(const Eigen::VectorXd& alpha) const;

  /// (alpha, beta) at lambda. At lambda = 0 the minimizer set is a line;
  /// the member with the smallest ||Z alpha|| is returned, whose beta is the
  /// all-instrument TSLS estimate.
  std::pair<Eigen::VectorXd, double> coefficients_at(double lambda) const;

  SisviveFit fit_at(double lambda) const;

 private:
  Eigen::MatrixXd z_;
  Eigen::VectorXd d_;
  Eigen::VectorXd y_;
  Projector pz_;
  Eigen::VectorXd dhat_;
  double dhat_sq_ = 0.0;
  double dhat_y_ = 0.0;
  Eigen::RowVectorXd dhat_z_;
  LassoProblem problem_;
  LassoPath path_;
};

/// Fit at a fixed lambda on a preprocessed dataset.
SisviveFit estimate_at_lambda(const Dataset& ds, double lambda);

/// How the one-standard-error rule resolves to a single lambda.
enum class OneSeRule {
  kSmallestLambda,  // smallest lambda within one SE of the minimum CV loss
  kLargestLambda,   // largest lambda within one SE (the textbook convention)
};

struct CvOptions {
  int folds = 10;
  std::uint64_t seed = 0;
  OneSeRule rule = OneSeRule::kLargestLambda;
  int grid_size = 100;
  double grid_floor_ratio = 1e-4;
};

struct CvReport {
  std::vector<double> lambda_grid;  // decreasing
  std::vector<double> mean_cv_loss;
  std::vector<double> se_cv_loss;
  double chosen_lambda = 0.0;
  std::size_t min_index = 0;
  int k = 0;
  std::uint64_t seed = 0;
  OneSeRule rule = OneSeRule::kLargestLambda;
};

/// K-fold cross-validation of the estimating-equation loss
/// ||P_{Z_val}(Y_val - Z_val alpha - D_val beta)||, with folds from a seeded
/// Fisher-Yates shuffle split into contiguous blocks.
CvReport cross_validate_lambda(const Dataset& ds, const CvOptions& options);
CvReport cross_validate_lambda(const Dataset& ds, int k, std::uint64_t seed);

/// 3 ||Z^T P_{Dhat-perp} epsilon||_inf for known structural errors epsilon.
double theory_lambda(const Dataset& ds, const Eigen::VectorXd& epsilon);

/// Cross-validate lambda, then fit on the full data at the chosen value.
std::pair<SisviveFit, CvReport> estimate(const Dataset& ds, const CvOptions& options);
std::pair<SisviveFit, CvReport> estimate(const Dataset& ds, int k, std::uint64_t seed);

}  // namespace sisvive
