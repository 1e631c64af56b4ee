#include "sisvive/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "sisvive/error.hpp"
#include "sisvive/rng.hpp"

namespace sisvive {

namespace {

const Dataset& require_preprocessed(const Dataset& ds) {
  if (!ds.preprocessed()) throw Error(ErrorCode::kInvalidArgument, "dataset must be preprocessed");
  return ds;
}

Eigen::VectorXd raw_scale(const Dataset& ds, const Eigen::VectorXd& alpha) {
  if (!ds.scaling()) return alpha;
  return alpha.cwiseQuotient(ds.scaling()->z_norms);
}

std::vector<double> log_grid(double top, int size, double floor_ratio) {
  std::vector<double> grid;
  if (!(top > 0.0)) return {0.0};
  grid.reserve(static_cast<std::size_t>(size));
  const double log_top = std::log(top);
  const double log_bottom = std::log(top * floor_ratio);
  for (int i = 0; i < size; ++i) {
    const double frac = size == 1 ? 0.0 : static_cast<double>(i) / (size - 1);
    grid.push_back(i == 0 ? top : std::exp(log_top + frac * (log_bottom - log_top)));
  }
  return grid;
}

}  // namespace

SisviveSolver::SisviveSolver(const Eigen::MatrixXd& z, const Eigen::VectorXd& d,
                             const Eigen::VectorXd& y, const PathOptions& options)
    : z_(z), d_(d), y_(y), pz_(z) {
  if (d_.size() != z_.rows() || y_.size() != z_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "outcome, exposure and instruments differ in rows");
  }
  dhat_ = fitted_exposure(pz_, d_);
  dhat_sq_ = dhat_.squaredNorm();
  dhat_y_ = dhat_.dot(y_);
  dhat_z_ = dhat_.transpose() * z_;
  problem_ = build_problem(z_, dhat_, pz_.apply(y_));
  path_ = fit_path(problem_, options);
}

SisviveSolver::SisviveSolver(const Dataset& ds, const PathOptions& options)
    : SisviveSolver(require_preprocessed(ds).z(), ds.d(), ds.y(), options) {}

double SisviveSolver::beta_for(const Eigen::VectorXd& alpha) const {
  return (dhat_y_ - dhat_z_.dot(alpha)) / dhat_sq_;
}

std::pair<Eigen::VectorXd, double> SisviveSolver::coefficients_at(double lambda) const {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be nonnegative");
  if (lambda == 0.0) {
    // Unpenalized problem: any beta attains zero loss with
    // alpha = (Z^T Z)^{-1} Z^T (Y - D beta). Minimizing ||Z alpha|| over that
    // line selects the TSLS beta.
    const double beta = dhat_y_ / dhat_sq_;
    const Eigen::VectorXd pz_y = pz_.apply(y_);
    Eigen::VectorXd alpha = z_.colPivHouseholderQr().solve(pz_y - dhat_ * beta);
    // Round-off dust (e.g. L = 1, where the exact answer is alpha = 0) must
    // not show up as a selected instrument.
    const double floor = 1e-10 * pz_y.norm();
    for (Eigen::Index j = 0; j < alpha.size(); ++j) {
      if (std::abs(alpha(j)) * z_.col(j).norm() <= floor) alpha(j) = 0.0;
    }
    return {std::move(alpha), beta};
  }
  Eigen::VectorXd alpha = solve_at(path_, lambda);
  const double beta = beta_for(alpha);
  return {std::move(alpha), beta};
}

SisviveFit SisviveSolver::fit_at(double lambda) const {
  auto [alpha, beta] = coefficients_at(lambda);
  SisviveFit fit;
  fit.lambda = lambda;
  fit.beta_hat = beta;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (alpha(j) != 0.0) fit.invalid_set.push_back(j);
  }
  fit.residuals = y_ - z_ * alpha - d_ * beta;
  fit.estimating_eq_norm = pz_.apply(fit.residuals).norm();
  fit.alpha_hat_raw = alpha;
  fit.alpha_hat = std::move(alpha);
  return fit;
}

SisviveFit estimate_at_lambda(const Dataset& ds, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be nonnegative");
  const SisviveSolver solver(ds);
  SisviveFit fit = solver.fit_at(lambda);
  fit.alpha_hat_raw = raw_scale(ds, fit.alpha_hat);
  return fit;
}

CvReport cross_validate_lambda(const Dataset& ds, const CvOptions& options) {
  require_preprocessed(ds);
  const Eigen::Index n = ds.n();
  const Eigen::Index l = ds.num_instruments();
  const int k = options.folds;
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "cross-validation needs at least 2 folds");
  if (n < 2 * static_cast<Eigen::Index>(k)) {
    throw Error(ErrorCode::kInvalidArgument, "cross-validation needs n >= 2k observations");
  }
  if (options.grid_size < 1 || !(options.grid_floor_ratio > 0.0 && options.grid_floor_ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid lambda grid settings");
  }

  Rng rng = make_rng(options.seed);
  const std::vector<std::int64_t> perm = shuffled_indices(n, rng);

  CvReport report;
  report.k = k;
  report.seed = options.seed;
  report.rule = options.rule;
  report.lambda_grid =
      log_grid(SisviveSolver(ds).lambda_max(), options.grid_size, options.grid_floor_ratio);
  const std::size_t grid_size = report.lambda_grid.size();

  std::vector<std::vector<double>> losses(static_cast<std::size_t>(k),
                                          std::vector<double>(grid_size));
  for (int f = 0; f < k; ++f) {
    const Eigen::Index begin = f * n / k;
    const Eigen::Index end = (f + 1) * n / k;
    std::vector<Eigen::Index> train, val;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = perm[static_cast<std::size_t>(i)];
      (i >= begin && i < end ? val : train).push_back(row);
    }
    if (static_cast<Eigen::Index>(val.size()) <= l) {
      throw Error(ErrorCode::kFoldTooSmall,
                  "validation fold has " + std::to_string(val.size()) + " rows for " +
                      std::to_string(l) + " instruments; use fewer folds");
    }
    const Dataset train_ds = ds.subset(train);
    const Dataset val_ds = ds.subset(val);
    const SisviveSolver solver(train_ds.z(), train_ds.d(), train_ds.y());
    const Projector pval = [&] {
      try {
        return Projector(val_ds.z());
      } catch (const Error&) {
        throw Error(ErrorCode::kFoldTooSmall,
                    "validation fold instruments are rank deficient; use fewer folds");
      }
    }();
    for (std::size_t g = 0; g < grid_size; ++g) {
      const auto [alpha, beta] = solver.coefficients_at(report.lambda_grid[g]);
      const Eigen::VectorXd r = val_ds.y() - val_ds.z() * alpha - val_ds.d() * beta;
      losses[static_cast<std::size_t>(f)][g] = pval.apply(r).norm();
    }
  }

  report.mean_cv_loss.resize(grid_size);
  report.se_cv_loss.resize(grid_size);
  for (std::size_t g = 0; g < grid_size; ++g) {
    double mean = 0.0;
    for (int f = 0; f < k; ++f) mean += losses[static_cast<std::size_t>(f)][g];
    mean /= k;
    double ss = 0.0;
    for (int f = 0; f < k; ++f) {
      const double dev = losses[static_cast<std::size_t>(f)][g] - mean;
      ss += dev * dev;
    }
    report.mean_cv_loss[g] = mean;
    report.se_cv_loss[g] = std::sqrt(ss / (k - 1)) / std::sqrt(static_cast<double>(k));
  }

  const auto min_it = std::min_element(report.mean_cv_loss.begin(), report.mean_cv_loss.end());
  report.min_index = static_cast<std::size_t>(min_it - report.mean_cv_loss.begin());
  const double threshold = *min_it + report.se_cv_loss[report.min_index];
  std::size_t chosen = report.min_index;
  if (options.rule == OneSeRule::kSmallestLambda) {
    for (std::size_t g = grid_size; g-- > 0;) {
      if (report.mean_cv_loss[g] <= threshold) {
        chosen = g;
        break;
      }
    }
  } else {
    for (std::size_t g = 0; g < grid_size; ++g) {
      if (report.mean_cv_loss[g] <= threshold) {
        chosen = g;
        break;
      }
    }
  }
  report.chosen_lambda = report.lambda_grid[chosen];
  return report;
}

CvReport cross_validate_lambda(const Dataset& ds, int k, std::uint64_t seed) {
  CvOptions options;
  options.folds = k;
  options.seed = seed;
  return cross_validate_lambda(ds, options);
}

double theory_lambda(const Dataset& ds, const Eigen::VectorXd& epsilon) {
  require_preprocessed(ds);
  if (epsilon.size() != ds.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "epsilon length differs from the sample size");
  }
  const Projector pd = Projector::onto_vector(hat_d(ds));
  return 3.0 * (ds.z().transpose() * pd.apply_complement(epsilon)).cwiseAbs().maxCoeff();
}

std::pair<SisviveFit, CvReport> estimate(const Dataset& ds, const CvOptions& options) {
  CvReport report = cross_validate_lambda(ds, options);
  SisviveFit fit = estimate_at_lambda(ds, report.chosen_lambda);
  return {std::move(fit), std::move(report)};
}

std::pair<SisviveFit, CvReport> estimate(const Dataset& ds, int k, std::uint64_t seed) {
  CvOptions options;
  options.folds = k;
  options.seed = seed;
  return estimate(ds, options);
}

}  // namespace sisvive
