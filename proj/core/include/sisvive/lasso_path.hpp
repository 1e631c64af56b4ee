#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "sisvive/dataset.hpp"
#include "sisvive/projection.hpp"

namespace sisvive {

/// Standard Lasso problem  min_a  1/2 ||response - design a||^2 + lambda ||a||_1.
struct LassoProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
};

/// Transformed problem for the direct effects: design = P_{Dhat-perp} Z and
/// response = P_{Dhat-perp} P_Z Y, with Dhat = P_Z D.
LassoProblem build_problem(const Dataset& ds);
LassoProblem build_problem(const Eigen::MatrixXd& z, const Eigen::VectorXd& dhat,
                           const Eigen::VectorXd& pz_y);

/// ||design^T response||_inf over non-frozen columns: the smallest lambda
/// with an all-zero solution.
double lambda_max(const LassoProblem& problem);

/// Piecewise-linear solution path. knots are strictly decreasing, starting at
/// lambda_max; coefs[k] solves the problem at knots[k] and coefficients are
/// affine in lambda between knots.
struct LassoPath {
  std::vector<double> knots;
  std::vector<Eigen::VectorXd> coefs;
  std::vector<std::vector<Eigen::Index>> active_sets;

  Eigen::Index num_coefs() const noexcept {
    return coefs.empty() ? 0 : coefs.front().size();
  }
};

struct PathOptions {
  /// Maximum number of knots; 0 selects 10 * L.
  std::size_t max_knots = 0;
  /// Columns with norm below this are held at zero and never enter.
  double zero_column_tol = 1e-12;
};

/// LARS with the Lasso modification (variables leave the active set when
/// their coefficient crosses zero). Runs from lambda_max down to 0. When two
/// columns reach the correlation bound together the lower index enters first.
/// Throws Error(kPathLimitExceeded) past the knot limit.
LassoPath fit_path(const LassoProblem& problem, const PathOptions& options = {});

/// Exact interpolation of the path at `lambda` (zero above lambda_max).
/// Throws Error(kInvalidArgument) for negative lambda.
Eigen::VectorXd solve_at(const LassoPath& path, double lambda);

}  // namespace sisvive
