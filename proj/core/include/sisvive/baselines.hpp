#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "sisvive/dataset.hpp"

namespace sisvive {

enum class BaselineMethod { kOls, kTslsNaive, kTslsOracle };

std::string to_string(BaselineMethod m);

struct BaselineFit {
  BaselineMethod method = BaselineMethod::kOls;
  double beta_hat = 0.0;
  std::vector<Eigen::Index> controlled_set;  // instruments used as covariates
};

/// Coefficient on D in the least-squares regression of Y on (Z, D).
/// Throws Error(kRankDeficient) when [Z D] is rank deficient.
BaselineFit ols_fit(const Dataset& ds);

/// TSLS treating the `invalid` instruments as included exogenous regressors
/// and the rest as excluded instruments. An empty set gives naive TSLS.
BaselineFit tsls_fit(const Dataset& ds, const std::vector<Eigen::Index>& invalid = {});

}  // namespace sisvive
