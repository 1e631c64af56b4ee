#include "sisvive/baselines.hpp"

#include <algorithm>

#include "sisvive/error.hpp"
#include "sisvive/projection.hpp"

namespace sisvive {

namespace {

void require_preprocessed(const Dataset& ds) {
  if (!ds.preprocessed()) throw Error(ErrorCode::kInvalidArgument, "dataset must be preprocessed");
}

}  // namespace

std::string to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::kOls: return "ols";
    case BaselineMethod::kTslsNaive: return "tsls_naive";
    case BaselineMethod::kTslsOracle: return "tsls_oracle";
  }
  return "ols";
}

BaselineFit ols_fit(const Dataset& ds) {
  require_preprocessed(ds);
  const Eigen::Index l = ds.num_instruments();
  // Frisch-Waugh: the D coefficient regresses Y on D after partialling out Z.
  const Projector pz(ds.z());
  const Eigen::VectorXd d_perp = pz.apply_complement(ds.d());
  Eigen::MatrixXd zd(ds.n(), l + 1);
  zd << ds.z(), ds.d();
  if (numerical_rank(zd) < l + 1) {
    throw Error(ErrorCode::kRankDeficient, "[Z D] is rank deficient; OLS is undefined");
  }
  return BaselineFit{BaselineMethod::kOls, d_perp.dot(ds.y()) / d_perp.squaredNorm(), {}};
}

BaselineFit tsls_fit(const Dataset& ds, const std::vector<Eigen::Index>& invalid) {
  require_preprocessed(ds);
  const Eigen::Index l = ds.num_instruments();
  std::vector<Eigen::Index> controlled = invalid;
  std::sort(controlled.begin(), controlled.end());
  if (std::adjacent_find(controlled.begin(), controlled.end()) != controlled.end()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid set has duplicate indices");
  }
  for (const Eigen::Index j : controlled) {
    if (j < 0 || j >= l) throw Error(ErrorCode::kInvalidArgument, "invalid set index out of range");
  }
  if (static_cast<Eigen::Index>(controlled.size()) >= l) {
    throw Error(ErrorCode::kInvalidArgument,
                "every instrument is declared invalid; TSLS needs at least one excluded instrument");
  }

  std::vector<Eigen::Index> excluded;
  for (Eigen::Index j = 0; j < l; ++j) {
    if (!std::binary_search(controlled.begin(), controlled.end(), j)) excluded.push_back(j);
  }
  const Eigen::MatrixXd z_valid = ds.z()(Eigen::all, excluded);

  Eigen::VectorXd d_tilde;
  if (controlled.empty()) {
    d_tilde = fitted_exposure(ds.z(), ds.d());
  } else {
    const Projector pw(Eigen::MatrixXd(ds.z()(Eigen::all, controlled)));
    const Eigen::MatrixXd zv_perp = pw.apply_complement(z_valid);
    d_tilde = fitted_exposure(zv_perp, pw.apply_complement(ds.d()));
  }
  const double denom = d_tilde.dot(ds.d());
  const BaselineMethod method =
      controlled.empty() ? BaselineMethod::kTslsNaive : BaselineMethod::kTslsOracle;
  return BaselineFit{method, d_tilde.dot(ds.y()) / denom, std::move(controlled)};
}

}  // namespace sisvive
