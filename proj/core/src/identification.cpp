#include "sisvive/identification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/QR>

#include "sisvive/error.hpp"

namespace sisvive {

namespace {

constexpr double kNormalEquationTol = 1e-8;

Eigen::VectorXd least_squares(const Eigen::MatrixXd& z, const Eigen::MatrixXd& ztz,
                              const Eigen::VectorXd& v) {
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ztz);
  if (qr.rank() < ztz.cols()) throw Error(ErrorCode::kRankDeficient, "Z^T Z is singular");
  const Eigen::VectorXd rhs = z.transpose() * v;
  Eigen::VectorXd coef = qr.solve(rhs);
  if ((ztz * coef - rhs).norm() > kNormalEquationTol * std::max(1.0, rhs.norm())) {
    throw Error(ErrorCode::kRankDeficient, "reduced-form normal equations are ill-conditioned");
  }
  return coef;
}

double ls_ratio(const ReducedForm& rf, const std::vector<Eigen::Index>& idx) {
  double num = 0.0, den = 0.0;
  for (const Eigen::Index j : idx) {
    num += rf.gamma(j) * rf.big_gamma(j);
    den += rf.gamma(j) * rf.gamma(j);
  }
  return num / den;
}

void check_shapes(const ReducedForm& rf) {
  if (rf.gamma.size() == 0 || rf.gamma.size() != rf.big_gamma.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "gamma and big_gamma must be non-empty and equal length");
  }
}

}  // namespace

ReducedForm given_reduced_form(Eigen::VectorXd gamma, Eigen::VectorXd big_gamma) {
  ReducedForm rf{std::move(gamma), std::move(big_gamma), ReducedForm::Source::kGiven};
  check_shapes(rf);
  return rf;
}

ReducedForm reduced_form(const Dataset& ds) {
  if (!ds.preprocessed()) throw Error(ErrorCode::kInvalidArgument, "dataset must be preprocessed");
  const Eigen::MatrixXd ztz = ds.z().transpose() * ds.z();
  return ReducedForm{least_squares(ds.z(), ztz, ds.d()), least_squares(ds.z(), ztz, ds.y()),
                     ReducedForm::Source::kEstimated};
}

IdentificationReport check_consistency_criterion(const ReducedForm& rf, Eigen::Index u,
                                                 double tol) {
  check_shapes(rf);
  const Eigen::Index l = rf.gamma.size();
  if (u < 1 || u > l) {
    throw Error(ErrorCode::kInvalidArgument, "max invalid count must lie in [1, L]");
  }
  if (!(tol >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be nonnegative");
  for (Eigen::Index j = 0; j < l; ++j) {
    if (!(std::abs(rf.gamma(j)) > tol)) {
      throw Error(ErrorCode::kIrrelevantInstrument,
                  "instrument " + std::to_string(j + 1) +
                      " has no association with the exposure; exclude it and rerun");
    }
  }

  IdentificationReport report;
  report.u = u;
  report.set_size = l - u + 1;
  report.tolerance = tol;

  const Eigen::VectorXd ratio = rf.big_gamma.cwiseQuotient(rf.gamma);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(l));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return ratio(a) < ratio(b); });

  std::vector<RatioCluster> clusters;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || ratio(order[i]) - ratio(order[i - 1]) > tol) clusters.emplace_back();
    clusters.back().members.push_back(order[i]);
  }
  for (auto& c : clusters) {
    std::sort(c.members.begin(), c.members.end());
    c.q = ls_ratio(rf, c.members);
  }
  std::stable_sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) {
    return a.members.size() > b.members.size();
  });

  report.boundary_distance = std::numeric_limits<double>::infinity();
  if (clusters.size() >= 2) {
    for (const Eigen::Index a : clusters[0].members) {
      for (const Eigen::Index b : clusters[1].members) {
        report.boundary_distance = std::min(report.boundary_distance, std::abs(ratio(a) - ratio(b)));
      }
    }
  }

  const auto size = static_cast<std::size_t>(report.set_size);
  std::size_t qualifying = 0;
  for (const auto& c : clusters) {
    if (c.members.size() < size) continue;
    ++qualifying;
    report.beta_candidates.push_back(c.q);
    // Enumerate size-subsets of the cluster in lexicographic order.
    std::vector<std::size_t> pick(size);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    const std::size_t m = c.members.size();
    while (true) {
      if (report.sets.size() >= kMaxCandidateSets) {
        report.sets_truncated = true;
        break;
      }
      CandidateSet set;
      set.q = c.q;
      for (const std::size_t p : pick) set.members.push_back(c.members[p]);
      report.sets.push_back(std::move(set));
      std::size_t i = size;
      while (i > 0 && pick[i - 1] == m - size + (i - 1)) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t k = i; k < size; ++k) pick[k] = pick[k - 1] + 1;
    }
  }
  std::sort(report.beta_candidates.begin(), report.beta_candidates.end());
  report.premise_holds = qualifying >= 1;
  report.identified = qualifying <= 1;
  report.clusters = std::move(clusters);
  return report;
}

double beta_given_valid_set(const ReducedForm& rf, const std::vector<Eigen::Index>& valid,
                            double tol) {
  check_shapes(rf);
  if (valid.empty()) throw Error(ErrorCode::kInvalidArgument, "valid set must be non-empty");
  for (const Eigen::Index j : valid) {
    if (j < 0 || j >= rf.gamma.size()) {
      throw Error(ErrorCode::kInvalidArgument, "valid set index out of range");
    }
    if (!(std::abs(rf.gamma(j)) > tol)) {
      throw Error(ErrorCode::kIrrelevantInstrument,
                  "instrument " + std::to_string(j + 1) + " has no association with the exposure");
    }
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Eigen::Index j : valid) {
    const double r = rf.big_gamma(j) / rf.gamma(j);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (hi - lo > tol) {
    throw Error(ErrorCode::kInconsistentValidSet,
                "valid set is internally inconsistent: ratios range from " + std::to_string(lo) +
                    " to " + std::to_string(hi));
  }
  return ls_ratio(rf, valid);
}

}  // namespace sisvive
