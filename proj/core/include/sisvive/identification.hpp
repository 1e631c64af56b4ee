#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "sisvive/dataset.hpp"

namespace sisvive {

/// Reduced-form coefficients: gamma (instruments -> exposure) and
/// big_gamma (instruments -> outcome).
struct ReducedForm {
  enum class Source { kGiven, kEstimated };
  Eigen::VectorXd gamma;
  Eigen::VectorXd big_gamma;
  Source source = Source::kGiven;
};

ReducedForm given_reduced_form(Eigen::VectorXd gamma, Eigen::VectorXd big_gamma);

/// Least-squares reduced forms on a preprocessed dataset. Throws
/// Error(kRankDeficient) when Z^T Z is singular.
ReducedForm reduced_form(const Dataset& ds);

struct CandidateSet {
  std::vector<Eigen::Index> members;  // 0-based, ascending
  double q = 0.0;
};

struct RatioCluster {
  std::vector<Eigen::Index> members;
  double q = 0.0;  // least-squares common ratio of the members
};

struct IdentificationReport {
  Eigen::Index u = 0;
  Eigen::Index set_size = 0;  // L - u + 1
  std::vector<RatioCluster> clusters;  // every ratio cluster, largest first
  std::vector<CandidateSet> sets;
  bool sets_truncated = false;
  bool identified = false;
  /// At least one cluster is large enough, i.e. the data are compatible
  /// with fewer than u invalid instruments.
  bool premise_holds = false;
  std::vector<double> beta_candidates;  // ascending
  double tolerance = 0.0;
  /// Smallest ratio gap between members of the two largest clusters; how far
  /// the ratios must move for those clusters to merge. +inf with < 2 clusters.
  double boundary_distance = 0.0;
};

inline constexpr double kDefaultIdentificationTol = 1e-6;

/// Cap on enumerated candidate sets; beyond it `sets_truncated` is set and
/// the clusters carry the full information.
inline constexpr std::size_t kMaxCandidateSets = 100000;

/// Ratios Gamma_j / gamma_j are grouped by single linkage (consecutive sorted
/// ratios closer than `tol` share a cluster). Every cluster with at least
/// L - u + 1 members yields its size-(L - u + 1) subsets as candidate sets.
/// Identified when at most one cluster qualifies.
/// Throws Error(kIrrelevantInstrument) when some |gamma_j| <= tol.
IdentificationReport check_consistency_criterion(const ReducedForm& rf, Eigen::Index u,
                                                 double tol = kDefaultIdentificationTol);

/// Common ratio sum(gamma_j Gamma_j) / sum(gamma_j^2) over `valid`. Throws
/// Error(kInconsistentValidSet) when two members' ratios differ by more than
/// `tol`.
double beta_given_valid_set(const ReducedForm& rf, const std::vector<Eigen::Index>& valid,
                            double tol = kDefaultIdentificationTol);

}  // namespace sisvive
