#pragma once

#include <Eigen/Core>

#include "sisvive/dataset.hpp"

namespace sisvive {

/// Orthogonal projection onto the column space of a full-rank matrix,
/// stored as a thin orthonormal basis Q (n x r). apply(v) = Q (Q^T v);
/// the n x n projection matrix is never formed.
class Projector {
 public:
  /// Throws Error(kRankDeficient) when `m` does not have full column rank.
  explicit Projector(const Eigen::MatrixXd& m);

  /// Projection onto a single nonzero direction.
  static Projector onto_vector(const Eigen::VectorXd& v);

  Eigen::Index dim() const noexcept { return basis_.rows(); }
  Eigen::Index rank() const noexcept { return basis_.cols(); }
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
  Eigen::VectorXd apply_complement(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd apply_complement(const Eigen::MatrixXd& m) const;

 private:
  Projector() = default;
  Eigen::MatrixXd basis_;
};

/// Absolute floor on ||P_Z D|| below which the exposure carries no
/// instrument-explained variation.
inline constexpr double kDegenerateExposureTol = 1e-10;

/// Fitted exposure P_Z d. Throws Error(kDegenerateExposure) when its norm
/// falls below kDegenerateExposureTol.
Eigen::VectorXd fitted_exposure(const Eigen::MatrixXd& z, const Eigen::VectorXd& d);
Eigen::VectorXd fitted_exposure(const Projector& pz, const Eigen::VectorXd& d);

/// D-hat = P_Z D for a preprocessed dataset.
Eigen::VectorXd hat_d(const Dataset& ds);

}  // namespace sisvive
