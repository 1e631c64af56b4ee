#include "sisvive/projection.hpp"

#include <Eigen/QR>

#include "sisvive/error.hpp"

namespace sisvive {

Projector::Projector(const Eigen::MatrixXd& m) {
  const Eigen::Index k = m.cols();
  if (k == 0 || m.rows() < k) {
    throw Error(ErrorCode::kRankDeficient,
                "cannot project onto " + std::to_string(k) + " columns in dimension " +
                    std::to_string(m.rows()));
  }
  const Eigen::Index r = numerical_rank(m);
  if (r < k) {
    throw Error(ErrorCode::kRankDeficient, "matrix has rank " + std::to_string(r) +
                                               " but " + std::to_string(k) + " columns");
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), k);
}

Projector Projector::onto_vector(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw Error(ErrorCode::kRankDeficient, "cannot project onto a zero vector");
  Projector p;
  p.basis_ = v / norm;
  return p;
}

Eigen::VectorXd Projector::apply(const Eigen::VectorXd& v) const {
  if (v.size() != dim()) throw Error(ErrorCode::kDimensionMismatch, "projector size mismatch");
  return basis_ * (basis_.transpose() * v);
}

Eigen::MatrixXd Projector::apply(const Eigen::MatrixXd& m) const {
  if (m.rows() != dim()) throw Error(ErrorCode::kDimensionMismatch, "projector size mismatch");
  return basis_ * (basis_.transpose() * m);
}

Eigen::VectorXd Projector::apply_complement(const Eigen::VectorXd& v) const {
  return v - apply(v);
}

Eigen::MatrixXd Projector::apply_complement(const Eigen::MatrixXd& m) const {
  return m - apply(m);
}

Eigen::VectorXd fitted_exposure(const Projector& pz, const Eigen::VectorXd& d) {
  Eigen::VectorXd dhat = pz.apply(d);
  if (!(dhat.norm() >= kDegenerateExposureTol)) {
    throw Error(ErrorCode::kDegenerateExposure,
                "exposure has no component in the instrument space; the causal effect is not "
                "estimable");
  }
  return dhat;
}

Eigen::VectorXd fitted_exposure(const Eigen::MatrixXd& z, const Eigen::VectorXd& d) {
  return fitted_exposure(Projector(z), d);
}

Eigen::VectorXd hat_d(const Dataset& ds) {
  if (!ds.preprocessed()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset must be preprocessed");
  }
  return fitted_exposure(ds.z(), ds.d());
}

}  // namespace sisvive
