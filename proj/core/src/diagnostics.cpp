#include "sisvive/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>

#include "sisvive/error.hpp"
#include "sisvive/projection.hpp"

namespace sisvive {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_preprocessed(const Dataset& ds) {
  if (!ds.preprocessed()) throw Error(ErrorCode::kInvalidArgument, "dataset must be preprocessed");
}

MipDiagnostics mip_from(const Eigen::MatrixXd& z, const Eigen::VectorXd& dhat) {
  MipDiagnostics out;
  const Eigen::MatrixXd gram = z.transpose() * z;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < gram.cols(); ++j) out.mu = std::max(out.mu, std::abs(gram(i, j)));
  }
  out.rho = (z.transpose() * dhat).cwiseAbs().maxCoeff() / dhat.norm();
  const double by_mu = out.mu > 0.0 ? 1.0 / (12.0 * out.mu) : kInf;
  const double by_rho = out.rho > 0.0 ? 1.0 / (10.0 * out.rho * out.rho) : kInf;
  out.s_max = std::min(by_mu, by_rho);
  return out;
}

}  // namespace

MipDiagnostics mip_constants(const Dataset& ds) {
  require_preprocessed(ds);
  return mip_from(ds.z(), hat_d(ds));
}

double corollary2_error_bound(const Dataset& ds, Eigen::Index s, double lambda,
                              const Eigen::VectorXd& epsilon) {
  require_preprocessed(ds);
  if (s < 0) throw Error(ErrorCode::kInvalidArgument, "s must be nonnegative");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be nonnegative");
  if (epsilon.size() != ds.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "epsilon length differs from the sample size");
  }
  const Eigen::VectorXd dhat = hat_d(ds);
  const MipDiagnostics mip = mip_from(ds.z(), dhat);
  const auto sd = static_cast<double>(s);
  if (!(sd < mip.s_max)) {
    throw Error(ErrorCode::kBoundInapplicable,
                "s = " + std::to_string(s) + " violates s < s_max = " + std::to_string(mip.s_max) +
                    "; the bound cannot be applied");
  }
  const double dnorm = dhat.norm();
  const double noise_term = std::abs(dhat.dot(epsilon)) / (dnorm * dnorm);
  const double denom = 1.0 - sd * (5.0 * mip.rho * mip.rho + 6.0 * mip.mu);
  const double constant = 4.0 * std::sqrt(105.0) / 9.0;
  return noise_term + constant * lambda * sd * mip.rho / (dnorm * denom);
}

std::string to_string(RipMatrix m) {
  switch (m) {
    case RipMatrix::kInstruments: return "Z";
    case RipMatrix::kProjectedOnDhat: return "P_Dhat Z";
    case RipMatrix::kOther: return "other";
  }
  return "other";
}

RipDiagnostics rip_constants(const Eigen::MatrixXd& m, Eigen::Index k, RipMatrix tag) {
  const Eigen::Index l = m.cols();
  if (l > kMaxRipColumns) {
    throw Error(ErrorCode::kTooManyInstruments,
                "exact RIP constants enumerate every support and are limited to " +
                    std::to_string(kMaxRipColumns) + " columns (got " + std::to_string(l) + ")");
  }
  if (k < 1 || k > l) throw Error(ErrorCode::kInvalidArgument, "RIP order k must lie in [1, L]");

  const Eigen::MatrixXd gram = m.transpose() * m;
  RipDiagnostics out;
  out.k = k;
  out.matrix = tag;
  out.delta_plus = -kInf;
  out.delta_minus = kInf;

  const auto ku = static_cast<std::size_t>(k);
  const auto lu = static_cast<std::size_t>(l);
  std::vector<std::size_t> pick(ku);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  Eigen::MatrixXd sub(k, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  while (true) {
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        sub(a, b) = gram(static_cast<Eigen::Index>(pick[a]), static_cast<Eigen::Index>(pick[b]));
      }
    }
    eig.compute(sub, Eigen::EigenvaluesOnly);
    out.delta_minus = std::min(out.delta_minus, eig.eigenvalues()(0));
    out.delta_plus = std::max(out.delta_plus, eig.eigenvalues()(k - 1));
    std::size_t i = ku;
    while (i > 0 && pick[i - 1] == lu - ku + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < ku; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

RipDiagnostics rip_constants(const Dataset& ds, Eigen::Index k, RipMatrix which) {
  require_preprocessed(ds);
  switch (which) {
    case RipMatrix::kInstruments:
      return rip_constants(ds.z(), k, which);
    case RipMatrix::kProjectedOnDhat:
      return rip_constants(Projector::onto_vector(hat_d(ds)).apply(ds.z()), k, which);
    case RipMatrix::kOther:
      break;
  }
  throw Error(ErrorCode::kInvalidArgument, "choose Z or P_Dhat Z");
}

StrengthDiagnostics strength(const Dataset& ds) {
  require_preprocessed(ds);
  const Eigen::Index n = ds.n();
  const Eigen::Index l = ds.num_instruments();
  const Eigen::VectorXd dhat = hat_d(ds);
  const double explained = dhat.squaredNorm();
  const double resid = (ds.d() - dhat).squaredNorm();
  StrengthDiagnostics out;
  // Residual variation at rounding level means D is an exact combination of Z.
  if (resid <= 1e-20 * std::max(explained, 1.0)) {
    out.first_stage_f = kInf;
    out.concentration_scaled = kInf;
    out.infinite = true;
    return out;
  }
  const double sigma2 = resid / static_cast<double>(n - l);
  out.first_stage_f = (explained / static_cast<double>(l)) / sigma2;
  out.concentration_scaled = out.first_stage_f;
  return out;
}

SarganResult sargan_test(const Dataset& ds, double beta_hat) {
  require_preprocessed(ds);
  const Eigen::Index l = ds.num_instruments();
  if (l < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "the overidentification test needs at least two instruments");
  }
  const Eigen::VectorXd e = ds.y() - ds.d() * beta_hat;
  const double ee = e.squaredNorm();
  if (!(ee > 0.0)) throw Error(ErrorCode::kDegenerateExposure, "residuals are identically zero");
  const Projector pz(ds.z());
  SarganResult out;
  out.df = l - 1;
  out.statistic = static_cast<double>(ds.n()) * pz.apply(e).squaredNorm() / ee;
  const boost::math::chi_squared dist(static_cast<double>(out.df));
  out.p_value = out.statistic <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

}  // namespace sisvive
