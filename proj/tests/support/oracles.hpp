#pragma once

// Independent reference implementations used as test oracles. None of them
// call into the library's solvers; they rely only on Eigen dense algebra.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace sisvive::testing {

using Rng = std::mt19937_64;

// ---- generators -----------------------------------------------------------

inline Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  }
  return m;
}

inline Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n) { return gaussian(rng, n, 1).col(0); }

inline Eigen::Index uniform_int(Rng& rng, Eigen::Index lo, Eigen::Index hi) {
  return std::uniform_int_distribution<Eigen::Index>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// n x k matrix with orthonormal columns.
inline Eigen::MatrixXd orthonormal_columns(Rng& rng, Eigen::Index n, Eigen::Index k) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, n, k));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

/// Centered columns scaled to unit norm.
inline Eigen::MatrixXd standardize(Eigen::MatrixXd m) {
  m.rowwise() -= m.colwise().mean();
  for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) /= m.col(j).norm();
  return m;
}

inline Eigen::VectorXd center(Eigen::VectorXd v) { return v.array() - v.mean(); }

/// A random preprocessed-style instance: y, d centered, z standardized, with
/// a few direct effects and a first stage of moderate strength.
struct Instance {
  Eigen::MatrixXd z;
  Eigen::VectorXd d;
  Eigen::VectorXd y;
};

inline Instance random_instance(Rng& rng, Eigen::Index n, Eigen::Index l) {
  Instance in;
  in.z = standardize(gaussian(rng, n, l));
  const Eigen::VectorXd gamma = gaussian_vector(rng, l).array() + 2.0;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(l);
  const Eigen::Index s = uniform_int(rng, 0, l / 2);
  for (Eigen::Index j = 0; j < s; ++j) alpha(j) = uniform_real(rng, 1.0, 3.0);
  const Eigen::VectorXd e1 = gaussian_vector(rng, n), e2 = gaussian_vector(rng, n);
  in.d = center(in.z * gamma + 0.3 * (0.6 * e1 + 0.8 * e2));
  in.y = center(in.z * alpha + in.d * uniform_real(rng, -2.0, 2.0) + 0.3 * e1);
  return in;
}

// ---- dense algebra --------------------------------------------------------

/// Explicit projection matrix M (M^T M)^{-1} M^T from the normal equations.
inline Eigen::MatrixXd projection_matrix(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd gram_inv = (m.transpose() * m).inverse();
  return m * gram_inv * m.transpose();
}

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// ---- Lasso ----------------------------------------------------------------

/// Cyclic coordinate descent for 1/2 ||y - X a||^2 + lambda ||a||_1.
inline Eigen::VectorXd cd_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                                double tol = 1e-14, int max_sweeps = 1000000) {
  const Eigen::Index p = x.cols();
  Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = y;
  const Eigen::VectorXd sq = x.colwise().squaredNorm();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (sq(j) < 1e-24) continue;  // numerically zero column
      const double old = a(j);
      const double rho = x.col(j).dot(r) + sq(j) * old;
      a(j) = soft_threshold(rho, lambda) / sq(j);
      if (a(j) != old) {
        r -= x.col(j) * (a(j) - old);
        delta = std::max(delta, std::abs(a(j) - old) * std::sqrt(sq(j)));
      }
    }
    if (delta < tol) break;
  }
  return a;
}

/// Largest KKT violation of a Lasso solution, relative to max(1, lambda).
inline double lasso_kkt_violation(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& a, double lambda) {
  const Eigen::VectorXd g = x.transpose() * (y - x * a);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double v = a(j) != 0.0 ? std::abs(g(j) - lambda * (a(j) > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(g(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst / std::max(1.0, lambda);
}

// ---- joint penalized problem ---------------------------------------------

struct JointSolution {
  Eigen::VectorXd alpha;
  double beta = 0.0;
  double objective = 0.0;
  bool found = false;
};

/// Direct minimization over (alpha, beta) of
///   1/2 ||P_Z (y - Z alpha - d beta)||^2 + lambda ||alpha||_1
/// by enumerating every sign pattern of alpha: for each pattern the
/// stationarity equations are linear; a pattern is kept when the solution
/// has the assumed signs and the inactive subgradient bounds hold. Exact for
/// small L (3^L patterns).
inline JointSolution joint_minimize(const Eigen::MatrixXd& z, const Eigen::VectorXd& d,
                                    const Eigen::VectorXd& y, double lambda) {
  const Eigen::Index l = z.cols();
  const Eigen::MatrixXd p = projection_matrix(z);
  const Eigen::VectorXd py = p * y;
  const Eigen::VectorXd pd = p * d;
  auto objective = [&](const Eigen::VectorXd& alpha, double beta) {
    return 0.5 * (py - z * alpha - pd * beta).squaredNorm() + lambda * alpha.lpNorm<1>();
  };
  JointSolution best;
  std::vector<int> sign(static_cast<std::size_t>(l), -1);
  const double kkt_slack = 1e-9 * std::max(1.0, lambda);
  while (true) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index j = 0; j < l; ++j) {
      if (sign[static_cast<std::size_t>(j)] != 0) act.push_back(j);
    }
    const auto k = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd a(z.rows(), k + 1);
    Eigen::VectorXd penalty = Eigen::VectorXd::Zero(k + 1);
    for (Eigen::Index i = 0; i < k; ++i) {
      a.col(i) = z.col(act[static_cast<std::size_t>(i)]);
      penalty(i) = lambda * sign[static_cast<std::size_t>(act[static_cast<std::size_t>(i)])];
    }
    a.col(k) = pd;
    const Eigen::MatrixXd gram = a.transpose() * a;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (lu.rank() == k + 1) {
      const Eigen::VectorXd coef = lu.solve(a.transpose() * py - penalty);
      bool ok = true;
      Eigen::VectorXd alpha = Eigen::VectorXd::Zero(l);
      for (Eigen::Index i = 0; i < k && ok; ++i) {
        const Eigen::Index j = act[static_cast<std::size_t>(i)];
        alpha(j) = coef(i);
        ok = coef(i) * sign[static_cast<std::size_t>(j)] > 0.0;
      }
      const double beta = coef(k);
      if (ok) {
        const Eigen::VectorXd g = z.transpose() * (py - z * alpha - pd * beta);
        for (Eigen::Index j = 0; j < l && ok; ++j) {
          if (alpha(j) == 0.0) ok = std::abs(g(j)) <= lambda + kkt_slack;
        }
      }
      if (ok) {
        const double obj = objective(alpha, beta);
        if (!best.found || obj < best.objective) best = {alpha, beta, obj, true};
      }
    }
    std::size_t i = 0;
    while (i < sign.size() && sign[i] == 1) sign[i++] = -1;
    if (i == sign.size()) break;
    ++sign[i];
  }
  return best;
}

// ---- IV baselines ---------------------------------------------------------

/// Classical two-pass TSLS: regress d on [w, z_valid], then y on [w, d_fitted];
/// returns the coefficient on d_fitted.
inline double two_pass_tsls(const Eigen::MatrixXd& w, const Eigen::MatrixXd& z_valid,
                            const Eigen::VectorXd& d, const Eigen::VectorXd& y) {
  const Eigen::Index n = d.size();
  Eigen::MatrixXd first(n, w.cols() + z_valid.cols());
  first << w, z_valid;
  const Eigen::VectorXd d_fit = first * (first.transpose() * first).ldlt().solve(first.transpose() * d);
  Eigen::MatrixXd second(n, w.cols() + 1);
  second << w, d_fit;
  const Eigen::VectorXd coef = (second.transpose() * second).ldlt().solve(second.transpose() * y);
  return coef(w.cols());
}

/// OLS coefficients of y on x from the normal equations.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.transpose() * x).inverse() * (x.transpose() * y);
}

// ---- identification -------------------------------------------------------

/// Every size-k subset of {0..l-1} whose ratios Gamma_j / gamma_j all lie
/// within `tol` of each other, with the set's mean ratio.
struct SubsetHit {
  std::vector<Eigen::Index> members;
  double ratio = 0.0;
};

inline std::vector<SubsetHit> consistent_subsets(const Eigen::VectorXd& gamma,
                                                 const Eigen::VectorXd& big_gamma, Eigen::Index k,
                                                 double tol) {
  const Eigen::Index l = gamma.size();
  std::vector<SubsetHit> hits;
  for (std::uint32_t mask = 0; mask < (1u << l); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    SubsetHit h;
    double lo = 1e300, hi = -1e300, sum = 0.0;
    for (Eigen::Index j = 0; j < l; ++j) {
      if (!(mask & (1u << j))) continue;
      h.members.push_back(j);
      const double r = big_gamma(j) / gamma(j);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      sum += r;
    }
    if (hi - lo <= tol) {
      h.ratio = sum / static_cast<double>(k);
      hits.push_back(std::move(h));
    }
  }
  return hits;
}

}  // namespace sisvive::testing
