#include "sisvive/lasso_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "sisvive/error.hpp"

namespace sisvive {

namespace {

// Relative Schur-complement floor for admitting a column into the active set.
constexpr double kDependenceTol = 1e-10;
// Denominators of the entry step below this are treated as "never enters".
constexpr double kStepDenomTol = 1e-12;

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

LassoProblem build_problem(const Eigen::MatrixXd& z, const Eigen::VectorXd& dhat,
                           const Eigen::VectorXd& pz_y) {
  if (dhat.size() != z.rows() || pz_y.size() != z.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "build_problem: row counts differ");
  }
  const Projector pd = Projector::onto_vector(dhat);
  return LassoProblem{pd.apply_complement(z), pd.apply_complement(pz_y)};
}

LassoProblem build_problem(const Dataset& ds) {
  if (!ds.preprocessed()) throw Error(ErrorCode::kInvalidArgument, "dataset must be preprocessed");
  const Projector pz(ds.z());
  const Eigen::VectorXd dhat = fitted_exposure(pz, ds.d());
  return build_problem(ds.z(), dhat, pz.apply(ds.y()));
}

double lambda_max(const LassoProblem& problem) {
  const PathOptions defaults;
  double best = 0.0;
  for (Eigen::Index j = 0; j < problem.design.cols(); ++j) {
    if (problem.design.col(j).norm() < defaults.zero_column_tol) continue;
    best = std::max(best, std::abs(problem.design.col(j).dot(problem.response)));
  }
  return best;
}

LassoPath fit_path(const LassoProblem& problem, const PathOptions& options) {
  const Eigen::MatrixXd& x = problem.design;
  const Eigen::Index l = x.cols();
  if (problem.response.size() != x.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "fit_path: response length differs from design rows");
  }
  const std::size_t max_knots =
      options.max_knots > 0 ? options.max_knots : 10 * static_cast<std::size_t>(std::max<Eigen::Index>(l, 1));

  const Eigen::MatrixXd gram = x.transpose() * x;
  const Eigen::VectorXd c0 = x.transpose() * problem.response;

  std::vector<char> usable(static_cast<std::size_t>(l));
  std::vector<char> excluded(static_cast<std::size_t>(l), 0);
  std::vector<char> is_active(static_cast<std::size_t>(l), 0);
  double lambda = 0.0;
  for (Eigen::Index j = 0; j < l; ++j) {
    usable[j] = std::sqrt(gram(j, j)) >= options.zero_column_tol;
    if (usable[j]) lambda = std::max(lambda, std::abs(c0(j)));
  }
  const double lmax = lambda;

  LassoPath path;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(l);
  std::vector<Eigen::Index> active;
  path.knots.push_back(lambda);
  path.coefs.push_back(alpha);
  path.active_sets.push_back(active);
  if (lambda <= 0.0) return path;

  // Adds j unless it is (numerically) a combination of the active columns.
  auto try_enter = [&](Eigen::Index j) {
    if (!active.empty()) {
      const auto k = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd g_aa(k, k);
      Eigen::VectorXd g_aj(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        g_aj(a) = gram(active[a], j);
        for (Eigen::Index b = 0; b < k; ++b) g_aa(a, b) = gram(active[a], active[b]);
      }
      const double schur = gram(j, j) - g_aj.dot(g_aa.llt().solve(g_aj));
      if (schur <= kDependenceTol * gram(j, j)) {
        excluded[j] = 1;
        return;
      }
    }
    active.push_back(j);
    is_active[j] = 1;
  };

  // Columns tied at the start enter in index order.
  const double tie = lmax * (1.0 - 1e-12);
  for (Eigen::Index j = 0; j < l; ++j) {
    if (usable[j] && std::abs(c0(j)) >= tie) try_enter(j);
  }
  path.active_sets.back() = active;

  Eigen::Index just_dropped = -1;
  std::size_t events = 0;
  while (lambda > 0.0) {
    if (++events > max_knots) {
      throw Error(ErrorCode::kPathLimitExceeded,
                  "Lasso path exceeded " + std::to_string(max_knots) +
                      " knots; the homotopy appears to be cycling");
    }
    const Eigen::VectorXd corr = c0 - gram * alpha;
    const auto k = static_cast<Eigen::Index>(active.size());

    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(l);
    if (k > 0) {
      Eigen::MatrixXd g_aa(k, k);
      Eigen::VectorXd signs(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::Index ai = active[i];
        signs(i) = alpha(ai) != 0.0 ? sign_of(alpha(ai)) : sign_of(corr(ai));
        for (Eigen::Index b = 0; b < k; ++b) g_aa(i, b) = gram(ai, active[b]);
      }
      w = g_aa.llt().solve(signs);
      for (Eigen::Index i = 0; i < k; ++i) a += gram.col(active[i]) * w(i);
    }

    // Step length in lambda units until the next event.
    enum class Event { kEnd, kEnter, kDrop } event = Event::kEnd;
    double step = lambda;
    Eigen::Index who = -1;
    for (Eigen::Index j = 0; j < l; ++j) {
      if (is_active[j] || !usable[j] || excluded[j] || j == just_dropped) continue;
      for (const double s : {1.0, -1.0}) {
        const double denom = 1.0 - s * a(j);
        if (denom <= kStepDenomTol) continue;
        const double t = std::max(0.0, (lambda - s * corr(j)) / denom);
        if (t < step) {
          step = t;
          event = Event::kEnter;
          who = j;
        }
      }
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index ai = active[i];
      if (alpha(ai) == 0.0 || w(i) == 0.0) continue;
      const double t = -alpha(ai) / w(i);
      if (t > 0.0 && t < step) {
        step = t;
        event = Event::kDrop;
        who = ai;
      }
    }

    for (Eigen::Index i = 0; i < k; ++i) alpha(active[i]) += step * w(i);
    lambda = event == Event::kEnd ? 0.0 : lambda - step;
    if (lambda <= 1e-14 * lmax) lambda = 0.0;

    just_dropped = -1;
    if (event == Event::kDrop) {
      alpha(who) = 0.0;
      active.erase(std::find(active.begin(), active.end(), who));
      is_active[who] = 0;
      just_dropped = who;
    } else if (event == Event::kEnter) {
      try_enter(who);
    }

    if (lambda < path.knots.back()) {
      path.knots.push_back(lambda);
      path.coefs.push_back(alpha);
      path.active_sets.push_back(active);
    } else {
      // Zero-length step: same knot, updated support.
      path.coefs.back() = alpha;
      path.active_sets.back() = active;
    }
  }
  return path;
}

Eigen::VectorXd solve_at(const LassoPath& path, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be nonnegative");
  if (path.knots.empty()) throw Error(ErrorCode::kInvalidArgument, "empty Lasso path");
  const Eigen::Index l = path.num_coefs();
  if (lambda >= path.knots.front()) return Eigen::VectorXd::Zero(l);
  if (lambda <= path.knots.back()) return path.coefs.back();

  // First knot strictly below lambda; knots are decreasing.
  const auto it = std::upper_bound(path.knots.begin(), path.knots.end(), lambda,
                                   [](double v, double knot) { return v > knot; });
  const auto hi = static_cast<std::size_t>(it - path.knots.begin());
  const std::size_t lo = hi - 1;  // knots[lo] >= lambda > knots[hi]
  if (path.knots[lo] == lambda) return path.coefs[lo];
  const double theta = (lambda - path.knots[hi]) / (path.knots[lo] - path.knots[hi]);
  return theta * path.coefs[lo] + (1.0 - theta) * path.coefs[hi];
}

}  // namespace sisvive
