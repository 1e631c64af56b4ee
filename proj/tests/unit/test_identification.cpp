#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "oracles.hpp"
#include "sisvive/dataset.hpp"
#include "sisvive/identification.hpp"

namespace sisvive {
namespace {

namespace t = sisvive::testing;
using t::code_of;
using Set = std::vector<Eigen::Index>;

std::vector<Set> member_lists(const IdentificationReport& r) {
  std::vector<Set> out;
  for (const auto& s : r.sets) out.push_back(s.members);
  return out;
}

ReducedForm vectors(std::initializer_list<double> g, std::initializer_list<double> bg) {
  Eigen::VectorXd gamma(static_cast<Eigen::Index>(g.size())), big(static_cast<Eigen::Index>(bg.size()));
  Eigen::Index i = 0;
  for (double v : g) gamma(i++) = v;
  i = 0;
  for (double v : bg) big(i++) = v;
  return given_reduced_form(gamma, big);
}

TEST(Identification, ThreeValidOfFour) {
  const auto r = check_consistency_criterion(vectors({1, 2, 3, 4}, {1, 2, 3, 8}), 3);
  EXPECT_TRUE(r.identified);
  EXPECT_EQ(r.set_size, 2);
  EXPECT_EQ(r.beta_candidates, std::vector<double>{1.0});
  EXPECT_EQ(member_lists(r), (std::vector<Set>{{0, 1}, {0, 2}, {1, 2}}));
}

TEST(Identification, TwoCompetingPairs) {
  const auto r = check_consistency_criterion(vectors({1, 2, 3, 4}, {1, 2, 6, 8}), 3);
  EXPECT_FALSE(r.identified);
  ASSERT_EQ(r.beta_candidates.size(), 2u);
  EXPECT_NEAR(r.beta_candidates[0], 1.0, 1e-12);
  EXPECT_NEAR(r.beta_candidates[1], 2.0, 1e-12);
  EXPECT_NEAR(r.boundary_distance, 1.0, 1e-12);
}

TEST(Identification, SingleConsistentPair) {
  const auto r = check_consistency_criterion(vectors({1, 2, 3, 4}, {1, 2, 7, 9}), 3);
  EXPECT_TRUE(r.identified);
  EXPECT_EQ(r.beta_candidates, std::vector<double>{1.0});
  EXPECT_EQ(member_lists(r), (std::vector<Set>{{0, 1}}));
}

TEST(Identification, HalfRuleAlwaysIdentifies) {
  for (const auto& rf : {vectors({1, 2, 3, 4}, {1, 2, 6, 8}), vectors({1, 2, 3, 4}, {5, -1, 7, 0.3})}) {
    EXPECT_TRUE(check_consistency_criterion(rf, 2).identified);
  }
}

TEST(Identification, Errors) {
  EXPECT_EQ(code_of([] { check_consistency_criterion(vectors({1, 0, 3}, {1, 2, 3}), 1); }),
            ErrorCode::kIrrelevantInstrument);
  EXPECT_EQ(code_of([] { check_consistency_criterion(vectors({1, 2}, {1, 2}), 0); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { check_consistency_criterion(vectors({1, 2}, {1, 2}), 3); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { given_reduced_form(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(2)); }),
            ErrorCode::kDimensionMismatch);
}

TEST(BetaGivenValidSet, Examples) {
  const auto rf = vectors({1, 2, 3, 4}, {1, 2, 3, 8});
  EXPECT_NEAR(beta_given_valid_set(rf, {0, 1, 2}), 1.0, 1e-14);
  EXPECT_NEAR(beta_given_valid_set(rf, {3}), 2.0, 1e-14);
  EXPECT_EQ(code_of([&] { beta_given_valid_set(rf, {0, 3}); }), ErrorCode::kInconsistentValidSet);
  EXPECT_EQ(code_of([&] { beta_given_valid_set(rf, {}); }), ErrorCode::kInvalidArgument);
}

TEST(ReducedForm, ExactModelIsRecovered) {
  t::Rng rng(50);
  const Eigen::MatrixXd z = t::standardize(t::gaussian(rng, 60, 4));
  const Eigen::Vector4d g0(1, -0.5, 2, 0.7), a0(0, 0, 1.5, 0);
  const Eigen::VectorXd d = z * g0;
  const Eigen::VectorXd y = z * a0 + d * 0.8;
  const auto rf = reduced_form(Dataset::from_preprocessed(y, d, z));
  EXPECT_EQ(rf.source, ReducedForm::Source::kEstimated);
  EXPECT_LT((rf.gamma - g0).norm(), 1e-10);
  EXPECT_LT((rf.big_gamma - (a0 + g0 * 0.8)).norm(), 1e-8);
}

TEST(ReducedForm, ConsistentAtLargeN) {
  t::Rng rng(51);
  const Eigen::Index n = 100000;
  const Eigen::MatrixXd z = t::gaussian(rng, n, 3);
  const Eigen::Vector3d g0(0.3, -0.2, 0.1);
  const Eigen::VectorXd d = z * g0 + t::gaussian_vector(rng, n);
  const auto [ds, rec] = preprocess(Dataset(t::gaussian_vector(rng, n), d, z));
  const auto rf = reduced_form(ds);
  // coefficients on the unit-norm scale map back through the column norms
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double raw = rf.gamma(j) / rec.z_norms(j);
    const double se = 1.0 / std::sqrt(static_cast<double>(n));
    EXPECT_LT(std::abs(raw - g0(j)), 3 * se) << j;
  }
}

// Property: the clustering report agrees with brute-force subset
// enumeration, including when ratios are deliberately tied.
TEST(IdentificationProperty, MatchesBruteForce) {
  t::Rng rng(52);
  for (int trial = 0; trial < 2000; ++trial) {
    const Eigen::Index l = t::uniform_int(rng, 1, 8);
    Eigen::VectorXd gamma(l), big(l);
    const Eigen::Index levels = t::uniform_int(rng, 1, 4);
    for (Eigen::Index j = 0; j < l; ++j) {
      gamma(j) = t::uniform_real(rng, 0.2, 3.0) * (t::uniform_int(rng, 0, 1) ? 1 : -1);
      big(j) = gamma(j) * static_cast<double>(t::uniform_int(rng, 1, levels));
    }
    const Eigen::Index u = t::uniform_int(rng, 1, l);
    const auto r = check_consistency_criterion(given_reduced_form(gamma, big), u);
    const auto hits = t::consistent_subsets(gamma, big, l - u + 1, kDefaultIdentificationTol);
    std::vector<Set> expected;
    std::set<long long> distinct;
    for (const auto& h : hits) {
      expected.push_back(h.members);
      distinct.insert(std::llround(h.ratio * 1e6));
    }
    auto got = member_lists(r);
    std::sort(got.begin(), got.end());
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(got, expected);
    EXPECT_EQ(r.beta_candidates.size(), distinct.size());
    EXPECT_EQ(r.identified, distinct.size() <= 1);
    EXPECT_EQ(r.premise_holds, !hits.empty());
    for (const auto& s : r.sets) {
      for (const Eigen::Index j : s.members) {
        EXPECT_LE(std::abs(gamma(j) * s.q - big(j)), kDefaultIdentificationTol * (1 + std::abs(big(j))));
      }
    }
  }
}

// Property: at most half invalid always identifies.
TEST(IdentificationProperty, HalfRule) {
  t::Rng rng(53);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index l = t::uniform_int(rng, 2, 12);
    Eigen::VectorXd gamma(l), big(l);
    for (Eigen::Index j = 0; j < l; ++j) {
      gamma(j) = t::uniform_real(rng, 0.1, 2.0);
      big(j) = static_cast<double>(t::uniform_int(rng, -2, 2));
    }
    big = big.cwiseProduct(gamma);  // many exact ties across ratios
    EXPECT_TRUE(check_consistency_criterion(given_reduced_form(gamma, big), l / 2).identified);
  }
}

// Property: scaling gamma and Gamma together leaves the report unchanged.
TEST(IdentificationProperty, JointRescaleInvariance) {
  t::Rng rng(54);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index l = t::uniform_int(rng, 2, 8);
    Eigen::VectorXd gamma(l), big(l);
    for (Eigen::Index j = 0; j < l; ++j) {
      gamma(j) = t::uniform_real(rng, 0.5, 2.0);
      big(j) = gamma(j) * static_cast<double>(t::uniform_int(rng, 1, 3));
    }
    const double c = t::uniform_real(rng, 0.5, 4.0);
    const Eigen::Index u = t::uniform_int(rng, 1, l);
    const auto a = check_consistency_criterion(given_reduced_form(gamma, big), u);
    const auto b = check_consistency_criterion(given_reduced_form(gamma * c, big * c), u);
    EXPECT_EQ(member_lists(a), member_lists(b));
    EXPECT_EQ(a.identified, b.identified);
    ASSERT_EQ(a.beta_candidates.size(), b.beta_candidates.size());
    for (std::size_t i = 0; i < a.beta_candidates.size(); ++i) {
      EXPECT_NEAR(a.beta_candidates[i], b.beta_candidates[i], 1e-12);
    }
  }
}

}  // namespace
}  // namespace sisvive
