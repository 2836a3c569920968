#include <gtest/gtest.h>

#include <random>

#include "dualmpc/errors.hpp"
#include "dualmpc/scenario.hpp"
#include "dualmpc/uncertainty.hpp"
#include "oracles.hpp"

using namespace dualmpc;
using Eigen::MatrixXd;

TEST(Uncertainty, QuantileMatchesBisection) {
  for (double p : {1e-4, 0.0228, 0.05, 0.3, 0.5, 0.9, 0.9772}) EXPECT_NEAR(inverse_normal_cdf(p), oracle::normal_quantile(p), 1e-7);
  for (double x : {-3.0, -0.5, 0.0, 1.2}) EXPECT_NEAR(normal_cdf(inverse_normal_cdf(normal_cdf(x))), normal_cdf(x), 1e-12);
}

TEST(Uncertainty, CantelliFactor) {
  for (double e : {0.01, 0.0228, 0.05, 0.2}) EXPECT_NEAR(cantelli_factor(e), std::sqrt((1.0 - e) / e), 1e-12);
}

TEST(Uncertainty, MomentFactorDominatesGaussian) {
  const MatrixXd S = MatrixXd::Identity(3, 3);
  for (double e = 0.005; e < 0.5; e += 0.01)
    for (auto alloc : {RiskAllocation::PerConstraint, RiskAllocation::JointBudget}) {
      const GammaFactors g2 = gamma_factors(UncertaintySpec::gaussian(S, e, alloc), 12, 2, 4);
      const GammaFactors g3 = gamma_factors(UncertaintySpec::moment(S, e, alloc), 12, 2, 4);
      EXPECT_GE(g3.ca, g2.ca);
      EXPECT_GE(g3.xu, g2.xu);
    }
}

TEST(Uncertainty, JointBudgetIsMoreConservative) {
  const MatrixXd S = MatrixXd::Identity(2, 2);
  const double per = gamma_factors(UncertaintySpec::gaussian(S, 0.05, RiskAllocation::PerConstraint), 12, 2, 4).ca;
  const double joint = gamma_factors(UncertaintySpec::gaussian(S, 0.05, RiskAllocation::JointBudget), 12, 2, 4).ca;
  EXPECT_GT(joint, per);
}

TEST(Uncertainty, RobustFactorIsGamma) {
  const GammaFactors g = gamma_factors(UncertaintySpec::robust(MatrixXd::Identity(2, 2), 2.0), 12, 2, 4);
  EXPECT_DOUBLE_EQ(g.ca, 2.0);
  EXPECT_DOUBLE_EQ(g.xu, 2.0);
}

TEST(Uncertainty, PsdSqrtSquaresBack) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd L(4, 4);
  for (int i = 0; i < 16; ++i) L(i) = g(rng);
  const MatrixXd S = L * L.transpose();
  const MatrixXd R = psd_sqrt(S);
  EXPECT_LT((R * R - S).norm(), 1e-10 * S.norm());
  EXPECT_LT((R - R.transpose()).norm(), 1e-12);
}

TEST(Uncertainty, StackingIsBlockDiagonal) {
  MatrixXd S(2, 2);
  S << 2.0, 0.5, 0.5, 1.0;
  const StackedUncertainty st = stack_uncertainty(UncertaintySpec::gaussian(S, 0.05, RiskAllocation::PerConstraint), 3);
  ASSERT_EQ(st.Sigma_stk.rows(), 6);
  EXPECT_EQ(st.Sigma_stk.block(2, 2, 2, 2), S);
  EXPECT_EQ(st.Sigma_stk.block(0, 2, 2, 2), MatrixXd::Zero(2, 2));
}

TEST(Uncertainty, RejectsBadSpecs) {
  EXPECT_THROW(UncertaintySpec::gaussian(MatrixXd::Identity(2, 2), 0.0, RiskAllocation::PerConstraint).validate(),
               ValidationError);
  EXPECT_THROW(UncertaintySpec::moment(MatrixXd::Identity(2, 2), 1.0, RiskAllocation::PerConstraint).validate(),
               ValidationError);
  EXPECT_THROW(UncertaintySpec::robust(MatrixXd::Zero(2, 2), 1.0).validate(), ValidationError);
  EXPECT_THROW(UncertaintySpec::robust(MatrixXd::Identity(2, 2), 0.0).validate(), ValidationError);
  EXPECT_THROW(parse_allocation("both"), ValidationError);
}

TEST(Uncertainty, TruncatedNormalVarianceAndSupport) {
  const TruncNormSpec t{0.0, 0.3, -2.0, 2.0};
  EXPECT_NEAR(t.variance(), oracle::truncated_variance(0.3, 2.0), 1e-12);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double v = sample_truncnorm(t, rng);
    EXPECT_GE(v, t.lower());
    EXPECT_LE(v, t.upper());
  }
}
