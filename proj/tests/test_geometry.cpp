#include <cmath>

#include <gtest/gtest.h>

#include "clreg/error.hpp"
#include "clreg/geometry.hpp"

using namespace clreg;

TEST(Pool, IgnoresMaskedTokens) {
  Eigen::MatrixXd v(3, 2);
  v << 1, 2, 100, -100, 3, 4;
  const HiddenStates h(v, Eigen::Vector3d(1, 0, 1));
  const Eigen::VectorXd p = pool(h);
  EXPECT_DOUBLE_EQ(p[0], 2.0);
  EXPECT_DOUBLE_EQ(p[1], 3.0);
}

TEST(HiddenStates, RejectsBadMasks) {
  const Eigen::MatrixXd v = Eigen::MatrixXd::Ones(2, 3);
  EXPECT_THROW(HiddenStates(v, Eigen::Vector2d(0, 0)), ValidationError);
  EXPECT_THROW(HiddenStates(v, Eigen::Vector2d(1, 0.5)), ValidationError);
  EXPECT_THROW(HiddenStates(v, Eigen::Vector3d(1, 1, 1)), ValidationError);
  Eigen::MatrixXd bad = v;
  bad(0, 0) = NAN;
  EXPECT_THROW(HiddenStates(bad, Eigen::Vector2d(1, 1)), ValidationError);
}

TEST(Normalize, ProducesUnitVector) {
  const UnitEmbedding u = normalize(Eigen::Vector3d(3, 0, 4));
  EXPECT_NEAR(u.coords().norm(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(u.coords()[0], 0.6);
}

TEST(Normalize, ZeroVectorIsDegenerate) {
  EXPECT_THROW(normalize(Eigen::Vector3d::Zero()), DegenerateInputError);
}

TEST(UnitEmbedding, FromUnitChecksNorm) {
  EXPECT_NO_THROW(UnitEmbedding::from_unit(Eigen::Vector2d(1, 0)));
  EXPECT_THROW(UnitEmbedding::from_unit(Eigen::Vector2d(1, 1)), ValidationError);
}

TEST(Cosine, ClampedAndDimensionChecked) {
  const auto a = normalize(Eigen::Vector2d(1, 1));
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-15);
  EXPECT_LE(cosine(a, a), 1.0);
  EXPECT_NEAR(cosine(a, normalize(Eigen::Vector2d(-1, -1))), -1.0, 1e-15);
  EXPECT_THROW(cosine(a, normalize(Eigen::Vector3d(1, 0, 0))), ValidationError);
}

TEST(Dropout, ZeroRateIsIdentity) {
  Rng rng(1);
  const HiddenStates h(Eigen::MatrixXd::Random(4, 5), Eigen::VectorXd::Ones(4));
  EXPECT_EQ(apply_dropout(h, 0.0, rng).values(), h.values());
}

TEST(Dropout, InvertedScalingPreservesMean) {
  Rng rng(2);
  const HiddenStates h(Eigen::MatrixXd::Ones(1, 200000), Eigen::VectorXd::Ones(1));
  const DropoutResult r = apply_dropout_traced(h, 0.3, rng);
  EXPECT_NEAR(r.states.values().mean(), 1.0, 0.01);
  for (Eigen::Index j = 0; j < 50; ++j) {
    const double m = r.multiplier(0, j);
    EXPECT_TRUE(m == 0.0 || std::abs(m - 1.0 / 0.7) < 1e-15);
  }
}

TEST(Dropout, RejectsRateOutsideRange) {
  Rng rng(3);
  const HiddenStates h(Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Ones(1));
  EXPECT_THROW(apply_dropout(h, 1.0, rng), ValidationError);
  EXPECT_THROW(apply_dropout(h, -0.1, rng), ValidationError);
}

TEST(DropoutPolicy, SampledRateIsClamped) {
  DropoutPolicy p{0.1, 1.0, 0.0, 0.2};
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double r = sample_dropout_rate(p, rng);
    ASSERT_GE(r, 0.0);
    ASSERT_LE(r, 0.2);
  }
  EXPECT_THROW((DropoutPolicy{0.1, 0.05, 0.3, 0.2}.validate()), ValidationError);
  EXPECT_THROW((DropoutPolicy{0.1, -1.0, 0.0, 0.2}.validate()), ValidationError);
}

TEST(Embed, WithoutPolicyIsCleanNormalizedPool) {
  Rng rng(5);
  const HiddenStates h(Eigen::MatrixXd::Random(3, 4), Eigen::VectorXd::Ones(3));
  const auto e = embed(h, std::nullopt, rng);
  EXPECT_TRUE(e.coords().isApprox(pool(h).normalized(), 1e-15));
}

TEST(Embed, SameSeedSameView) {
  const HiddenStates h(Eigen::MatrixXd::Random(3, 8), Eigen::VectorXd::Ones(3));
  Rng a(6), b(6);
  EXPECT_EQ(embed(h, DropoutPolicy{}, a).coords(), embed(h, DropoutPolicy{}, b).coords());
}
