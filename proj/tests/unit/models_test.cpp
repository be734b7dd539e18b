/*
 * Copyright 2026 The bdmtl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "bdmtl/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "bdmtl/error.hpp"
#include "bdmtl/oracle.hpp"
#include "bdmtl/rng.hpp"

namespace bdmtl {
namespace {

Sample localization_sample(double ux, double uy, double d) {
  return Sample{Eigen::Vector2d(ux, uy), d};
}

ModelParams vec(std::initializer_list<double> v) {
  ModelParams out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(LocalizationLossTest, FarFromTarget) {
  const LocalizationLoss model(Eigen::Vector2d::Zero());
  const Sample s = localization_sample(1, 0, 5);
  EXPECT_DOUBLE_EQ(model.loss(vec({0, 0}), s), 25.0);
  EXPECT_TRUE(model.gradient(vec({0, 0}), s).isApprox(vec({-10, 0})));
}

TEST(LocalizationLossTest, ZeroResidual) {
  const LocalizationLoss model(Eigen::Vector2d::Zero());
  const Sample s = localization_sample(1, 0, 5);
  EXPECT_DOUBLE_EQ(model.loss(vec({5, 0}), s), 0.0);
  EXPECT_EQ(model.gradient(vec({5, 0}), s), vec({0, 0}));
}

// Residual 2 - (0.6 + 0.8) = 0.6.
TEST(LocalizationLossTest, ObliqueDirection) {
  const LocalizationLoss model(Eigen::Vector2d::Zero());
  const Sample s = localization_sample(0.6, 0.8, 2);
  EXPECT_NEAR(model.loss(vec({1, 1}), s), 0.36, 1e-12);
  const ModelParams g = model.gradient(vec({1, 1}), s);
  EXPECT_NEAR(g[0], -0.72, 1e-12);
  EXPECT_NEAR(g[1], -0.96, 1e-12);
  const ModelParams fd = finite_diff_gradient(model, vec({1, 1}), s, 1e-5);
  EXPECT_LT(max_relative_error(g, fd, 1e-8), 1e-5);
}

TEST(LocalizationLossTest, ShapeMismatchRejected) {
  const LocalizationLoss model(Eigen::Vector2d::Zero());
  EXPECT_THROW((void)model.loss(vec({1, 1, 1}), localization_sample(1, 0, 1)), ShapeError);
  Sample bad{vec({1, 0, 0}), 1.0};
  EXPECT_THROW((void)model.gradient(vec({1, 1}), bad), ShapeError);
}

TEST(SoftmaxLossTest, UniformPrediction) {
  const SoftmaxLoss model(2, 3);
  const ModelParams theta = ModelParams::Zero(8);
  const Sample s{vec({0.3, -2.0, 7.0}), 1};
  EXPECT_NEAR(model.loss(theta, s), std::log(2.0), 1e-15);
  const ModelParams fd = finite_diff_gradient(model, theta, s, 1e-5);
  EXPECT_LT((model.gradient(theta, s) - fd).cwiseAbs().maxCoeff(), 1e-6);
}

// -log(e^10 / (e^10 + 2)); logits set through the biases.
TEST(SoftmaxLossTest, ConfidentPrediction) {
  const SoftmaxLoss model(3, 1);
  ModelParams theta = ModelParams::Zero(6);
  theta[3] = 10.0;
  const Sample s{vec({0.0}), 0};
  const double expected = std::log1p(2.0 * std::exp(-10.0));
  EXPECT_NEAR(model.loss(theta, s), expected, 1e-18);
  EXPECT_NEAR(model.loss(theta, s), 9.08e-5, 5e-8);
}

TEST(SoftmaxLossTest, GradientAtZero) {
  const SoftmaxLoss model(2, 2);
  const ModelParams g = model.gradient(ModelParams::Zero(6), Sample{vec({1, 0}), 0});
  // Row-major weights: row 0 is (g[0], g[1]).
  EXPECT_DOUBLE_EQ(g[0], -0.5);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
  EXPECT_DOUBLE_EQ(g[2], 0.5);
  EXPECT_DOUBLE_EQ(g[3], 0.0);
}

TEST(SoftmaxLossTest, LargeLogitsStayFinite) {
  const SoftmaxLoss model(3, 1);
  ModelParams theta = ModelParams::Zero(6);
  theta[3] = 800.0;
  const Sample s{vec({0.0}), 1};
  EXPECT_NEAR(model.loss(theta, s), 800.0, 1e-9);
  EXPECT_TRUE(all_finite(model.gradient(theta, s)));
}

TEST(SoftmaxLossTest, InvalidLabelRejected) {
  const SoftmaxLoss model(3, 2);
  const ModelParams theta = ModelParams::Zero(9);
  EXPECT_THROW((void)model.loss(theta, Sample{vec({1, 1}), 3}), InvalidLabel);
  EXPECT_THROW((void)model.loss(theta, Sample{vec({1, 1}), -1}), InvalidLabel);
  EXPECT_THROW((void)model.loss(theta, Sample{vec({1, 1}), 0.5}), InvalidLabel);
}

TEST(SoftmaxLossTest, PredictsArgMax) {
  const SoftmaxLoss model(3, 1);
  ModelParams theta = ModelParams::Zero(6);
  theta[5] = 1.0;
  EXPECT_EQ(model.predict(theta, vec({0.0})), 2u);
}

TEST(QuadraticLossTest, NoiselessTarget) {
  const QuadraticLoss model(Eigen::MatrixXd::Identity(2, 2));
  const Sample s{vec({0, 0}), 0};
  EXPECT_DOUBLE_EQ(model.loss(vec({2, 0}), s), 2.0);
  EXPECT_EQ(model.gradient(vec({2, 0}), s), vec({2, 0}));
  const ModelParams fd = finite_diff_gradient(model, vec({2, 0}), s, 1e-5);
  EXPECT_LT((fd - vec({2, 0})).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(QuadraticLossTest, CurvatureConstants) {
  const QuadraticLoss model(Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix());
  EXPECT_DOUBLE_EQ(model.strong_convexity(), 1.0);
  EXPECT_DOUBLE_EQ(model.smoothness(), 4.0);
}

TEST(QuadraticLossTest, NonPositiveDefiniteRejected) {
  EXPECT_THROW(QuadraticLoss(Eigen::Vector2d(1, 0).asDiagonal().toDenseMatrix()), InvalidSpec);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(QuadraticLoss{asym}, InvalidSpec);
  EXPECT_THROW(QuadraticLoss(Eigen::MatrixXd(2, 3)), InvalidSpec);
}

// E|g|^2 at theta* equals sigma2, within three standard errors.
TEST(QuadraticLossTest, GradientNoiseVarianceMatches) {
  Eigen::MatrixXd h(2, 2);
  h << 2.0, 0.5, 0.5, 1.0;
  const QuadraticLoss model(h);
  const ModelParams star = vec({1.0, -2.0});
  constexpr double kSigma2 = 1.7;
  constexpr int kDraws = 100000;
  Rng rng(3);
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double g2 = model.gradient(star, model.draw_sample(star, kSigma2, rng)).squaredNorm();
    sum += g2;
    sq += g2 * g2;
  }
  const double mean = sum / kDraws;
  const double se = std::sqrt((sq / kDraws - mean * mean) / kDraws);
  EXPECT_NEAR(mean, kSigma2, 3.0 * se);
}

// The expected loss matches the closed-form risk.
TEST(QuadraticLossTest, RiskMatchesMonteCarlo) {
  const QuadraticLoss model(Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix());
  const ModelParams star = vec({0.5, 0.5});
  const ModelParams theta = vec({1.5, -0.5});
  constexpr double kSigma2 = 1.0;
  constexpr int kDraws = 100000;
  Rng rng(5);
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double l = model.loss(theta, model.draw_sample(star, kSigma2, rng));
    sum += l;
    sq += l * l;
  }
  const double mean = sum / kDraws;
  const double se = std::sqrt((sq / kDraws - mean * mean) / kDraws);
  EXPECT_NEAR(mean, model.risk(theta, star, kSigma2), 3.0 * se);
  EXPECT_DOUBLE_EQ(model.excess_risk(theta, star), 0.5 * (1.0 + 4.0));
}

TEST(BatchTest, MeansPerSampleValues) {
  const QuadraticLoss model(Eigen::MatrixXd::Identity(1, 1));
  const std::vector<Sample> batch{{vec({0}), 0}, {vec({2}), 0}};
  EXPECT_DOUBLE_EQ(batch_loss(model, vec({0}), batch), 1.0);  // (0 + 2) / 2
  EXPECT_DOUBLE_EQ(batch_gradient(model, vec({0}), batch)[0], -1.0);
  EXPECT_THROW((void)batch_loss(model, vec({0}), {}), ShapeError);
}

TEST(FiniteDiffTest, StepMustBePositive) {
  const QuadraticLoss model(Eigen::MatrixXd::Identity(1, 1));
  EXPECT_THROW((void)finite_diff_gradient(model, vec({0}), Sample{vec({0}), 0}, 0.0),
               InvalidSpec);
}

TEST(AllFiniteTest, DetectsNanAndInf) {
  EXPECT_TRUE(all_finite(vec({1, 2})));
  EXPECT_FALSE(all_finite(vec({1, std::numeric_limits<double>::quiet_NaN()})));
  EXPECT_FALSE(all_finite(vec({std::numeric_limits<double>::infinity()})));
}

// Losses are non-negative on random inputs for every model.
TEST(LossPropertyTest, NonNegative) {
  Rng rng(21);
  const LocalizationLoss loc(Eigen::Vector2d(3, 4));
  const SoftmaxLoss soft(4, 3);
  const QuadraticLoss quad(Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix());
  for (int i = 0; i < 1000; ++i) {
    const ModelParams t2 = vec({rng.normal(0, 10), rng.normal(0, 10)});
    ASSERT_GE(loc.loss(t2, localization_sample(rng.normal(), rng.normal(), rng.uniform(0, 20))), 0.0);
    ModelParams ts(16);
    for (Eigen::Index j = 0; j < 16; ++j) ts[j] = rng.normal(0, 3);
    const Sample s{vec({rng.normal(), rng.normal(), rng.normal()}), static_cast<double>(rng.index(4))};
    ASSERT_GE(soft.loss(ts, s), 0.0);
    ASSERT_GE(quad.loss(t2, Sample{vec({rng.normal(), rng.normal()}), 0}), 0.0);
  }
}

}  // namespace
}  // namespace bdmtl
