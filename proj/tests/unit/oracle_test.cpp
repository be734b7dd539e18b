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

#include "bdmtl/oracle.hpp"

#include <gtest/gtest.h>

#include <vector>

#include "bdmtl/error.hpp"

namespace bdmtl {
namespace {

void expect_weights(const std::vector<double>& risks, const std::vector<double>& expected) {
  const QpSolution s = solve_weight_qp_numeric(risks);
  ASSERT_EQ(s.weights.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(s.weights[i], expected[i], 1e-6);
  EXPECT_LT(s.residual, 1e-9);
}

TEST(QpOracleTest, Examples) {
  expect_weights({1, 3}, {0.75, 0.25});
  expect_weights({1, 1, 1, 1}, {0.25, 0.25, 0.25, 0.25});
  expect_weights({1, 2, 4}, {4.0 / 7, 2.0 / 7, 1.0 / 7});
}

TEST(QpOracleTest, RejectsNonPositiveRisk) {
  EXPECT_THROW((void)solve_weight_qp_numeric(std::vector<double>{1.0, 0.0}), InvalidSpec);
  EXPECT_THROW((void)solve_weight_qp_numeric(std::vector<double>{-1.0}), InvalidSpec);
}

TEST(SimplexProjectionTest, Cases) {
  const auto inside = project_to_simplex(std::vector<double>{0.2, 0.8});
  EXPECT_NEAR(inside[0], 0.2, 1e-15);
  const auto clipped = project_to_simplex(std::vector<double>{2.0, 0.0, -1.0});
  EXPECT_EQ(clipped, (std::vector<double>{1.0, 0.0, 0.0}));
  const auto shifted = project_to_simplex(std::vector<double>{1.0, 1.0});
  EXPECT_NEAR(shifted[0], 0.5, 1e-15);
}

TEST(RegretBoundTest, Formula) {
  EXPECT_NEAR(regret_bound({1.0, 2.0, 1.0, 1.0}, 0.1), 0.1, 1e-15);
  EXPECT_EQ(regret_bound({1.0, 2.0, 0.0, 1.0}, 0.1), 0.0);
  EXPECT_NEAR(regret_bound({1.0, 4.0, 1.0, 1.0}, 0.1), 0.2, 1e-15);
}

TEST(RegretBoundTest, StepSizeInterval) {
  const ConvexityProfile p{1.0, 4.0, 1.0, 1.0};
  EXPECT_NO_THROW((void)regret_bound(p, 0.25));
  try {
    (void)regret_bound(p, 0.26);
    FAIL() << "expected InvalidSpec";
  } catch (const InvalidSpec& e) {
    EXPECT_NE(std::string(e.what()).find("0.25"), std::string::npos) << e.what();
  }
  EXPECT_THROW((void)regret_bound(p, 0.0), InvalidSpec);
  EXPECT_THROW((void)regret_bound({1.0, 4.0, 1.0, 2.0}, 0.2), InvalidSpec);
}

TEST(RegretBoundTest, Monotonicity) {
  const ConvexityProfile base{1.0, 2.0, 1.0, 1.0};
  const double b = regret_bound(base, 0.1);
  EXPECT_GT(regret_bound(base, 0.2), b);
  EXPECT_GT(regret_bound({1.0, 3.0, 1.0, 1.0}, 0.1), b);
  EXPECT_GT(regret_bound({1.0, 2.0, 2.0, 1.0}, 0.1), b);
  EXPECT_LT(regret_bound({1.5, 2.0, 1.0, 1.0}, 0.1), b);
}

TEST(ProfileTest, Validation) {
  EXPECT_THROW(validate({0.0, 1.0, 0.0, 1.0}), InvalidSpec);
  EXPECT_THROW(validate({2.0, 1.0, 0.0, 1.0}), InvalidSpec);
  EXPECT_THROW(validate({1.0, 1.0, -1.0, 1.0}), InvalidSpec);
  EXPECT_THROW(validate({1.0, 1.0, 0.0, 0.5}), InvalidSpec);
  EXPECT_NO_THROW(validate({1.0, 1.0, 0.0, 1.0}));
}

TEST(WeightedRegretTest, Examples) {
  const auto a = check_lemma1(std::vector<double>{1, 3}, 0.0);
  EXPECT_TRUE(a.holds);
  EXPECT_NEAR(a.weighted_regret, 1.5, 1e-12);
  EXPECT_NEAR(a.average_regret, 2.0, 1e-12);
  const auto b = check_lemma1(std::vector<double>{2, 2}, 1.0);
  EXPECT_TRUE(b.holds);
  EXPECT_NEAR(b.weighted_regret, 1.0, 1e-12);
  EXPECT_NEAR(b.average_regret, 1.0, 1e-12);
}

TEST(WeightedRegretTest, Preconditions) {
  EXPECT_THROW((void)check_lemma1(std::vector<double>{1, 3}, 1.5), InvalidSpec);
  EXPECT_THROW((void)check_lemma1(std::vector<double>{1, 3}, -0.1), InvalidSpec);
  EXPECT_THROW((void)check_lemma1(std::vector<double>{0, 3}, 0.0), InvalidSpec);
}

double quadratic_risk(const Eigen::Vector2d& diag, const ModelParams& t) {
  return 0.5 * t.dot(diag.asDiagonal() * t);
}

TEST(ConvexityGapTest, Examples) {
  const ModelParams zero = ModelParams::Zero(2);
  const auto identity = [](const ModelParams& t) {
    return quadratic_risk(Eigen::Vector2d(1, 1), t);
  };
  EXPECT_TRUE(strong_convexity_gap_check({1, 1, 0, 1}, Eigen::Vector2d(2, 0), zero, identity));
  const auto skewed = [](const ModelParams& t) {
    return quadratic_risk(Eigen::Vector2d(1, 4), t);
  };
  EXPECT_TRUE(strong_convexity_gap_check({1, 4, 0, 1}, Eigen::Vector2d(0, 1), zero, skewed));
  // Claiming m = 4 for the skewed quadratic is wrong along the first axis.
  EXPECT_FALSE(strong_convexity_gap_check({4, 4, 0, 1}, Eigen::Vector2d(1, 0), zero, skewed));
}

TEST(OracleSuiteTest, AllSuitesPass) {
  EXPECT_TRUE(verify_qp_suite(1).ok());
  const auto lemma = verify_lemma1_suite(1);
  EXPECT_TRUE(lemma.ok());
  EXPECT_EQ(lemma.total, 10000u);
  for (const auto& r : verify_gradient_suites(1)) EXPECT_TRUE(r.ok()) << r.name << ": " << r.detail;
  EXPECT_TRUE(verify_convexity_suite(1).ok());
}

TEST(RelativeErrorTest, UsesFloor) {
  EXPECT_NEAR(max_relative_error(Eigen::Vector2d(1, 0), Eigen::Vector2d(1.1, 0)), 0.1 / 1.1, 1e-15);
  EXPECT_NEAR(max_relative_error(Eigen::Vector2d(0, 0), Eigen::Vector2d(1e-9, 0)), 1e-3, 1e-15);
}

}  // namespace
}  // namespace bdmtl
