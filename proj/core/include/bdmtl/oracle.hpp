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

#ifndef BDMTL_ORACLE_HPP_
#define BDMTL_ORACLE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bdmtl/models.hpp"

namespace bdmtl {

// Curvature and noise constants of one agent's risk: m-strongly convex,
// L-smooth, E|g|^2 <= sigma2 + c_k |grad r|^2.
struct ConvexityProfile {
  double m = 1.0;
  double L = 1.0;
  double sigma2 = 0.0;
  double c_k = 1.0;
};

// Throws InvalidSpec unless 0 < m <= L, sigma2 >= 0 and c_k >= 1.
void validate(const ConvexityProfile& profile);

struct QpSolution {
  std::vector<double> weights;
  std::size_t iterations = 0;
  // |x - P(x - grad f(x))|_inf at the returned point (KKT residual).
  double residual = 0.0;
};

// Minimizes sum_l a_l^2 r_l over the probability simplex by projected
// gradient descent with step 1 / (2 max r). Independent of the closed form
// used by the weighting rules. Throws InvalidSpec for non-positive risks.
QpSolution solve_weight_qp_numeric(std::span<const double> risks,
                                   std::size_t max_iterations = 100000,
                                   double tolerance = 1e-10);

// Euclidean projection onto {a : a >= 0, sum a = 1}.
std::vector<double> project_to_simplex(std::span<const double> v);

// mu L sigma2 / (2 m). Throws InvalidSpec naming the admissible interval
// (0, 1/(L c_k)] when mu lies outside it.
double regret_bound(const ConvexityProfile& profile, double mu);

struct Lemma1Check {
  bool holds = false;
  double weighted_regret = 0.0;  // sum_l a_l (r_l - r*)
  double average_regret = 0.0;   // (1/n) sum_l (r_l - r*)
};

// Compares the loss-weighted regret against the uniform average. Throws
// InvalidSpec unless every risk is positive and 0 <= r* <= min risk.
Lemma1Check check_lemma1(std::span<const double> risks, double r_star,
                         double slack = 1e-12);

// |theta_l - theta*|^2 <= (2/m)(r(theta_l) - r(theta*)).
bool strong_convexity_gap_check(
    const ConvexityProfile& profile, const ModelParams& theta_l,
    const ModelParams& theta_star,
    const std::function<double(const ModelParams&)>& risk_fn,
    double slack = 1e-12);

// Outcome of one batch of checks, as printed by `bdmtl verify`.
struct SuiteReport {
  std::string name;
  std::size_t passed = 0;
  std::size_t total = 0;
  std::string detail;
  bool ok() const { return total > 0 && passed == total; }
};

// Closed-form loss weights vs the QP oracle on random risk vectors
// (n in [2, 10], risks in [0.1, 10]), max-coordinate tolerance 1e-6.
SuiteReport verify_qp_suite(std::uint64_t seed, std::size_t cases = 100);
// Weighted-regret inequality on random instances.
SuiteReport verify_lemma1_suite(std::uint64_t seed, std::size_t cases = 10000);
// Analytic vs central-difference gradients (h = 1e-5, relative error
// < 1e-4) for the three loss models.
std::vector<SuiteReport> verify_gradient_suites(std::uint64_t seed,
                                                std::size_t points = 200);
// Strong-convexity distance bound on random SPD quadratics.
SuiteReport verify_convexity_suite(std::uint64_t seed,
                                   std::size_t points = 1000);

// Max over coordinates of |a - b| / max(|a|, |b|, floor).
double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          double floor = 1e-6);

}  // namespace bdmtl

#endif  // BDMTL_ORACLE_HPP_
