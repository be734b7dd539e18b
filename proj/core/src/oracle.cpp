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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <memory>
#include <sstream>
#include <tuple>

#include "bdmtl/error.hpp"
#include "bdmtl/rng.hpp"
#include "bdmtl/weighting.hpp"

namespace bdmtl {

void validate(const ConvexityProfile& p) {
  if (!(p.m > 0.0) || !(p.m <= p.L)) {
    throw InvalidSpec("convexity profile: need 0 < m <= L");
  }
  if (!(p.sigma2 >= 0.0)) throw InvalidSpec("convexity profile: sigma2 < 0");
  if (!(p.c_k >= 1.0)) throw InvalidSpec("convexity profile: c_k < 1");
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  // Sort-and-threshold projection.
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

QpSolution solve_weight_qp_numeric(std::span<const double> risks,
                                   std::size_t max_iterations,
                                   double tolerance) {
  if (risks.empty()) throw InvalidSpec("weight QP: no risks");
  for (double r : risks) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw InvalidSpec("weight QP: risks must be positive and finite");
    }
  }
  const std::size_t n = risks.size();
  const double step = 1.0 / (2.0 * *std::max_element(risks.begin(), risks.end()));

  QpSolution sol;
  sol.weights.assign(n, 1.0 / static_cast<double>(n));
  std::vector<double> trial(n);
  for (sol.iterations = 0; sol.iterations < max_iterations; ++sol.iterations) {
    for (std::size_t l = 0; l < n; ++l) {
      trial[l] = sol.weights[l] - step * 2.0 * sol.weights[l] * risks[l];
    }
    std::vector<double> next = project_to_simplex(trial);
    double change = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      change = std::max(change, std::abs(next[l] - sol.weights[l]));
    }
    sol.weights = std::move(next);
    if (change / step < tolerance) break;
  }
  // KKT residual with a unit step.
  for (std::size_t l = 0; l < n; ++l) {
    trial[l] = sol.weights[l] - 2.0 * sol.weights[l] * risks[l];
  }
  const std::vector<double> probe = project_to_simplex(trial);
  sol.residual = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    sol.residual = std::max(sol.residual, std::abs(probe[l] - sol.weights[l]));
  }
  return sol;
}

double regret_bound(const ConvexityProfile& profile, double mu) {
  validate(profile);
  const double upper = 1.0 / (profile.L * profile.c_k);
  if (!(mu > 0.0) || mu > upper) {
    std::ostringstream msg;
    msg << "step size " << mu << " outside the admissible interval (0, "
        << upper << "]";
    throw InvalidSpec(msg.str());
  }
  return mu * profile.L * profile.sigma2 / (2.0 * profile.m);
}

Lemma1Check check_lemma1(std::span<const double> risks, double r_star,
                         double slack) {
  if (risks.empty()) throw InvalidSpec("lemma1: no risks");
  const double min_risk = *std::min_element(risks.begin(), risks.end());
  if (!(min_risk > 0.0)) throw InvalidSpec("lemma1: risks must be positive");
  if (!(r_star >= 0.0) || r_star > min_risk) {
    throw InvalidSpec("lemma1: need 0 <= r* <= min risk");
  }
  const std::vector<double> a = inverse_risk_weights(risks);
  Lemma1Check out;
  for (std::size_t l = 0; l < risks.size(); ++l) {
    out.weighted_regret += a[l] * (risks[l] - r_star);
    out.average_regret += risks[l] - r_star;
  }
  out.average_regret /= static_cast<double>(risks.size());
  out.holds = out.weighted_regret <=
              out.average_regret + slack * (1.0 + std::abs(out.average_regret));
  return out;
}

bool strong_convexity_gap_check(
    const ConvexityProfile& profile, const ModelParams& theta_l,
    const ModelParams& theta_star,
    const std::function<double(const ModelParams&)>& risk_fn, double slack) {
  const double lhs = (theta_l - theta_star).squaredNorm();
  const double rhs = 2.0 / profile.m * (risk_fn(theta_l) - risk_fn(theta_star));
  return lhs <= rhs + slack * (1.0 + std::abs(rhs));
}

double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          double floor) {
  if (a.size() != b.size()) throw ShapeError("max_relative_error: size mismatch");
  const double scale = std::max({a.cwiseAbs().maxCoeff(),
                                 b.cwiseAbs().maxCoeff(), floor});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// ---- suites ----------------------------------------------------------------

namespace {

std::vector<double> random_risks(Rng& rng, std::size_t lo_n, std::size_t hi_n,
                                 double lo, double hi) {
  const std::size_t n = lo_n + rng.index(hi_n - lo_n + 1);
  std::vector<double> r(n);
  for (double& x : r) x = rng.uniform(lo, hi);
  return r;
}

Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index d) {
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return a.transpose() * a + 0.5 * Eigen::MatrixXd::Identity(d, d);
}

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index d, double scale) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal(0.0, scale);
  return v;
}

template <class MakeCase>
SuiteReport gradient_suite(std::string name, const MakeCase& make_case,
                           std::uint64_t seed, std::size_t points) {
  SuiteReport report{std::move(name), 0, points, {}};
  double worst = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    Rng rng = make_stream(seed, i, 0, StreamPurpose::kVerify);
    auto [model, theta, sample] = make_case(rng);
    const ModelParams analytic = model->gradient(theta, sample);
    const ModelParams numeric = finite_diff_gradient(*model, theta, sample, 1e-5);
    const double err = max_relative_error(analytic, numeric, 1e-8);
    worst = std::max(worst, err);
    if (err < 1e-4) ++report.passed;
  }
  std::ostringstream detail;
  detail << "worst relative error " << worst;
  report.detail = detail.str();
  return report;
}

}  // namespace

SuiteReport verify_qp_suite(std::uint64_t seed, std::size_t cases) {
  SuiteReport report{"qp", 0, cases, {}};
  double worst = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng = make_stream(seed, i, 1, StreamPurpose::kVerify);
    const std::vector<double> risks = random_risks(rng, 2, 10, 0.1, 10.0);
    const std::vector<double> closed = inverse_risk_weights(risks);
    const QpSolution numeric = solve_weight_qp_numeric(risks);
    double err = 0.0;
    for (std::size_t l = 0; l < risks.size(); ++l) {
      err = std::max(err, std::abs(closed[l] - numeric.weights[l]));
    }
    worst = std::max(worst, err);
    if (err < 1e-6) ++report.passed;
  }
  std::ostringstream detail;
  detail << "worst max-coordinate error " << worst;
  report.detail = detail.str();
  return report;
}

SuiteReport verify_lemma1_suite(std::uint64_t seed, std::size_t cases) {
  SuiteReport report{"lemma1", 0, cases, {}};
  double tightest = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng = make_stream(seed, i, 2, StreamPurpose::kVerify);
    const std::vector<double> risks = random_risks(rng, 2, 10, 0.01, 10.0);
    const double min_risk = *std::min_element(risks.begin(), risks.end());
    const double r_star = rng.uniform(0.0, min_risk);
    const Lemma1Check c = check_lemma1(risks, r_star);
    tightest = std::max(tightest, c.weighted_regret - c.average_regret);
    if (c.holds) ++report.passed;
  }
  std::ostringstream detail;
  detail << "max(weighted - average) " << tightest;
  report.detail = detail.str();
  return report;
}

std::vector<SuiteReport> verify_gradient_suites(std::uint64_t seed,
                                                std::size_t points) {
  std::vector<SuiteReport> out;
  out.push_back(gradient_suite(
      "gradients/localization",
      [](Rng& rng) {
        const Eigen::Vector2d anchor(rng.uniform(5, 25), rng.uniform(5, 25));
        auto model = std::make_shared<LocalizationLoss>(anchor);
        ModelParams theta(2);
        theta << rng.uniform(0, 30), rng.uniform(0, 30);
        const double angle = rng.uniform(0, 6.283185307179586);
        Sample s;
        s.x = Eigen::Vector2d(std::cos(angle) + rng.normal(0, 0.3),
                              std::sin(angle) + rng.normal(0, 0.3));
        s.y = rng.uniform(0, 30);
        return std::tuple{std::shared_ptr<const LossModel>(model), theta, s};
      },
      seed, points));
  out.push_back(gradient_suite(
      "gradients/softmax",
      [](Rng& rng) {
        const std::size_t classes = 2 + rng.index(4);
        const std::size_t features = 1 + rng.index(6);
        auto model = std::make_shared<SoftmaxLoss>(classes, features);
        ModelParams theta = random_vector(rng, static_cast<Eigen::Index>(model->dim()), 1.0);
        Sample s;
        s.x = random_vector(rng, static_cast<Eigen::Index>(features), 1.0);
        s.y = static_cast<double>(rng.index(classes));
        return std::tuple{std::shared_ptr<const LossModel>(model), theta, s};
      },
      seed, points));
  out.push_back(gradient_suite(
      "gradients/quadratic",
      [](Rng& rng) {
        const auto d = static_cast<Eigen::Index>(1 + rng.index(5));
        auto model = std::make_shared<QuadraticLoss>(random_spd(rng, d));
        ModelParams theta = random_vector(rng, d, 2.0);
        Sample s;
        s.x = random_vector(rng, d, 2.0);
        return std::tuple{std::shared_ptr<const LossModel>(model), theta, s};
      },
      seed, points));
  return out;
}

SuiteReport verify_convexity_suite(std::uint64_t seed, std::size_t points) {
  SuiteReport report{"convexity", 0, points, {}};
  for (std::size_t i = 0; i < points; ++i) {
    Rng rng = make_stream(seed, i, 3, StreamPurpose::kVerify);
    const auto d = static_cast<Eigen::Index>(1 + rng.index(5));
    const QuadraticLoss model(random_spd(rng, d));
    const ModelParams theta_star = random_vector(rng, d, 3.0);
    const ModelParams theta_l = random_vector(rng, d, 3.0);
    const double sigma2 = rng.uniform(0.0, 2.0);
    const ConvexityProfile profile{model.strong_convexity(), model.smoothness(),
                                   sigma2, 1.0};
    const auto risk = [&](const ModelParams& t) {
      return model.risk(t, theta_star, sigma2);
    };
    if (strong_convexity_gap_check(profile, theta_l, theta_star, risk)) {
      ++report.passed;
    }
  }
  report.detail = "|theta - theta*|^2 <= (2/m)(r(theta) - r(theta*))";
  return report;
}

}  // namespace bdmtl
