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

#ifndef BDMTL_MODELS_HPP_
#define BDMTL_MODELS_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string_view>

#include "bdmtl/rng.hpp"

namespace bdmtl {

// Per-agent task model.
using ModelParams = Eigen::VectorXd;

// One data point. The meaning of the fields depends on the loss model:
//   localization: x = observed direction u, y = observed distance d
//   softmax:      x = features,            y = class index
//   quadratic:    x = noisy target point,  y unused
struct Sample {
  Eigen::VectorXd x;
  double y = 0.0;
};

bool all_finite(const Eigen::VectorXd& v);

// Convex per-sample loss with an analytic gradient.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string_view name() const = 0;
  virtual double loss(const ModelParams& theta, const Sample& s) const = 0;
  virtual ModelParams gradient(const ModelParams& theta,
                               const Sample& s) const = 0;
};

// Arithmetic means over a non-empty batch.
double batch_loss(const LossModel& model, const ModelParams& theta,
                  std::span<const Sample> batch);
ModelParams batch_gradient(const LossModel& model, const ModelParams& theta,
                           std::span<const Sample> batch);

// Squared range residual (d - (theta - anchor)^T u)^2 for an agent at
// `anchor` estimating a target position in the plane.
class LocalizationLoss final : public LossModel {
 public:
  explicit LocalizationLoss(Eigen::Vector2d anchor) : anchor_(anchor) {}

  std::size_t dim() const override { return 2; }
  std::string_view name() const override { return "localization"; }
  double loss(const ModelParams& theta, const Sample& s) const override;
  ModelParams gradient(const ModelParams& theta,
                       const Sample& s) const override;

  const Eigen::Vector2d& anchor() const { return anchor_; }

 private:
  double residual(const ModelParams& theta, const Sample& s) const;

  Eigen::Vector2d anchor_;
};

// Multinomial logistic regression. Parameters are a row-major
// classes x features weight matrix followed by one bias per class.
class SoftmaxLoss final : public LossModel {
 public:
  SoftmaxLoss(std::size_t classes, std::size_t features);

  std::size_t dim() const override { return classes_ * (features_ + 1); }
  std::string_view name() const override { return "softmax"; }
  double loss(const ModelParams& theta, const Sample& s) const override;
  ModelParams gradient(const ModelParams& theta,
                       const Sample& s) const override;

  std::size_t classes() const { return classes_; }
  std::size_t features() const { return features_; }

  Eigen::VectorXd logits(const ModelParams& theta,
                         const Eigen::VectorXd& x) const;
  std::size_t predict(const ModelParams& theta, const Eigen::VectorXd& x) const;

 private:
  std::size_t label_of(const Sample& s) const;
  void check_shapes(const ModelParams& theta, const Sample& s) const;

  std::size_t classes_;
  std::size_t features_;
};

// 0.5 (theta - w)^T H (theta - w) for a noisy target w = theta* + H^-1 eps,
// eps ~ N(0, sigma2/d I). The stochastic gradient H(theta - theta*) - eps is
// unbiased with E|g - grad r|^2 = sigma2, so the expected risk is
// m-strongly convex and L-smooth with m, L the extreme eigenvalues of H and
// c_k = 1.
class QuadraticLoss final : public LossModel {
 public:
  // Throws InvalidSpec unless H is symmetric positive definite.
  explicit QuadraticLoss(Eigen::MatrixXd hessian);

  std::size_t dim() const override {
    return static_cast<std::size_t>(hessian_.rows());
  }
  std::string_view name() const override { return "quadratic"; }
  double loss(const ModelParams& theta, const Sample& s) const override;
  ModelParams gradient(const ModelParams& theta,
                       const Sample& s) const override;

  const Eigen::MatrixXd& hessian() const { return hessian_; }
  double strong_convexity() const { return m_; }
  double smoothness() const { return lipschitz_; }

  Sample draw_sample(const ModelParams& theta_star, double sigma2,
                     Rng& rng) const;

  // r(theta) - r(theta*) = 0.5 (theta - theta*)^T H (theta - theta*).
  double excess_risk(const ModelParams& theta,
                     const ModelParams& theta_star) const;
  // Exact expected loss including the irreducible noise term.
  double risk(const ModelParams& theta, const ModelParams& theta_star,
              double sigma2) const;

 private:
  Eigen::MatrixXd hessian_;
  Eigen::LLT<Eigen::MatrixXd> cholesky_;
  double m_ = 0.0;
  double lipschitz_ = 0.0;
  double trace_inverse_ = 0.0;
};

// Central differences (loss(theta + h e_i) - loss(theta - h e_i)) / 2h.
ModelParams finite_diff_gradient(const LossModel& model,
                                 const ModelParams& theta, const Sample& s,
                                 double h);

}  // namespace bdmtl

#endif  // BDMTL_MODELS_HPP_
