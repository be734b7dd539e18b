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

#include <cmath>
#include <string>

#include "bdmtl/error.hpp"

namespace bdmtl {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double batch_loss(const LossModel& model, const ModelParams& theta,
                  std::span<const Sample> batch) {
  if (batch.empty()) throw ShapeError("batch_loss: empty batch");
  double total = 0.0;
  for (const auto& s : batch) total += model.loss(theta, s);
  return total / static_cast<double>(batch.size());
}

ModelParams batch_gradient(const LossModel& model, const ModelParams& theta,
                           std::span<const Sample> batch) {
  if (batch.empty()) throw ShapeError("batch_gradient: empty batch");
  ModelParams total = ModelParams::Zero(static_cast<Eigen::Index>(model.dim()));
  for (const auto& s : batch) total += model.gradient(theta, s);
  return total / static_cast<double>(batch.size());
}

// ---- localization ----------------------------------------------------------

double LocalizationLoss::residual(const ModelParams& theta,
                                  const Sample& s) const {
  if (theta.size() != 2 || s.x.size() != 2) {
    throw ShapeError("localization: theta and direction must be 2-dimensional");
  }
  return s.y - (theta - anchor_).dot(s.x);
}

double LocalizationLoss::loss(const ModelParams& theta, const Sample& s) const {
  const double r = residual(theta, s);
  return r * r;
}

ModelParams LocalizationLoss::gradient(const ModelParams& theta,
                                       const Sample& s) const {
  return -2.0 * residual(theta, s) * s.x;
}

// ---- softmax ---------------------------------------------------------------

SoftmaxLoss::SoftmaxLoss(std::size_t classes, std::size_t features)
    : classes_(classes), features_(features) {
  if (classes < 2) throw InvalidSpec("softmax: need at least two classes");
  if (features == 0) throw InvalidSpec("softmax: need at least one feature");
}

void SoftmaxLoss::check_shapes(const ModelParams& theta, const Sample& s) const {
  if (static_cast<std::size_t>(theta.size()) != dim() ||
      static_cast<std::size_t>(s.x.size()) != features_) {
    throw ShapeError("softmax: expected theta of size " + std::to_string(dim()) +
                     " and " + std::to_string(features_) + " features");
  }
}

std::size_t SoftmaxLoss::label_of(const Sample& s) const {
  const double y = s.y;
  if (!(y >= 0.0) || y >= static_cast<double>(classes_) || y != std::floor(y)) {
    throw InvalidLabel("softmax: label " + std::to_string(y) +
                       " outside [0, " + std::to_string(classes_) + ")");
  }
  return static_cast<std::size_t>(y);
}

Eigen::VectorXd SoftmaxLoss::logits(const ModelParams& theta,
                                    const Eigen::VectorXd& x) const {
  const auto c = static_cast<Eigen::Index>(classes_);
  const auto f = static_cast<Eigen::Index>(features_);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      weights(theta.data(), c, f);
  return weights * x + theta.tail(c);
}

std::size_t SoftmaxLoss::predict(const ModelParams& theta,
                                 const Eigen::VectorXd& x) const {
  Eigen::Index best = 0;
  logits(theta, x).maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

namespace {

// log(sum(exp(z))) without overflow.
double log_sum_exp(const Eigen::VectorXd& z) {
  const double top = z.maxCoeff();
  return top + std::log((z.array() - top).exp().sum());
}

}  // namespace

double SoftmaxLoss::loss(const ModelParams& theta, const Sample& s) const {
  check_shapes(theta, s);
  const std::size_t y = label_of(s);
  const auto label = static_cast<Eigen::Index>(y);
  const Eigen::VectorXd z = logits(theta, s.x);
  const Eigen::VectorXd w = z.array() - z[label];
  if (w.maxCoeff() > 0.0) return log_sum_exp(w);
  // The label is the arg-max: log1p keeps small losses accurate.
  double rest = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (j != label) rest += std::exp(w[j]);
  }
  return std::log1p(rest);
}

ModelParams SoftmaxLoss::gradient(const ModelParams& theta,
                                  const Sample& s) const {
  check_shapes(theta, s);
  const std::size_t y = label_of(s);
  const Eigen::VectorXd z = logits(theta, s.x);
  Eigen::VectorXd p = (z.array() - log_sum_exp(z)).exp();
  p[static_cast<Eigen::Index>(y)] -= 1.0;

  const auto c = static_cast<Eigen::Index>(classes_);
  const auto f = static_cast<Eigen::Index>(features_);
  ModelParams grad(theta.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::RowMajor>>
      dweights(grad.data(), c, f);
  dweights = p * s.x.transpose();
  grad.tail(c) = p;
  return grad;
}

// ---- quadratic -------------------------------------------------------------

QuadraticLoss::QuadraticLoss(Eigen::MatrixXd hessian)
    : hessian_(std::move(hessian)) {
  if (hessian_.rows() == 0 || hessian_.rows() != hessian_.cols()) {
    throw InvalidSpec("quadratic: Hessian must be a non-empty square matrix");
  }
  if (!hessian_.allFinite() ||
      (hessian_ - hessian_.transpose()).cwiseAbs().maxCoeff() >
          1e-12 * (1.0 + hessian_.cwiseAbs().maxCoeff())) {
    throw InvalidSpec("quadratic: Hessian must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian_);
  m_ = eig.eigenvalues().minCoeff();
  lipschitz_ = eig.eigenvalues().maxCoeff();
  if (!(m_ > 0.0)) {
    throw InvalidSpec("quadratic: Hessian must be positive definite (min "
                      "eigenvalue " + std::to_string(m_) + ")");
  }
  cholesky_.compute(hessian_);
  trace_inverse_ = (1.0 / eig.eigenvalues().array()).sum();
}

double QuadraticLoss::loss(const ModelParams& theta, const Sample& s) const {
  if (theta.size() != hessian_.rows() || s.x.size() != hessian_.rows()) {
    throw ShapeError("quadratic: dimension mismatch");
  }
  const Eigen::VectorXd e = theta - s.x;
  return 0.5 * e.dot(hessian_ * e);
}

ModelParams QuadraticLoss::gradient(const ModelParams& theta,
                                    const Sample& s) const {
  if (theta.size() != hessian_.rows() || s.x.size() != hessian_.rows()) {
    throw ShapeError("quadratic: dimension mismatch");
  }
  return hessian_ * (theta - s.x);
}

Sample QuadraticLoss::draw_sample(const ModelParams& theta_star, double sigma2,
                                  Rng& rng) const {
  const Eigen::Index d = hessian_.rows();
  Sample s;
  if (sigma2 <= 0.0) {
    s.x = theta_star;
    return s;
  }
  const double stddev = std::sqrt(sigma2 / static_cast<double>(d));
  Eigen::VectorXd eps(d);
  for (Eigen::Index i = 0; i < d; ++i) eps[i] = rng.normal(0.0, stddev);
  s.x = theta_star + cholesky_.solve(eps);
  return s;
}

double QuadraticLoss::excess_risk(const ModelParams& theta,
                                  const ModelParams& theta_star) const {
  const Eigen::VectorXd e = theta - theta_star;
  return 0.5 * e.dot(hessian_ * e);
}

double QuadraticLoss::risk(const ModelParams& theta,
                           const ModelParams& theta_star, double sigma2) const {
  // E[0.5 eps^T H^-1 eps] = 0.5 (sigma2 / d) tr(H^-1).
  return excess_risk(theta, theta_star) +
         0.5 * sigma2 / static_cast<double>(hessian_.rows()) * trace_inverse_;
}

// ---- oracle ----------------------------------------------------------------

ModelParams finite_diff_gradient(const LossModel& model,
                                 const ModelParams& theta, const Sample& s,
                                 double h) {
  if (!(h > 0.0)) throw InvalidSpec("finite_diff_gradient: step must be > 0");
  ModelParams grad(theta.size());
  ModelParams probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = model.loss(probe, s);
    probe[i] = theta[i] - h;
    const double down = model.loss(probe, s);
    probe[i] = theta[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace bdmtl
