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

#include "bdmtl/agents.hpp"

#include <cmath>
#include <sstream>

#include "bdmtl/error.hpp"

namespace bdmtl {

void validate_attack(const AttackSpec& spec, std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (const auto* interval = std::get_if<RandomIntervalAttack>(&spec)) {
    if (interval->lo.size() != d || interval->hi.size() != d) {
      throw InvalidSpec("random-interval attack: bounds must have dimension " +
                        std::to_string(dim));
    }
    if ((interval->lo.array() > interval->hi.array()).any()) {
      throw InvalidSpec("random-interval attack: lo must not exceed hi");
    }
    return;
  }
  const auto& exploit = std::get<DistanceExploitAttack>(spec);
  if (exploit.malicious_target.size() != d) {
    throw InvalidSpec("distance-exploit attack: target must have dimension " +
                      std::to_string(dim));
  }
  if (!(exploit.delta > 0.0)) {
    throw InvalidSpec("distance-exploit attack: delta must be positive");
  }
}

std::string describe(const AttackSpec& spec) {
  std::ostringstream out;
  if (const auto* interval = std::get_if<RandomIntervalAttack>(&spec)) {
    out << "random-interval[" << interval->lo.minCoeff() << ", "
        << interval->hi.maxCoeff() << "]";
  } else {
    out << "distance-exploit(delta=" << std::get<DistanceExploitAttack>(spec).delta
        << ")";
  }
  return out.str();
}

ModelParams byzantine_message(const AttackSpec& spec,
                              const ModelParams* victim_view, Rng& rng) {
  if (const auto* interval = std::get_if<RandomIntervalAttack>(&spec)) {
    ModelParams msg(interval->lo.size());
    for (Eigen::Index i = 0; i < msg.size(); ++i) {
      msg[i] = rng.uniform(interval->lo[i], interval->hi[i]);
    }
    return msg;
  }
  const auto& exploit = std::get<DistanceExploitAttack>(spec);
  if (victim_view == nullptr) {
    throw InvalidSpec("distance-exploit attack needs the victim's model");
  }
  const ModelParams direction = exploit.malicious_target - *victim_view;
  const double norm = direction.norm();
  if (norm == 0.0) return *victim_view;
  return *victim_view + (exploit.delta / norm) * direction;
}

NormalAgent::NormalAgent(AgentId id, std::shared_ptr<const LossModel> model,
                         ModelParams theta, std::span<const AgentId> neighborhood,
                         double mu, double nu, WeightRule rule)
    : id_(id),
      model_(std::move(model)),
      theta_(std::move(theta)),
      theta_hat_(theta_),
      mu_(mu),
      rule_(rule),
      risk_(neighborhood, nu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw InvalidSpec("agent " + std::to_string(id) + ": step size must be > 0");
  }
  if (static_cast<std::size_t>(theta_.size()) != model_->dim()) {
    throw ShapeError("agent " + std::to_string(id) + ": model dimension mismatch");
  }
  if (!risk_.contains(id)) {
    throw InvalidSpec("agent " + std::to_string(id) +
                      ": neighborhood must contain the agent itself");
  }
  if (rule == WeightRule::kDistance) distance_.emplace(neighborhood, nu);
}

bool NormalAgent::adapt(std::span<const Sample> batch) {
  if (batch.empty()) return false;
  const double train_loss = batch_loss(*model_, theta_, batch);
  const ModelParams grad = batch_gradient(*model_, theta_, batch);
  if (!all_finite(grad) || !std::isfinite(train_loss)) return false;
  ModelParams candidate = theta_ - mu_ * grad;
  if (!all_finite(candidate)) return false;
  theta_hat_ = std::move(candidate);
  last_train_loss_ = train_loss;
  return true;
}

void NormalAgent::evaluate_neighbors(std::span<const ReceivedModel> received,
                                     std::span<const Sample> eval_batch,
                                     const ExactRiskFn* exact_risk) {
  for (const auto& msg : received) {
    const ModelParams& model = *msg.model;
    // Self is never marked untrusted; a failed self update keeps the old value.
    const bool self = msg.from == id_;
    if (!all_finite(model) ||
        static_cast<std::size_t>(model.size()) != model_->dim()) {
      if (self) continue;
      risk_.mark_untrusted(msg.from);
      if (distance_) distance_->mark_untrusted(msg.from);
      continue;
    }
    if (exact_risk != nullptr) {
      const double r = (*exact_risk)(model);
      if (std::isfinite(r) && r >= 0.0) {
        risk_.assign(msg.from, r);
      } else if (!self) {
        risk_.mark_untrusted(msg.from);
      }
    } else if (!risk_.update(msg.from, batch_loss(*model_, model, eval_batch)) && !self) {
      risk_.mark_untrusted(msg.from);
    }
    if (distance_) {
      // Reference point is the agent's previous model.
      if (!distance_->update(msg.from, (theta_ - model).squaredNorm()) && !self) {
        distance_->mark_untrusted(msg.from);
      }
    }
  }
}

WeightVector NormalAgent::weights(OpCounter* counter) const {
  switch (rule_) {
    case WeightRule::kNone:
      return WeightVector({id_}, {1.0});
    case WeightRule::kAverage:
      return average_weights(risk_.ids());
    case WeightRule::kDistance:
      return distance_weights(*distance_, counter);
    case WeightRule::kLoss:
      return loss_weights(risk_, counter);
    case WeightRule::kFilteredLoss:
      return filtered_loss_weights(risk_, id_, counter);
  }
  throw InvalidSpec("unknown weight rule");
}

ModelParams NormalAgent::combine(std::span<const ReceivedModel> received,
                                 const WeightVector& weights) const {
  ModelParams out = ModelParams::Zero(theta_.size());
  for (const auto& msg : received) {
    const double a = weights.at(msg.from);
    // Zero weights skip the product so untrusted (non-finite) models never
    // reach the sum.
    if (a != 0.0) out += a * *msg.model;
  }
  return out;
}

}  // namespace bdmtl
