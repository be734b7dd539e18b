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

#ifndef BDMTL_AGENTS_HPP_
#define BDMTL_AGENTS_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "bdmtl/models.hpp"
#include "bdmtl/rng.hpp"
#include "bdmtl/topology.hpp"
#include "bdmtl/weighting.hpp"

namespace bdmtl {

// Each coordinate drawn uniformly from [lo_i, hi_i], independently for every
// victim and round.
struct RandomIntervalAttack {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

// Sends the victim's own previous model nudged by `delta` toward
// `malicious_target`, so the message is closer to the victim's reference
// point than any honest model farther away than `delta`.
struct DistanceExploitAttack {
  ModelParams malicious_target;
  double delta = 0.01;
};

using AttackSpec = std::variant<RandomIntervalAttack, DistanceExploitAttack>;

// Throws InvalidSpec for lo > hi, delta <= 0 or a dimension mismatch.
void validate_attack(const AttackSpec& spec, std::size_t dim);

std::string describe(const AttackSpec& spec);

// Crafts the message a Byzantine agent sends to one victim. `victim_view` is
// the victim's previous model; DistanceExploit throws InvalidSpec without it.
ModelParams byzantine_message(const AttackSpec& spec,
                              const ModelParams* victim_view, Rng& rng);

// One model received from a neighbor during the combination phase.
struct ReceivedModel {
  AgentId from = 0;
  const ModelParams* model = nullptr;
};

// Optional closed-form risk of agent k's task at a given model.
using ExactRiskFn = std::function<double(const ModelParams&)>;

// State of a normal agent running adapt-then-combine.
class NormalAgent {
 public:
  NormalAgent(AgentId id, std::shared_ptr<const LossModel> model,
              ModelParams theta, std::span<const AgentId> neighborhood,
              double mu, double nu, WeightRule rule);

  AgentId id() const { return id_; }
  WeightRule rule() const { return rule_; }
  double step_size() const { return mu_; }
  const LossModel& model() const { return *model_; }
  const ModelParams& theta() const { return theta_; }
  const ModelParams& theta_hat() const { return theta_hat_; }
  const RiskEstimateTable& risk_table() const { return risk_; }
  const std::optional<DistanceEstimateTable>& distance_table() const {
    return distance_;
  }
  // Mean training-batch loss at the model the last adapt started from.
  double last_train_loss() const { return last_train_loss_; }

  // theta_hat = theta - mu * mean batch gradient. Returns false and leaves
  // the state untouched when the batch is empty or the gradient or the
  // candidate is non-finite.
  [[nodiscard]] bool adapt(std::span<const Sample> batch);

  // Pushes each received model's loss on `eval_batch` through the risk EMA
  // (and, for the distance rule, |theta - model|^2 through the distance
  // EMA). Non-finite models are marked untrusted. When `exact_risk` is set
  // the risk table is overwritten with exact risks instead.
  void evaluate_neighbors(std::span<const ReceivedModel> received,
                          std::span<const Sample> eval_batch,
                          const ExactRiskFn* exact_risk = nullptr);

  // Weights for the configured rule from the current tables.
  WeightVector weights(OpCounter* counter = nullptr) const;

  // theta_new = sum_l a_l * model_l. Does not modify the agent.
  ModelParams combine(std::span<const ReceivedModel> received,
                      const WeightVector& weights) const;

  void commit(ModelParams theta) { theta_ = std::move(theta); }
  // Resets theta_hat to theta; used when a round is aborted.
  void hold() { theta_hat_ = theta_; }

 private:
  AgentId id_;
  std::shared_ptr<const LossModel> model_;
  ModelParams theta_;
  ModelParams theta_hat_;
  double mu_;
  WeightRule rule_;
  RiskEstimateTable risk_;
  std::optional<DistanceEstimateTable> distance_;
  double last_train_loss_ = 0.0;
};

}  // namespace bdmtl

#endif  // BDMTL_AGENTS_HPP_
