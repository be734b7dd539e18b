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

#ifndef BDMTL_ENGINE_HPP_
#define BDMTL_ENGINE_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bdmtl/agents.hpp"
#include "bdmtl/scenario.hpp"
#include "bdmtl/topology.hpp"
#include "bdmtl/weighting.hpp"

namespace bdmtl {

// How normal agents estimate r_k(theta_hat_l) for the loss-based rules.
enum class RiskEstimate {
  kEma,    // smoothed loss on a fresh evaluation batch each round
  kExact,  // closed-form risk from the scenario (analytic scenarios only)
};

struct NormalRole {
  WeightRule rule = WeightRule::kFilteredLoss;
  double mu = 0.1;
  double nu = 0.1;
  std::optional<ModelParams> initial_model;
};

struct ByzantineRole {
  AttackSpec attack;
};

using AgentRole = std::variant<NormalRole, ByzantineRole>;

struct EngineOptions {
  std::size_t rounds = 1;
  std::size_t batch_size = 1;
  std::size_t eval_batch_size = 0;  // 0 means batch_size
  std::uint64_t seed = 0;
  std::size_t metrics_every = 1;
  std::size_t test_every = 10;
  bool record_weights = false;
  std::size_t workers = 1;
  RiskEstimate risk_estimate = RiskEstimate::kEma;
};

struct SimulationSetup {
  std::shared_ptr<const Scenario> scenario;
  NetworkGraph graph;
  std::vector<AgentRole> roles;
  EngineOptions options;
};

// One row of the metrics series: a normal agent at the end of a round.
struct MetricsRecord {
  std::size_t round = 0;
  AgentId agent = 0;
  WeightRule rule = WeightRule::kNone;
  double train_loss = 0.0;
  double ema_loss = 0.0;
  std::optional<double> test_loss;
  std::optional<double> accuracy;
  std::optional<double> dist_to_opt;
  std::optional<WeightVector> weights;
};

struct AgentError {
  std::size_t round = 0;
  AgentId agent = 0;
  std::string message;
};

struct RoundReport {
  std::size_t round = 0;
  std::vector<MetricsRecord> metrics;
  std::vector<AgentError> errors;
};

// Round-synchronous adapt-then-combine over a fixed roster.
//
// Each round: (1) normal agents draw a batch and adapt while Byzantine
// agents craft one message per normal neighbor; (2) the candidates form a
// read-only snapshot; (3) every normal agent evaluates its neighborhood on
// the snapshot, computes its weights and combines; (4) models are committed
// and metrics recorded. Random streams are keyed by (seed, agent, round,
// purpose), so results do not depend on the worker count.
class Simulation {
 public:
  // Throws InvalidSpec with the offending field for inconsistent setups.
  explicit Simulation(SimulationSetup setup);
  ~Simulation();
  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;

  RoundReport run_round();

  std::size_t rounds_completed() const { return round_; }
  std::size_t num_agents() const { return graph_.size(); }
  bool is_byzantine(AgentId k) const { return !agents_.at(k).has_value(); }
  // Throws InvalidId for Byzantine agents.
  const NormalAgent& agent(AgentId k) const;
  const NetworkGraph& graph() const { return graph_; }
  const Scenario& scenario() const { return *scenario_; }
  const EngineOptions& options() const { return options_; }
  const AgentRole& role(AgentId k) const { return roles_.at(k); }

  // Message Byzantine agent b sent to victim k in the last round.
  const ModelParams& last_message(AgentId b, AgentId k) const;

 private:
  struct Workers;

  void adapt_phase(std::size_t round);
  void combine_phase(std::size_t round, RoundReport& report);

  std::shared_ptr<const Scenario> scenario_;
  NetworkGraph graph_;
  std::vector<AgentRole> roles_;
  EngineOptions options_;
  std::vector<std::optional<NormalAgent>> agents_;
  // Per agent: message for each member of its neighborhood (Byzantine only).
  std::vector<std::vector<ModelParams>> messages_;
  std::vector<std::optional<std::string>> adapt_errors_;
  std::vector<ModelParams> pending_;
  std::vector<std::optional<MetricsRecord>> slots_;
  std::vector<std::optional<std::string>> combine_errors_;
  std::unique_ptr<Workers> workers_;
  std::size_t round_ = 0;
};

struct SimulationResult {
  std::vector<MetricsRecord> metrics;
  std::vector<AgentError> errors;
  // Final model of each agent; empty for Byzantine agents.
  std::vector<std::optional<ModelParams>> final_models;
};

SimulationResult run_simulation(SimulationSetup setup);

// `count` distinct agent ids drawn uniformly from [0, n), sorted. The draw
// depends only on (n, count, seed). Throws InvalidSpec when count > n.
std::vector<AgentId> sample_roster(std::size_t n, std::size_t count,
                                   std::uint64_t seed);

}  // namespace bdmtl

#endif  // BDMTL_ENGINE_HPP_
