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

#include "bdmtl/engine.hpp"

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/info.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <exception>
#include <iterator>
#include <numeric>
#include <optional>

#include "bdmtl/error.hpp"

namespace bdmtl {

struct Simulation::Workers {
  explicit Workers(std::size_t count) : arena(static_cast<int>(count)) {
    // TBB caps its pool at the hardware concurrency; lift the cap so that
    // a requested worker count is honored on small machines.
    if (count > static_cast<std::size_t>(tbb::info::default_concurrency())) {
      lift.emplace(tbb::global_control::max_allowed_parallelism, count);
    }
  }

  template <class Fn>
  void for_each(std::size_t n, const Fn& fn) {
    arena.execute([&] {
      tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n),
                        [&](const tbb::blocked_range<std::size_t>& range) {
                          for (std::size_t i = range.begin(); i != range.end(); ++i) fn(i);
                        });
    });
  }

  std::optional<tbb::global_control> lift;
  tbb::task_arena arena;
};

namespace {

std::size_t position_in(std::span<const AgentId> nbhd, AgentId l) {
  return static_cast<std::size_t>(std::lower_bound(nbhd.begin(), nbhd.end(), l) -
                                  nbhd.begin());
}

void check_options(const EngineOptions& o) {
  if (o.rounds < 1) throw InvalidSpec("engine.rounds: must be >= 1");
  if (o.batch_size < 1) throw InvalidSpec("engine.batch_size: must be >= 1");
  if (o.metrics_every < 1) throw InvalidSpec("engine.metrics_every: must be >= 1");
  if (o.test_every < 1) throw InvalidSpec("engine.test_every: must be >= 1");
  if (o.workers < 1) throw InvalidSpec("engine.workers: must be >= 1");
}

}  // namespace

Simulation::Simulation(SimulationSetup setup)
    : scenario_(std::move(setup.scenario)),
      graph_(std::move(setup.graph)),
      roles_(std::move(setup.roles)),
      options_(setup.options) {
  if (!scenario_) throw InvalidSpec("scenario: missing");
  check_options(options_);
  if (options_.eval_batch_size == 0) options_.eval_batch_size = options_.batch_size;
  const std::size_t n = graph_.size();
  if (n == 0 || n != scenario_->num_agents()) {
    throw InvalidSpec("topology: graph has " + std::to_string(n) +
                      " agents but the scenario has " +
                      std::to_string(scenario_->num_agents()));
  }
  if (roles_.size() != n) {
    throw InvalidSpec("agents: " + std::to_string(roles_.size()) +
                      " roles given for " + std::to_string(n) + " agents");
  }
  if (options_.risk_estimate == RiskEstimate::kExact && !scenario_->has_exact_risk()) {
    throw InvalidSpec("engine.risk_estimate: scenario '" +
                      std::string(scenario_->name()) + "' has no exact risk");
  }

  agents_.resize(n);
  messages_.resize(n);
  bool any_normal = false;
  for (AgentId k = 0; k < n; ++k) {
    if (const auto* byz = std::get_if<ByzantineRole>(&roles_[k])) {
      validate_attack(byz->attack, scenario_->model_dim());
      messages_[k].assign(graph_.neighborhood(k).size(), ModelParams());
      continue;
    }
    const auto& normal = std::get<NormalRole>(roles_[k]);
    if (const auto profile = scenario_->profile(k)) {
      const double limit = 1.0 / (profile->L * profile->c_k);
      if (normal.mu > limit) {
        throw InvalidSpec("agents.mu: step size " + std::to_string(normal.mu) +
                          " for agent " + std::to_string(k) +
                          " exceeds 1/(L c_k) = " + std::to_string(limit));
      }
    }
    ModelParams theta =
        normal.initial_model ? *normal.initial_model : scenario_->initial_model(k);
    agents_[k].emplace(k, scenario_->loss_model(k), std::move(theta),
                       graph_.neighborhood(k), normal.mu, normal.nu, normal.rule);
    any_normal = true;
  }
  if (!any_normal) throw InvalidSpec("agents: at least one normal agent is required");

  adapt_errors_.resize(n);
  combine_errors_.resize(n);
  pending_.resize(n);
  slots_.resize(n);
  workers_ = std::make_unique<Workers>(options_.workers);
}

Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

const NormalAgent& Simulation::agent(AgentId k) const {
  if (k >= agents_.size() || !agents_[k]) {
    throw InvalidId("agent " + std::to_string(k) + " is not a normal agent");
  }
  return *agents_[k];
}

const ModelParams& Simulation::last_message(AgentId b, AgentId k) const {
  if (!is_byzantine(b)) throw InvalidId("agent " + std::to_string(b) + " is not Byzantine");
  const auto nbhd = graph_.neighborhood(b);
  const std::size_t pos = position_in(nbhd, k);
  if (pos == nbhd.size() || nbhd[pos] != k) {
    throw InvalidId("agent " + std::to_string(k) + " is not a neighbor of " +
                    std::to_string(b));
  }
  return messages_[b][pos];
}

void Simulation::adapt_phase(std::size_t round) {
  workers_->for_each(graph_.size(), [&](AgentId k) {
    adapt_errors_[k].reset();
    if (auto& agent = agents_[k]) {
      std::vector<Sample> batch;
      batch.reserve(options_.batch_size);
      Rng rng = make_stream(options_.seed, k, round, StreamPurpose::kTrainBatch);
      try {
        scenario_->draw_batch(k, rng, options_.batch_size, batch);
        if (!agent->adapt(batch)) adapt_errors_[k] = "non-finite gradient in adapt";
      } catch (const std::exception& e) {
        adapt_errors_[k] = e.what();
      }
      if (adapt_errors_[k]) agent->hold();
      return;
    }
    const auto& attack = std::get<ByzantineRole>(roles_[k]).attack;
    const auto nbhd = graph_.neighborhood(k);
    for (std::size_t i = 0; i < nbhd.size(); ++i) {
      const AgentId victim = nbhd[i];
      if (!agents_[victim]) continue;
      Rng rng = make_stream(options_.seed, k, round, StreamPurpose::kByzantine, victim);
      messages_[k][i] = byzantine_message(attack, &agents_[victim]->theta(), rng);
    }
  });
}

void Simulation::combine_phase(std::size_t round, RoundReport& report) {
  const bool record = round % options_.metrics_every == 0;
  const bool test = record && round % options_.test_every == 0;
  workers_->for_each(graph_.size(), [&](AgentId k) {
    slots_[k].reset();
    combine_errors_[k].reset();
    auto& agent = agents_[k];
    if (!agent) return;
    pending_[k] = agent->theta();
    const auto nbhd = graph_.neighborhood(k);
    if (!adapt_errors_[k]) {
      std::vector<ReceivedModel> received;
      received.reserve(nbhd.size());
      for (AgentId l : nbhd) {
        if (agents_[l]) {
          received.push_back({l, &agents_[l]->theta_hat()});
        } else {
          received.push_back({l, &messages_[l][position_in(graph_.neighborhood(l), k)]});
        }
      }
      const bool needs_neighbors = agent->rule() == WeightRule::kDistance ||
                                   agent->rule() == WeightRule::kLoss ||
                                   agent->rule() == WeightRule::kFilteredLoss;
      const ReceivedModel self{k, &agent->theta_hat()};
      const std::span<const ReceivedModel> to_evaluate =
          needs_neighbors ? std::span<const ReceivedModel>(received)
                          : std::span<const ReceivedModel>(&self, 1);
      try {
        if (options_.risk_estimate == RiskEstimate::kExact) {
          const ExactRiskFn risk = [this, k](const ModelParams& theta) {
            return scenario_->exact_risk(k, theta);
          };
          agent->evaluate_neighbors(to_evaluate, {}, &risk);
        } else {
          std::vector<Sample> eval_batch;
          eval_batch.reserve(options_.eval_batch_size);
          Rng rng = make_stream(options_.seed, k, round, StreamPurpose::kEvalBatch);
          scenario_->draw_batch(k, rng, options_.eval_batch_size, eval_batch);
          agent->evaluate_neighbors(to_evaluate, eval_batch);
        }
        const WeightVector weights = agent->weights();
        ModelParams next = agent->combine(received, weights);
        if (all_finite(next)) {
          pending_[k] = std::move(next);
        } else {
          combine_errors_[k] = "non-finite model after combination";
        }
        if (record && options_.record_weights) {
          slots_[k].emplace();
          slots_[k]->weights = weights;
        }
      } catch (const std::exception& e) {
        combine_errors_[k] = e.what();
      }
    }
    if (!record) return;
    if (!slots_[k]) slots_[k].emplace();
    MetricsRecord& m = *slots_[k];
    m.round = round;
    m.agent = k;
    m.rule = agent->rule();
    m.train_loss = agent->last_train_loss();
    m.ema_loss = agent->risk_table().value(k);
    if (const auto opt = scenario_->optimum(k)) m.dist_to_opt = (pending_[k] - *opt).norm();
    const auto test_set = scenario_->test_set(k);
    if (test && !test_set.empty()) {
      m.test_loss = batch_loss(agent->model(), pending_[k], test_set);
      if (scenario_->classification()) {
        const auto& softmax = dynamic_cast<const SoftmaxLoss&>(agent->model());
        m.accuracy = accuracy(softmax, pending_[k], test_set);
      }
    }
  });

  for (AgentId k = 0; k < graph_.size(); ++k) {
    if (!agents_[k]) continue;
    agents_[k]->commit(std::move(pending_[k]));
    if (adapt_errors_[k]) report.errors.push_back({round, k, *adapt_errors_[k]});
    if (combine_errors_[k]) report.errors.push_back({round, k, *combine_errors_[k]});
    if (slots_[k]) report.metrics.push_back(std::move(*slots_[k]));
  }
}

RoundReport Simulation::run_round() {
  const std::size_t round = round_ + 1;
  RoundReport report;
  report.round = round;
  adapt_phase(round);
  combine_phase(round, report);
  round_ = round;
  return report;
}

SimulationResult run_simulation(SimulationSetup setup) {
  Simulation sim(std::move(setup));
  SimulationResult result;
  for (std::size_t i = 0; i < sim.options().rounds; ++i) {
    RoundReport report = sim.run_round();
    std::move(report.metrics.begin(), report.metrics.end(),
              std::back_inserter(result.metrics));
    std::move(report.errors.begin(), report.errors.end(),
              std::back_inserter(result.errors));
  }
  result.final_models.resize(sim.num_agents());
  for (AgentId k = 0; k < sim.num_agents(); ++k) {
    if (!sim.is_byzantine(k)) result.final_models[k] = sim.agent(k).theta();
  }
  return result;
}

std::vector<AgentId> sample_roster(std::size_t n, std::size_t count,
                                   std::uint64_t seed) {
  if (count > n) {
    throw InvalidSpec("roster: cannot pick " + std::to_string(count) + " of " +
                      std::to_string(n) + " agents");
  }
  std::vector<AgentId> order(n);
  std::iota(order.begin(), order.end(), AgentId{0});
  Rng rng = make_stream(seed, 0, 0, StreamPurpose::kRoster);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(order[i], order[i + rng.index(n - i)]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace bdmtl
