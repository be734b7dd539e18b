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

#ifndef BDMTL_WEIGHTING_HPP_
#define BDMTL_WEIGHTING_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bdmtl/topology.hpp"

namespace bdmtl {

// Lower clamp applied before inverting a risk or distance estimate.
inline constexpr double kInverseClamp = 1e-12;

enum class WeightRule {
  kNone,          // non-cooperative: all weight on self
  kAverage,       // 1 / |N_k|
  kDistance,      // inverse smoothed squared model distance
  kLoss,          // inverse smoothed risk over the whole neighborhood
  kFilteredLoss,  // inverse smoothed risk over neighbors no worse than self
};

std::string_view to_string(WeightRule rule);
// Accepts "none", "average", "distance", "loss", "filtered-loss".
std::optional<WeightRule> parse_weight_rule(std::string_view name);

// Combination weights of one agent over its neighborhood. Entries are sorted
// by agent id; agents outside the neighborhood are implicitly zero.
class WeightVector {
 public:
  WeightVector() = default;
  WeightVector(std::vector<AgentId> ids, std::vector<double> weights);

  std::span<const AgentId> ids() const { return ids_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return ids_.size(); }

  // Weight of agent l, 0 when l is not an entry.
  double at(AgentId l) const;
  double sum() const;

 private:
  std::vector<AgentId> ids_;
  std::vector<double> weights_;
};

// Arithmetic-operation tally used to check that weight computation is linear
// in the neighborhood size.
struct OpCounter {
  std::uint64_t ops = 0;
};

// Exponential moving average per neighbor:
//   phi_l <- (1 - nu) phi_l + nu * value,   phi_l starts at 0.
// The tag keeps risk and distance tables from being mixed up.
template <class Tag>
class EmaTable {
 public:
  // `neighbors` must be sorted and unique. Throws InvalidSpec unless
  // 0 < nu < 1.
  EmaTable(std::span<const AgentId> neighbors, double nu);

  // Rejects negative or non-finite values, leaving the table unchanged.
  [[nodiscard]] bool update(AgentId l, double value);

  // Overwrites phi_l; used when an exact risk is available.
  void assign(AgentId l, double value);

  // Sets phi_l to +infinity so the neighbor is always filtered out.
  void mark_untrusted(AgentId l) { phi_[position(l)] = kUntrusted; }

  double value(AgentId l) const { return phi_[position(l)]; }
  bool contains(AgentId l) const;
  std::span<const AgentId> ids() const { return ids_; }
  std::span<const double> values() const { return phi_; }
  double nu() const { return nu_; }
  std::size_t rejected_updates() const { return rejected_; }

  static constexpr double kUntrusted = std::numeric_limits<double>::infinity();

 private:
  std::size_t position(AgentId l) const;

  std::vector<AgentId> ids_;
  std::vector<double> phi_;
  double nu_;
  std::size_t rejected_ = 0;
};

struct RiskTag {};
struct DistanceTag {};
using RiskEstimateTable = EmaTable<RiskTag>;
using DistanceEstimateTable = EmaTable<DistanceTag>;

extern template class EmaTable<RiskTag>;
extern template class EmaTable<DistanceTag>;

// Uniform 1/|N_k| over `neighborhood`.
WeightVector average_weights(std::span<const AgentId> neighborhood);

// a_l = max(phi_l, eps)^-1 / sum_p max(phi_p, eps)^-1 over every tracked
// neighbor.
WeightVector distance_weights(const DistanceEstimateTable& table,
                              OpCounter* counter = nullptr);
WeightVector loss_weights(const RiskEstimateTable& table,
                          OpCounter* counter = nullptr);

// Same rule on a bare vector of risks, indexed 0..n-1.
std::vector<double> inverse_risk_weights(std::span<const double> risks);

// Loss weights restricted to {l : phi_l <= phi_self}; every other entry is
// exactly zero and self always keeps a positive weight.
WeightVector filtered_loss_weights(const RiskEstimateTable& table,
                                   AgentId self, OpCounter* counter = nullptr);

}  // namespace bdmtl

#endif  // BDMTL_WEIGHTING_HPP_
