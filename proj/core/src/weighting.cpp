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

#include "bdmtl/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bdmtl/error.hpp"

namespace bdmtl {

std::string_view to_string(WeightRule rule) {
  switch (rule) {
    case WeightRule::kNone:
      return "none";
    case WeightRule::kAverage:
      return "average";
    case WeightRule::kDistance:
      return "distance";
    case WeightRule::kLoss:
      return "loss";
    case WeightRule::kFilteredLoss:
      return "filtered-loss";
  }
  return "unknown";
}

std::optional<WeightRule> parse_weight_rule(std::string_view name) {
  for (auto rule : {WeightRule::kNone, WeightRule::kAverage,
                    WeightRule::kDistance, WeightRule::kLoss,
                    WeightRule::kFilteredLoss}) {
    if (to_string(rule) == name) return rule;
  }
  return std::nullopt;
}

// ---- WeightVector ----------------------------------------------------------

WeightVector::WeightVector(std::vector<AgentId> ids, std::vector<double> weights)
    : ids_(std::move(ids)), weights_(std::move(weights)) {
  if (ids_.size() != weights_.size()) {
    throw ShapeError("WeightVector: ids and weights differ in length");
  }
}

double WeightVector::at(AgentId l) const {
  const auto it = std::lower_bound(ids_.begin(), ids_.end(), l);
  if (it == ids_.end() || *it != l) return 0.0;
  return weights_[static_cast<std::size_t>(it - ids_.begin())];
}

double WeightVector::sum() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

// ---- EmaTable --------------------------------------------------------------

template <class Tag>
EmaTable<Tag>::EmaTable(std::span<const AgentId> neighbors, double nu)
    : ids_(neighbors.begin(), neighbors.end()),
      phi_(neighbors.size(), 0.0),
      nu_(nu) {
  if (!(nu > 0.0 && nu < 1.0)) {
    throw InvalidSpec("forgetting factor must lie in (0, 1), got " +
                      std::to_string(nu));
  }
  if (!std::is_sorted(ids_.begin(), ids_.end()) ||
      std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end()) {
    throw InvalidSpec("estimate table: neighbor ids must be sorted and unique");
  }
}

template <class Tag>
std::size_t EmaTable<Tag>::position(AgentId l) const {
  const auto it = std::lower_bound(ids_.begin(), ids_.end(), l);
  if (it == ids_.end() || *it != l) {
    throw InvalidId("agent " + std::to_string(l) + " is not a tracked neighbor");
  }
  return static_cast<std::size_t>(it - ids_.begin());
}

template <class Tag>
bool EmaTable<Tag>::contains(AgentId l) const {
  return std::binary_search(ids_.begin(), ids_.end(), l);
}

template <class Tag>
bool EmaTable<Tag>::update(AgentId l, double value) {
  const std::size_t pos = position(l);
  if (!std::isfinite(value) || value < 0.0) {
    ++rejected_;
    return false;
  }
  phi_[pos] = (1.0 - nu_) * phi_[pos] + nu_ * value;
  return true;
}

template <class Tag>
void EmaTable<Tag>::assign(AgentId l, double value) {
  phi_[position(l)] = value;
}

template class EmaTable<RiskTag>;
template class EmaTable<DistanceTag>;

// ---- rules -----------------------------------------------------------------

WeightVector average_weights(std::span<const AgentId> neighborhood) {
  if (neighborhood.empty()) {
    throw InvalidSpec("average_weights: empty neighborhood");
  }
  const double w = 1.0 / static_cast<double>(neighborhood.size());
  return WeightVector({neighborhood.begin(), neighborhood.end()},
                      std::vector<double>(neighborhood.size(), w));
}

namespace {

// Normalized inverses of the values selected by `keep`; unselected entries
// are exactly zero. If every selected inverse is zero (all +inf) the weight
// is spread uniformly over the selection.
template <class Keep>
std::vector<double> normalized_inverses(std::span<const double> values,
                                        Keep keep, OpCounter* counter) {
  std::vector<double> out(values.size(), 0.0);
  double total = 0.0;
  std::size_t kept = 0;
  std::uint64_t ops = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ++ops;  // filter comparison
    if (!keep(values[i])) continue;
    out[i] = 1.0 / std::max(values[i], kInverseClamp);
    total += out[i];
    ops += 3;  // clamp, divide, accumulate
    ++kept;
  }
  if (total > 0.0) {
    for (double& w : out) w /= total;
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = keep(values[i]) ? 1.0 / static_cast<double>(kept) : 0.0;
    }
  }
  ops += values.size();  // normalization pass
  if (counter != nullptr) counter->ops += ops;
  return out;
}

template <class Tag>
WeightVector unfiltered(const EmaTable<Tag>& table, OpCounter* counter) {
  auto w = normalized_inverses(
      table.values(), [](double) { return true; }, counter);
  return WeightVector({table.ids().begin(), table.ids().end()}, std::move(w));
}

}  // namespace

WeightVector distance_weights(const DistanceEstimateTable& table,
                              OpCounter* counter) {
  return unfiltered(table, counter);
}

WeightVector loss_weights(const RiskEstimateTable& table, OpCounter* counter) {
  return unfiltered(table, counter);
}

std::vector<double> inverse_risk_weights(std::span<const double> risks) {
  if (risks.empty()) throw InvalidSpec("inverse_risk_weights: empty input");
  return normalized_inverses(risks, [](double) { return true; }, nullptr);
}

WeightVector filtered_loss_weights(const RiskEstimateTable& table,
                                   AgentId self, OpCounter* counter) {
  const double own = table.value(self);
  if (counter != nullptr) counter->ops += 1;
  if (!std::isfinite(own)) {
    // No usable reference risk: fall back to non-cooperation.
    std::vector<double> w(table.ids().size(), 0.0);
    w[static_cast<std::size_t>(
        std::lower_bound(table.ids().begin(), table.ids().end(), self) -
        table.ids().begin())] = 1.0;
    return WeightVector({table.ids().begin(), table.ids().end()}, std::move(w));
  }
  auto w = normalized_inverses(
      table.values(), [own](double phi) { return phi <= own; }, counter);
  return WeightVector({table.ids().begin(), table.ids().end()}, std::move(w));
}

}  // namespace bdmtl
