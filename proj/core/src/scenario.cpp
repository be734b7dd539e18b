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

#include "bdmtl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

#include "bdmtl/error.hpp"

namespace bdmtl {

// ---- localization ------------------------------------------------------------

LocalizationScenario::LocalizationScenario(LocalizationParams params)
    : targets_(std::move(params.targets)) {
  if (params.n_agents == 0) throw InvalidSpec("localization: n_agents must be >= 1");
  if (targets_.empty()) throw InvalidSpec("localization: need at least one target");
  if (!(params.sigma_d2_lo >= 0.0 && params.sigma_d2_lo <= params.sigma_d2_hi) ||
      !(params.sigma_u2_lo >= 0.0 && params.sigma_u2_lo <= params.sigma_u2_hi)) {
    throw InvalidSpec("localization: noise intervals must satisfy 0 <= lo <= hi");
  }
  const std::size_t n = params.n_agents;
  if (params.positions) {
    if (params.positions->size() != n) {
      throw InvalidSpec("localization: position count differs from n_agents");
    }
    positions_ = *params.positions;
  } else {
    Rng rng = make_stream(params.seed, 0, 0, StreamPurpose::kScenario);
    positions_.resize(n);
    for (auto& p : positions_) {
      p.x = rng.uniform(params.region_lo, params.region_hi);
      p.y = rng.uniform(params.region_lo, params.region_hi);
    }
  }
  assignment_.resize(n);
  sigma_d2_.resize(n);
  sigma_u2_.resize(n);
  losses_.resize(n);
  for (AgentId k = 0; k < n; ++k) {
    std::size_t nearest = 0;
    for (std::size_t t = 1; t < targets_.size(); ++t) {
      if (distance(positions_[k], targets_[t]) <
          distance(positions_[k], targets_[nearest])) {
        nearest = t;
      }
    }
    assignment_[k] = nearest;
    Rng rng = make_stream(params.seed, k, 1, StreamPurpose::kScenario);
    sigma_d2_[k] = rng.uniform(params.sigma_d2_lo, params.sigma_d2_hi);
    sigma_u2_[k] = rng.uniform(params.sigma_u2_lo, params.sigma_u2_hi);
    losses_[k] = std::make_shared<LocalizationLoss>(
        Eigen::Vector2d(positions_[k].x, positions_[k].y));
  }
}

std::shared_ptr<const LossModel> LocalizationScenario::loss_model(AgentId k) const {
  return losses_.at(k);
}

double LocalizationScenario::true_distance(AgentId k) const {
  return distance(targets_[assignment_.at(k)], positions_.at(k));
}

Eigen::Vector2d LocalizationScenario::direction(AgentId k) const {
  const Point2& t = targets_[assignment_.at(k)];
  const Point2& x = positions_.at(k);
  const Eigen::Vector2d v(t.x - x.x, t.y - x.y);
  const double norm = v.norm();
  // An agent sitting on its target has no bearing; any unit vector works.
  return norm > 0.0 ? Eigen::Vector2d(v / norm) : Eigen::Vector2d(1.0, 0.0);
}

void LocalizationScenario::draw_batch(AgentId k, Rng& rng, std::size_t size,
                                      std::vector<Sample>& out) const {
  const double range = true_distance(k);
  const Eigen::Vector2d u0 = direction(k);
  const double sd = std::sqrt(sigma_d2_.at(k));
  const double su = std::sqrt(sigma_u2_.at(k));
  for (std::size_t i = 0; i < size; ++i) {
    Sample s;
    s.y = range + rng.normal(0.0, sd);
    const double ux = u0.x() + rng.normal(0.0, su);
    const double uy = u0.y() + rng.normal(0.0, su);
    s.x = Eigen::Vector2d(ux, uy);
    out.push_back(std::move(s));
  }
}

std::optional<ModelParams> LocalizationScenario::optimum(AgentId k) const {
  const Point2& x = positions_.at(k);
  const Eigen::Vector2d anchor(x.x, x.y);
  return ModelParams(anchor + true_distance(k) / (1.0 + sigma_u2_.at(k)) * direction(k));
}

double LocalizationScenario::exact_risk(AgentId k, const ModelParams& theta) const {
  const Point2& x = positions_.at(k);
  const Eigen::Vector2d e = theta - Eigen::Vector2d(x.x, x.y);
  const double bias = true_distance(k) - e.dot(direction(k));
  return bias * bias + sigma_d2_.at(k) + sigma_u2_.at(k) * e.squaredNorm();
}

// ---- quadratic ---------------------------------------------------------------

QuadraticScenario::QuadraticScenario(QuadraticParams params)
    : params_(std::move(params)) {
  if (params_.n_agents == 0) throw InvalidSpec("quadratic: n_agents must be >= 1");
  if (params_.n_clusters == 0 || params_.n_clusters > params_.n_agents) {
    throw InvalidSpec("quadratic: n_clusters must lie in [1, n_agents]");
  }
  if (!(params_.sigma2 >= 0.0)) throw InvalidSpec("quadratic: sigma2 must be >= 0");
  if (!(params_.spread >= 0.0)) throw InvalidSpec("quadratic: spread must be >= 0");
  loss_ = std::make_shared<QuadraticLoss>(params_.hessian);
  const auto d = static_cast<Eigen::Index>(loss_->dim());
  if (params_.center.size() == 0) params_.center = Eigen::VectorXd::Zero(d);
  if (params_.center.size() != d) {
    throw InvalidSpec("quadratic: center dimension differs from the Hessian");
  }
  centers_.reserve(params_.n_clusters);
  for (std::size_t c = 0; c < params_.n_clusters; ++c) {
    Rng rng = make_stream(params_.seed, c, 0, StreamPurpose::kScenario);
    ModelParams center = params_.center;
    for (Eigen::Index i = 0; i < d; ++i) {
      center[i] += params_.spread * rng.uniform(-1.0, 1.0);
    }
    centers_.push_back(std::move(center));
  }
}

std::size_t QuadraticScenario::cluster_of(AgentId k) const {
  if (k >= params_.n_agents) throw InvalidId("quadratic: agent out of range");
  return k * params_.n_clusters / params_.n_agents;
}

void QuadraticScenario::draw_batch(AgentId k, Rng& rng, std::size_t size,
                                   std::vector<Sample>& out) const {
  const ModelParams& center = centers_[cluster_of(k)];
  for (std::size_t i = 0; i < size; ++i) {
    out.push_back(loss_->draw_sample(center, params_.sigma2, rng));
  }
}

double QuadraticScenario::exact_risk(AgentId k, const ModelParams& theta) const {
  return loss_->risk(theta, centers_[cluster_of(k)], params_.sigma2);
}

double QuadraticScenario::excess_risk(AgentId k, const ModelParams& theta) const {
  return loss_->excess_risk(theta, centers_[cluster_of(k)]);
}

std::optional<ConvexityProfile> QuadraticScenario::profile(AgentId) const {
  return ConvexityProfile{loss_->strong_convexity(), loss_->smoothness(),
                          params_.sigma2, 1.0};
}

// ---- CSV ---------------------------------------------------------------------

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r\"");
    const auto last = field.find_last_not_of(" \t\r\"");
    fields.push_back(first == std::string::npos ? std::string()
                                                : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_blank(line)) break;
  }
  if (line_no == 0 || is_blank(line)) throw ParseError("csv: missing header row", 0);
  table.header = split_fields(line);
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != table.header.size()) {
      throw ParseError("csv: expected " + std::to_string(table.header.size()) +
                           " fields, found " + std::to_string(fields.size()),
                       line_no);
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      std::size_t used = 0;
      try {
        row[i] = std::stod(fields[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != fields[i].size() || !std::isfinite(row[i])) {
        throw ParseError("csv: non-numeric value '" + fields[i] + "' in column " +
                             table.header[i],
                         line_no);
      }
    }
    table.rows.push_back(std::move(row));
    table.lines.push_back(line_no);
  }
  return table;
}

namespace {

std::size_t column_index(const CsvTable& table, const std::string& name,
                         const std::string& field) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    throw ConfigError(field, "column '" + name + "' not found in CSV header");
  }
  return static_cast<std::size_t>(it - table.header.begin());
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.index(i)]);
  }
}

// Splits `rows` into consecutive blocks sized by `shares` (floor of the
// proportional size, leftovers handed out round-robin from agent 0).
std::vector<std::vector<std::size_t>> split_by_shares(
    const std::vector<std::size_t>& rows, std::span<const double> shares) {
  const std::size_t n = shares.size();
  double total = 0.0;
  for (double s : shares) total += s;
  std::vector<std::size_t> sizes(n);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sizes[k] = static_cast<std::size_t>(
        std::floor(static_cast<double>(rows.size()) * shares[k] / total));
    assigned += sizes[k];
  }
  for (std::size_t k = 0; assigned < rows.size(); k = (k + 1) % n) {
    if (shares[k] > 0.0) {
      ++sizes[k];
      ++assigned;
    }
  }
  std::vector<std::vector<std::size_t>> out(n);
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < n; ++k) {
    out[k].assign(rows.begin() + static_cast<std::ptrdiff_t>(cursor),
                  rows.begin() + static_cast<std::ptrdiff_t>(cursor + sizes[k]));
    cursor += sizes[k];
  }
  return out;
}

}  // namespace

CsvDataset load_csv_dataset(std::istream& in, const std::string& label_column,
                            double train_fraction, std::size_t n_agents,
                            const PartitionSpec& partition, std::uint64_t seed) {
  if (n_agents == 0) throw ConfigError("scenario.agents", "must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("scenario.train_fraction", "must lie in (0, 1]");
  }
  if (!partition.shares.empty() && partition.shares.size() != n_agents) {
    throw ConfigError("scenario.shares", "needs one entry per agent");
  }
  for (double s : partition.shares) {
    if (!(s >= 0.0)) throw ConfigError("scenario.shares", "entries must be >= 0");
  }
  if (!partition.data_fraction.empty() && partition.data_fraction.size() != n_agents) {
    throw ConfigError("scenario.data_fraction", "needs one entry per agent");
  }

  const CsvTable table = read_csv(in);
  const std::size_t label_col = column_index(table, label_column, "scenario.label_column");
  std::optional<std::size_t> agent_col;
  if (partition.agent_column) {
    agent_col = column_index(table, *partition.agent_column, "scenario.agent_column");
  }

  CsvDataset data;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != label_col && c != agent_col) data.feature_names.push_back(table.header[c]);
  }
  if (data.feature_names.empty()) throw ParseError("csv: no feature columns", 1);

  double max_label = -1.0;
  data.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const double label = row[label_col];
    if (label < 0.0 || label != std::floor(label)) {
      throw ParseError("csv: label must be a non-negative integer", table.lines[r]);
    }
    Sample s;
    s.x.resize(static_cast<Eigen::Index>(data.feature_names.size()));
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c != label_col && c != agent_col) s.x[j++] = row[c];
    }
    s.y = label;
    max_label = std::max(max_label, label);
    data.rows.push_back(std::move(s));
  }
  if (data.rows.empty()) throw ParseError("csv: no data rows", 0);
  data.num_classes = std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);

  Rng rng = make_stream(seed, 0, 0, StreamPurpose::kPartition);
  const auto train_count = [train_fraction](std::size_t n) {
    return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  };

  std::vector<std::vector<std::size_t>> train(n_agents);
  std::vector<std::vector<std::size_t>> test(n_agents);
  if (agent_col) {
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      groups[table.rows[r][*agent_col]].push_back(r);
    }
    if (groups.size() != n_agents) {
      throw ConfigError("scenario.agents",
                        "agent column has " + std::to_string(groups.size()) +
                            " distinct values, expected " + std::to_string(n_agents));
    }
    std::size_t k = 0;
    for (auto& [key, rows] : groups) {
      shuffle(rows, rng);
      const std::size_t cut = train_count(rows.size());
      train[k].assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cut));
      test[k].assign(rows.begin() + static_cast<std::ptrdiff_t>(cut), rows.end());
      ++k;
    }
  } else {
    std::vector<std::size_t> order(table.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    const std::size_t cut = train_count(order.size());
    const std::vector<std::size_t> train_rows(order.begin(),
                                              order.begin() + static_cast<std::ptrdiff_t>(cut));
    const std::vector<std::size_t> test_rows(order.begin() + static_cast<std::ptrdiff_t>(cut),
                                             order.end());
    const std::vector<double> uniform(n_agents, 1.0);
    train = split_by_shares(train_rows, partition.shares.empty()
                                            ? std::span<const double>(uniform)
                                            : std::span<const double>(partition.shares));
    test = split_by_shares(test_rows, uniform);
  }

  for (std::size_t k = 0; k < n_agents; ++k) {
    if (train[k].empty()) {
      throw ConfigError("scenario.shares",
                        "agent " + std::to_string(k) + " received no training rows");
    }
    if (!partition.data_fraction.empty()) {
      const double f = partition.data_fraction[k];
      if (!(f > 0.0 && f <= 1.0)) {
        throw ConfigError("scenario.data_fraction", "entries must lie in (0, 1]");
      }
      const auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(f * static_cast<double>(train[k].size()))));
      train[k].resize(keep);
    }
  }
  data.train_rows = std::move(train);
  data.test_rows = std::move(test);
  return data;
}

CsvDataset load_csv_dataset(const std::filesystem::path& path,
                            const std::string& label_column,
                            double train_fraction, std::size_t n_agents,
                            const PartitionSpec& partition, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV file " + path.string(), 0);
  return load_csv_dataset(in, label_column, train_fraction, n_agents, partition, seed);
}

CsvClassificationScenario::CsvClassificationScenario(CsvDataset data)
    : data_(std::move(data)),
      loss_(std::make_shared<SoftmaxLoss>(data_.num_classes, data_.feature_names.size())) {
  test_sets_.resize(data_.num_agents());
  for (std::size_t k = 0; k < data_.num_agents(); ++k) {
    for (std::size_t r : data_.test_rows[k]) test_sets_[k].push_back(data_.rows[r]);
  }
}

void CsvClassificationScenario::draw_batch(AgentId k, Rng& rng, std::size_t size,
                                           std::vector<Sample>& out) const {
  const auto& rows = data_.train_rows.at(k);
  for (std::size_t i = 0; i < size; ++i) {
    out.push_back(data_.rows[rows[rng.index(rows.size())]]);
  }
}

double accuracy(const SoftmaxLoss& model, const ModelParams& theta,
                std::span<const Sample> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (const auto& s : samples) {
    if (static_cast<double>(model.predict(theta, s.x)) == s.y) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace bdmtl
