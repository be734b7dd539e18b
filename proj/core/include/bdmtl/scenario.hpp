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

#ifndef BDMTL_SCENARIO_HPP_
#define BDMTL_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdmtl/models.hpp"
#include "bdmtl/oracle.hpp"
#include "bdmtl/rng.hpp"
#include "bdmtl/topology.hpp"

namespace bdmtl {

// Data source and task definition for every agent of a simulation.
// Implementations are immutable and safe to query from several threads.
class Scenario {
 public:
  virtual ~Scenario() = default;

  virtual std::string_view name() const = 0;
  virtual std::size_t num_agents() const = 0;
  virtual std::size_t model_dim() const = 0;
  virtual std::shared_ptr<const LossModel> loss_model(AgentId k) const = 0;

  // Appends `size` fresh samples of agent k's data distribution to `out`.
  virtual void draw_batch(AgentId k, Rng& rng, std::size_t size,
                          std::vector<Sample>& out) const = 0;

  virtual ModelParams initial_model(AgentId) const {
    return ModelParams::Zero(static_cast<Eigen::Index>(model_dim()));
  }

  // Minimizer of agent k's expected risk, when known.
  virtual std::optional<ModelParams> optimum(AgentId) const { return {}; }

  virtual bool has_exact_risk() const { return false; }
  // Expected loss r_k(theta); only valid when has_exact_risk().
  virtual double exact_risk(AgentId, const ModelParams&) const { return 0.0; }

  virtual std::optional<ConvexityProfile> profile(AgentId) const { return {}; }

  // Held-out samples of agent k, empty when the scenario has no test split.
  virtual std::span<const Sample> test_set(AgentId) const { return {}; }
  virtual bool classification() const { return false; }

  // Spatial layout of the agents, when the scenario has one.
  virtual std::optional<std::vector<Point2>> positions() const { return {}; }
};

// ---- target localization -----------------------------------------------------

struct LocalizationParams {
  std::size_t n_agents = 100;
  std::uint64_t seed = 0;
  std::vector<Point2> targets = {
      {10.84, 10.76}, {20.42, 20.26}, {20.51, 10.40}, {10.78, 20.30}};
  double region_lo = 5.0;
  double region_hi = 25.0;
  double sigma_d2_lo = 0.1;
  double sigma_d2_hi = 0.2;
  double sigma_u2_lo = 0.01;
  double sigma_u2_hi = 0.1;
  // Overrides the sampled agent positions when set.
  std::optional<std::vector<Point2>> positions;
};

// Agents at fixed positions estimate the location of their nearest target
// from streaming noisy range and bearing observations:
//   d = |t - x_k| + N(0, sigma_d2_k),   u = unit(t - x_k) + N(0, sigma_u2_k I).
// The direction noise is additive and not renormalized.
class LocalizationScenario final : public Scenario {
 public:
  explicit LocalizationScenario(LocalizationParams params);

  std::string_view name() const override { return "localization"; }
  std::size_t num_agents() const override { return positions_.size(); }
  std::size_t model_dim() const override { return 2; }
  std::shared_ptr<const LossModel> loss_model(AgentId k) const override;
  void draw_batch(AgentId k, Rng& rng, std::size_t size,
                  std::vector<Sample>& out) const override;

  // Risk minimizer x_k + |t - x_k| / (1 + sigma_u2_k) unit(t - x_k); the
  // additive direction noise shrinks it toward the agent.
  std::optional<ModelParams> optimum(AgentId k) const override;
  bool has_exact_risk() const override { return true; }
  // (D - e^T u0)^2 + sigma_d2 + sigma_u2 |e|^2 with e = theta - x_k.
  double exact_risk(AgentId k, const ModelParams& theta) const override;
  std::optional<std::vector<Point2>> positions() const override {
    return positions_;
  }

  const std::vector<Point2>& targets() const { return targets_; }
  std::size_t target_of(AgentId k) const { return assignment_.at(k); }
  double sigma_d2(AgentId k) const { return sigma_d2_.at(k); }
  double sigma_u2(AgentId k) const { return sigma_u2_.at(k); }
  // Noiseless range |t - x_k|.
  double true_distance(AgentId k) const;

 private:
  Eigen::Vector2d direction(AgentId k) const;

  std::vector<Point2> targets_;
  std::vector<Point2> positions_;
  std::vector<std::size_t> assignment_;
  std::vector<double> sigma_d2_;
  std::vector<double> sigma_u2_;
  std::vector<std::shared_ptr<const LocalizationLoss>> losses_;
};

// ---- clustered quadratic regression ------------------------------------------

struct QuadraticParams {
  std::size_t n_agents = 1;
  std::size_t n_clusters = 1;
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Identity(2, 2);
  double sigma2 = 0.0;
  // Cluster optima are center + spread * U[-1, 1]^d.
  double spread = 0.0;
  Eigen::VectorXd center;  // defaults to zero
  std::uint64_t seed = 0;
};

// Analytic test bed: agents in cluster c share the optimum theta*_c and the
// quadratic loss of QuadraticLoss, so m, L, sigma2 and exact risks are known.
// Agents are assigned to clusters in contiguous blocks.
class QuadraticScenario final : public Scenario {
 public:
  // Throws InvalidSpec for a non-PD Hessian or bad counts.
  explicit QuadraticScenario(QuadraticParams params);

  std::string_view name() const override { return "quadratic"; }
  std::size_t num_agents() const override { return params_.n_agents; }
  std::size_t model_dim() const override { return loss_->dim(); }
  std::shared_ptr<const LossModel> loss_model(AgentId) const override {
    return loss_;
  }
  void draw_batch(AgentId k, Rng& rng, std::size_t size,
                  std::vector<Sample>& out) const override;
  std::optional<ModelParams> optimum(AgentId k) const override {
    return centers_.at(cluster_of(k));
  }
  bool has_exact_risk() const override { return true; }
  double exact_risk(AgentId k, const ModelParams& theta) const override;
  std::optional<ConvexityProfile> profile(AgentId) const override;

  std::size_t cluster_of(AgentId k) const;
  const QuadraticLoss& quadratic() const { return *loss_; }
  double excess_risk(AgentId k, const ModelParams& theta) const;

 private:
  QuadraticParams params_;
  std::shared_ptr<const QuadraticLoss> loss_;
  std::vector<ModelParams> centers_;
};

// ---- CSV classification ------------------------------------------------------

// Raw numeric table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
};

// Throws ParseError (with the 1-based line) on missing header, ragged or
// non-numeric rows.
CsvTable read_csv(std::istream& in);

struct PartitionSpec {
  // Relative share of training rows per agent; empty means uniform.
  std::vector<double> shares;
  // Fraction of its partition an agent may train on; empty means 1 for all.
  // An agent with fraction f and partition size p uses floor(f p) rows
  // (at least one).
  std::vector<double> data_fraction;
  // When set, rows are grouped into agents by this column's value (sorted)
  // and split into train/test per agent; `shares` is then ignored.
  std::optional<std::string> agent_column;
};

struct CsvDataset {
  std::vector<std::string> feature_names;
  std::vector<Sample> rows;  // features in x, class index in y
  std::size_t num_classes = 0;
  std::vector<std::vector<std::size_t>> train_rows;  // per agent, usable rows
  std::vector<std::vector<std::size_t>> test_rows;   // per agent

  std::size_t num_agents() const { return train_rows.size(); }
};

// Shuffles rows with `seed`, keeps floor(train_fraction * N) for training
// and partitions train and test rows across `n_agents`. Throws ParseError for
// malformed rows or non-integral labels and ConfigError when the label
// column is missing.
CsvDataset load_csv_dataset(std::istream& in, const std::string& label_column,
                            double train_fraction, std::size_t n_agents,
                            const PartitionSpec& partition, std::uint64_t seed);
CsvDataset load_csv_dataset(const std::filesystem::path& path,
                            const std::string& label_column,
                            double train_fraction, std::size_t n_agents,
                            const PartitionSpec& partition, std::uint64_t seed);

// Softmax regression per agent over a CsvDataset. Training batches are drawn
// uniformly with replacement from the agent's usable rows.
class CsvClassificationScenario final : public Scenario {
 public:
  explicit CsvClassificationScenario(CsvDataset data);

  std::string_view name() const override { return "csv-classification"; }
  std::size_t num_agents() const override { return data_.num_agents(); }
  std::size_t model_dim() const override { return loss_->dim(); }
  std::shared_ptr<const LossModel> loss_model(AgentId) const override {
    return loss_;
  }
  void draw_batch(AgentId k, Rng& rng, std::size_t size,
                  std::vector<Sample>& out) const override;
  std::span<const Sample> test_set(AgentId k) const override {
    return test_sets_.at(k);
  }
  bool classification() const override { return true; }

  const CsvDataset& data() const { return data_; }
  const SoftmaxLoss& softmax() const { return *loss_; }

 private:
  CsvDataset data_;
  std::shared_ptr<const SoftmaxLoss> loss_;
  std::vector<std::vector<Sample>> test_sets_;
};

// Fraction of `samples` whose arg-max prediction equals the label.
double accuracy(const SoftmaxLoss& model, const ModelParams& theta,
                std::span<const Sample> samples);

}  // namespace bdmtl

#endif  // BDMTL_SCENARIO_HPP_
