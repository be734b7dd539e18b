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

#ifndef BDMTL_IO_HPP_
#define BDMTL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdmtl/engine.hpp"

namespace bdmtl {

inline constexpr std::string_view kMetricsHeader =
    "round,agent,rule,train_loss,ema_loss,test_loss,accuracy,dist_to_opt";
inline constexpr std::string_view kWeightsHeader = "round,agent,neighbor,weight";

// Shortest round-trip decimal form of a double.
std::string format_number(double v);

// Header followed by one row per record; absent optionals are empty fields.
void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records);

// One row per (record, neighbor) for records carrying weights.
void write_weights_csv(std::ostream& out, std::span<const MetricsRecord> records);

// Final models as text: one line per agent, "agent v0 v1 ...".
// Byzantine agents (no model) are omitted.
void write_models(std::ostream& out,
                  std::span<const std::optional<ModelParams>> models);

// Parsed metrics row; the weights column set is not round-tripped.
struct MetricsRow {
  std::size_t round = 0;
  AgentId agent = 0;
  std::string rule;
  double train_loss = 0.0;
  double ema_loss = 0.0;
  std::optional<double> test_loss;
  std::optional<double> accuracy;
  std::optional<double> dist_to_opt;
};

// Throws ParseError (1-based line) on a wrong header or malformed row.
std::vector<MetricsRow> read_metrics_csv(std::istream& in);
std::vector<MetricsRow> load_metrics_csv(const std::filesystem::path& path);

// SHA-1 of "blob <size>\0<content>", as computed by `git hash-object`.
std::string git_blob_hash(std::string_view content);

struct RunManifest {
  std::string config;  // canonical serialized configuration
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started_at;
  std::optional<std::string> finished_at;
  std::optional<std::string> status;
};

// Current UTC time as an ISO-8601 string with second resolution.
std::string utc_timestamp();

std::string manifest_json(const RunManifest& manifest);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
// Throws ParseError on malformed JSON or missing fields.
RunManifest read_manifest(const std::filesystem::path& path);

// Mean of train_loss over normal agents in the last `tail_fraction` of
// rounds (at least the final round). Rows may come from any rule mix;
// `rule` filters when non-empty. Returns nullopt when nothing matches.
struct FinalLoss {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};
std::optional<FinalLoss> final_loss(std::span<const MetricsRow> rows,
                                    double tail_fraction = 0.1,
                                    std::string_view rule = {});

// Long-format aggregation of one metric per (round, rule) over agents.
struct LongRow {
  std::size_t round = 0;
  std::string rule;
  std::string metric;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};
// `metric` is a metrics column name other than round, agent and rule.
// Throws ConfigError for unknown metric names.
std::vector<LongRow> aggregate_long(std::span<const MetricsRow> rows,
                                    const std::string& metric);
void write_long_csv(std::ostream& out, std::span<const LongRow> rows);

// Converts engine records to rows (the rule becomes its config name).
std::vector<MetricsRow> to_rows(std::span<const MetricsRecord> records);

}  // namespace bdmtl

#endif  // BDMTL_IO_HPP_
