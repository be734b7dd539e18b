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

#include "bdmtl/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bdmtl/error.hpp"

namespace bdmtl {

namespace {

std::string optional_field(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line, const char* column) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ParseError(fmt::format("metrics: bad {} value '{}'", column, s), line);
  }
  return v;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line,
                                     const char* column) {
  if (s.empty()) return std::nullopt;
  return parse_number(s, line, column);
}

std::size_t parse_index(const std::string& s, std::size_t line, const char* column) {
  const double v = parse_number(s, line, column);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ParseError(fmt::format("metrics: {} must be a non-negative integer", column),
                     line);
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string format_number(double v) { return fmt::format("{}", v); }

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records) {
  out << kMetricsHeader << '\n';
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{},{},{},{},{}\n", r.round, r.agent, to_string(r.rule),
                       format_number(r.train_loss), format_number(r.ema_loss),
                       optional_field(r.test_loss), optional_field(r.accuracy),
                       optional_field(r.dist_to_opt));
  }
}

void write_weights_csv(std::ostream& out, std::span<const MetricsRecord> records) {
  out << kWeightsHeader << '\n';
  for (const auto& r : records) {
    if (!r.weights) continue;
    const auto ids = r.weights->ids();
    const auto weights = r.weights->weights();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out << fmt::format("{},{},{},{}\n", r.round, r.agent, ids[i],
                         format_number(weights[i]));
    }
  }
}

void write_models(std::ostream& out,
                  std::span<const std::optional<ModelParams>> models) {
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (!models[k]) continue;
    out << k;
    for (double v : *models[k]) out << ' ' << format_number(v);
    out << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw ParseError("metrics: missing or unexpected header", 1);
  }
  std::vector<MetricsRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 8) {
      throw ParseError(fmt::format("metrics: expected 8 fields, got {}", f.size()), number);
    }
    MetricsRow row;
    row.round = parse_index(f[0], number, "round");
    row.agent = parse_index(f[1], number, "agent");
    row.rule = f[2];
    row.train_loss = parse_number(f[3], number, "train_loss");
    row.ema_loss = parse_number(f[4], number, "ema_loss");
    row.test_loss = parse_optional(f[5], number, "test_loss");
    row.accuracy = parse_optional(f[6], number, "accuracy");
    row.dist_to_opt = parse_optional(f[7], number, "dist_to_opt");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<MetricsRow> load_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open metrics file " + path.string(), 0);
  return read_metrics_csv(in);
}

std::string git_blob_hash(std::string_view content) {
  const std::string header = fmt::format("blob {}", content.size());
  const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                   &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  // The header is hashed with its terminating NUL.
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.c_str(), header.size() + 1) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw Error("SHA-1 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["config"] = m.config;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at ? nlohmann::ordered_json(*m.finished_at) : nlohmann::ordered_json(nullptr);
  j["status"] = m.status ? nlohmann::ordered_json(*m.status) : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << manifest_json(manifest);
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest " + path.string(), 0);
  try {
    const auto j = nlohmann::json::parse(in);
    RunManifest m;
    m.config = j.at("config").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.started_at = j.at("started_at").get<std::string>();
    if (j.contains("finished_at") && !j["finished_at"].is_null()) {
      m.finished_at = j["finished_at"].get<std::string>();
    }
    if (j.contains("status") && !j["status"].is_null()) {
      m.status = j["status"].get<std::string>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0);
  }
}

std::optional<FinalLoss> final_loss(std::span<const MetricsRow> rows,
                                    double tail_fraction, std::string_view rule) {
  std::size_t last_round = 0;
  for (const auto& r : rows) {
    if (rule.empty() || r.rule == rule) last_round = std::max(last_round, r.round);
  }
  if (last_round == 0) return std::nullopt;
  const auto tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(tail_fraction * static_cast<double>(last_round)));
  const std::size_t first = last_round - std::min(tail, last_round) + 1;

  std::map<AgentId, std::pair<double, std::size_t>> per_agent;
  for (const auto& r : rows) {
    if (r.round < first || (!rule.empty() && r.rule != rule)) continue;
    auto& [sum, count] = per_agent[r.agent];
    sum += r.train_loss;
    ++count;
  }
  if (per_agent.empty()) return std::nullopt;
  FinalLoss out{0.0, std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
  for (const auto& [agent, acc] : per_agent) {
    const double v = acc.first / static_cast<double>(acc.second);
    out.mean += v;
    out.min = std::min(out.min, v);
    out.max = std::max(out.max, v);
  }
  out.mean /= static_cast<double>(per_agent.size());
  return out;
}

std::vector<LongRow> aggregate_long(std::span<const MetricsRow> rows,
                                    const std::string& metric) {
  using Getter = std::optional<double> (*)(const MetricsRow&);
  static const std::map<std::string, Getter> getters = {
      {"train_loss", [](const MetricsRow& r) { return std::optional(r.train_loss); }},
      {"ema_loss", [](const MetricsRow& r) { return std::optional(r.ema_loss); }},
      {"test_loss", [](const MetricsRow& r) { return r.test_loss; }},
      {"accuracy", [](const MetricsRow& r) { return r.accuracy; }},
      {"dist_to_opt", [](const MetricsRow& r) { return r.dist_to_opt; }},
  };
  const auto it = getters.find(metric);
  if (it == getters.end()) {
    throw ConfigError("metric", "unknown metric '" + metric +
                                    "' (expected train_loss, ema_loss, test_loss, "
                                    "accuracy or dist_to_opt)");
  }
  std::map<std::pair<std::size_t, std::string>, LongRow> cells;
  for (const auto& r : rows) {
    const auto v = it->second(r);
    if (!v) continue;
    auto [cell, fresh] = cells.try_emplace({r.round, r.rule});
    LongRow& row = cell->second;
    if (fresh) {
      row = LongRow{r.round, r.rule, metric, 0.0, *v, *v, 0};
    }
    row.mean += *v;
    row.min = std::min(row.min, *v);
    row.max = std::max(row.max, *v);
    ++row.count;
  }
  std::vector<LongRow> out;
  out.reserve(cells.size());
  for (auto& [key, row] : cells) {
    row.mean /= static_cast<double>(row.count);
    out.push_back(std::move(row));
  }
  return out;
}

void write_long_csv(std::ostream& out, std::span<const LongRow> rows) {
  out << "round,rule,metric,mean,min,max,count\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{}\n", r.round, r.rule, r.metric,
                       format_number(r.mean), format_number(r.min),
                       format_number(r.max), r.count);
  }
}

std::vector<MetricsRow> to_rows(std::span<const MetricsRecord> records) {
  std::vector<MetricsRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    rows.push_back(MetricsRow{r.round, r.agent, std::string(to_string(r.rule)),
                              r.train_loss, r.ema_loss, r.test_loss, r.accuracy,
                              r.dist_to_opt});
  }
  return rows;
}

}  // namespace bdmtl
