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

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "bdmtl/config.hpp"
#include "bdmtl/engine.hpp"
#include "bdmtl/error.hpp"
#include "bdmtl/io.hpp"
#include "bdmtl/oracle.hpp"

namespace bdmtl::cli {

namespace {

// Configuration keys holding file paths; stored absolute in manifests.
constexpr const char* kPathKeys[] = {"scenario.path", "topology.edges"};

struct LoadedConfig {
  ConfigDocument doc;
  std::filesystem::path base_dir;
};

LoadedConfig load_config(const std::filesystem::path& path,
                         const std::vector<std::string>& overrides,
                         std::optional<std::uint64_t> seed) {
  LoadedConfig loaded;
  loaded.base_dir = std::filesystem::absolute(path).parent_path();
  if (path.extension() == ".json") {
    loaded.doc = ConfigDocument::parse_string(read_manifest(path).config);
  } else {
    loaded.doc = ConfigDocument::load(path);
  }
  for (const auto& o : overrides) loaded.doc.set(o);
  if (seed) loaded.doc.set("engine.seed", std::to_string(*seed));
  for (const char* key : kPathKeys) {
    if (!loaded.doc.has(key)) continue;
    std::filesystem::path p = loaded.doc.find_string(key).value();
    if (p.is_relative()) p = loaded.base_dir / p;
    loaded.doc.set(key, "\"" + p.lexically_normal().string() + "\"");
  }
  return loaded;
}

// A fresh document so that unused-key tracking starts empty.
SimulationSetup setup_from(const LoadedConfig& loaded, std::optional<std::size_t> workers) {
  const ConfigDocument doc = ConfigDocument::parse_string(loaded.doc.serialize());
  SimulationSetup setup = build_setup(doc, loaded.base_dir);
  if (workers) setup.options.workers = std::max<std::size_t>(1, *workers);
  return setup;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

bool is_config_error(const std::exception& e) {
  return dynamic_cast<const ConfigError*>(&e) != nullptr ||
         dynamic_cast<const ParseError*>(&e) != nullptr ||
         dynamic_cast<const InvalidSpec*>(&e) != nullptr;
}

void report_agent_errors(const std::vector<AgentError>& errors, std::ostream& err) {
  const std::size_t shown = std::min<std::size_t>(errors.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    fmt::print(err, "warning: round {} agent {}: {}\n", errors[i].round, errors[i].agent,
               errors[i].message);
  }
  if (errors.size() > shown) {
    fmt::print(err, "warning: {} further agent errors suppressed\n", errors.size() - shown);
  }
}

}  // namespace

int run_command(const RunRequest& request, std::ostream& out, std::ostream& err) {
  LoadedConfig loaded;
  SimulationSetup setup;
  try {
    loaded = load_config(request.config, request.overrides, request.seed);
    setup = setup_from(loaded, request.workers);
  } catch (const std::exception& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  }

  const auto manifest_path = request.out_dir / "manifest.json";
  RunManifest manifest;
  try {
    std::filesystem::create_directories(request.out_dir);
    manifest.config = loaded.doc.serialize();
    manifest.config_hash = git_blob_hash(manifest.config);
    manifest.seed = setup.options.seed;
    manifest.started_at = utc_timestamp();
    write_manifest(manifest_path, manifest);

    const bool weights = setup.options.record_weights;
    const SimulationResult result = run_simulation(std::move(setup));
    report_agent_errors(result.errors, err);

    std::ostringstream metrics;
    write_metrics_csv(metrics, result.metrics);
    write_file(request.out_dir / "metrics.csv", metrics.str());
    std::ostringstream models;
    write_models(models, result.final_models);
    write_file(request.out_dir / "models.txt", models.str());
    if (weights) {
      std::ostringstream w;
      write_weights_csv(w, result.metrics);
      write_file(request.out_dir / "weights.csv", w.str());
    }

    manifest.finished_at = utc_timestamp();
    manifest.status = "ok";
    write_manifest(manifest_path, manifest);
    const auto rows = to_rows(result.metrics);
    const auto summary = final_loss(rows);
    fmt::print(out, "wrote {} metric rows to {}", result.metrics.size(),
               request.out_dir.string());
    if (summary) fmt::print(out, " (final loss mean {:.6g})", summary->mean);
    fmt::print(out, "\nconfig hash {}\n", manifest.config_hash);
    return kExitOk;
  } catch (const std::exception& e) {
    fmt::print(err, "runtime error: {}\n", e.what());
    try {
      manifest.finished_at = utc_timestamp();
      manifest.status = std::string("failed: ") + e.what();
      if (!manifest.started_at.empty()) write_manifest(manifest_path, manifest);
    } catch (const std::exception&) {
      // The primary failure is already reported.
    }
    return kExitRuntime;
  }
}

int verify_command(const VerifyRequest& request, std::ostream& out, std::ostream& err) {
  static const std::vector<std::string> kKnown = {"qp", "lemma1", "gradients",
                                                  "convexity"};
  std::vector<std::string> selected;
  for (const auto& s : request.suites.empty() ? std::vector<std::string>{"all"}
                                              : request.suites) {
    if (s == "all") {
      selected = kKnown;
      break;
    }
    if (std::find(kKnown.begin(), kKnown.end(), s) == kKnown.end()) {
      fmt::print(err, "unknown suite '{}' (expected qp, lemma1, gradients, convexity or all)\n",
                 s);
      return kExitConfig;
    }
    if (std::find(selected.begin(), selected.end(), s) == selected.end()) {
      selected.push_back(s);
    }
  }

  std::vector<SuiteReport> reports;
  for (const auto& s : selected) {
    if (s == "qp") reports.push_back(verify_qp_suite(request.seed));
    if (s == "lemma1") reports.push_back(verify_lemma1_suite(request.seed));
    if (s == "convexity") reports.push_back(verify_convexity_suite(request.seed));
    if (s == "gradients") {
      for (auto& r : verify_gradient_suites(request.seed)) reports.push_back(std::move(r));
    }
  }
  bool all_ok = true;
  fmt::print(out, "{:<24} {:>13}  {:<6} {}\n", "check", "passed", "status", "detail");
  for (const auto& r : reports) {
    all_ok = all_ok && r.ok();
    fmt::print(out, "{:<24} {:>13}  {:<6} {}\n", r.name,
               fmt::format("{}/{}", r.passed, r.total), r.ok() ? "PASS" : "FAIL", r.detail);
  }
  return all_ok ? kExitOk : kExitVerifyFailed;
}

int sweep_command(const SweepRequest& request, std::ostream& out, std::ostream& err) {
  if (request.values.empty()) {
    fmt::print(err, "config error: sweep needs at least one value\n");
    return kExitConfig;
  }
  if (request.seeds == 0) {
    fmt::print(err, "config error: sweep needs at least one seed\n");
    return kExitConfig;
  }
  LoadedConfig base;
  try {
    base = load_config(request.config, request.overrides, std::nullopt);
    // Validate the parameter against the base document before fanning out.
    auto probe = base;
    probe.doc.set(request.param, request.values.front());
    (void)setup_from(probe, 1);
  } catch (const std::exception& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  }

  struct Cell {
    std::string value;
    std::uint64_t seed = 0;
    int status = kExitOk;
    std::string message;
    std::optional<FinalLoss> loss;
    std::size_t agent_errors = 0;
  };
  std::vector<Cell> cells;
  for (const auto& v : request.values) {
    for (std::size_t s = 0; s < request.seeds; ++s) {
      cells.push_back(Cell{v, request.first_seed + s});
    }
  }

  try {
    std::filesystem::create_directories(request.out_dir);
  } catch (const std::exception& e) {
    fmt::print(err, "runtime error: {}\n", e.what());
    return kExitRuntime;
  }

  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Cell& cell = cells[i];
      try {
        LoadedConfig loaded = base;
        loaded.doc.set(request.param, cell.value);
        loaded.doc.set("engine.seed", std::to_string(cell.seed));
        const SimulationResult result = run_simulation(setup_from(loaded, 1));
        const auto rows = to_rows(result.metrics);
        cell.loss = final_loss(rows, request.tail_fraction);
        cell.agent_errors = result.errors.size();
        if (request.keep_metrics) {
          const auto dir = request.out_dir / fmt::format("cell_{:04}", i);
          std::filesystem::create_directories(dir);
          std::ostringstream metrics;
          write_metrics_csv(metrics, result.metrics);
          write_file(dir / "metrics.csv", metrics.str());
          write_file(dir / "config.txt", loaded.doc.serialize());
        }
      } catch (const std::exception& e) {
        cell.status = is_config_error(e) ? kExitConfig : kExitRuntime;
        cell.message = e.what();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(request.workers, 1, cells.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }

  int exit_code = kExitOk;
  std::ostringstream summary;
  summary << "param,value,seed,status,final_loss_mean,final_loss_min,final_loss_max,"
             "agent_errors\n";
  const auto csv_escape = [](const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& c : cells) {
    const char* status = c.status == kExitOk ? "ok"
                         : c.status == kExitConfig ? "config-error"
                                                   : "runtime-error";
    summary << fmt::format("{},{},{},{},{},{},{},{}\n", csv_escape(request.param),
                           csv_escape(c.value), c.seed, status,
                           c.loss ? format_number(c.loss->mean) : "",
                           c.loss ? format_number(c.loss->min) : "",
                           c.loss ? format_number(c.loss->max) : "", c.agent_errors);
    if (c.status != kExitOk) {
      fmt::print(err, "cell {}={} seed {} failed: {}\n", request.param, c.value, c.seed,
                 c.message);
      exit_code = std::max(exit_code, c.status);
    }
  }
  try {
    write_file(request.out_dir / "summary.csv", summary.str());
  } catch (const std::exception& e) {
    fmt::print(err, "runtime error: {}\n", e.what());
    return kExitRuntime;
  }
  fmt::print(out, "{} cells, summary in {}\n", cells.size(),
             (request.out_dir / "summary.csv").string());
  return exit_code;
}

int plot_data_command(const PlotDataRequest& request, std::ostream& out,
                      std::ostream& err) {
  if (request.inputs.empty()) {
    fmt::print(err, "config error: plot-data needs at least one metrics file\n");
    return kExitConfig;
  }
  std::vector<MetricsRow> rows;
  try {
    for (const auto& path : request.inputs) {
      auto part = load_metrics_csv(path);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  } catch (const ParseError& e) {
    fmt::print(err, "input error: {} (line {})\n", e.what(), e.line());
    return kExitConfig;
  }
  std::vector<LongRow> table;
  try {
    for (const auto& m : request.metrics) {
      auto part = aggregate_long(rows, m);
      table.insert(table.end(), part.begin(), part.end());
    }
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  }
  try {
    if (request.output) {
      std::ostringstream buffer;
      write_long_csv(buffer, table);
      write_file(*request.output, buffer.str());
    } else {
      write_long_csv(out, table);
    }
  } catch (const std::exception& e) {
    fmt::print(err, "runtime error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace bdmtl::cli
