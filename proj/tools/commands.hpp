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

#ifndef BDMTL_TOOLS_COMMANDS_HPP_
#define BDMTL_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bdmtl::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitVerifyFailed = 3;

struct RunRequest {
  // A config file, or a manifest.json from an earlier run.
  std::filesystem::path config;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // "key=value"
  std::optional<std::size_t> workers;
};

// Writes manifest.json, metrics.csv, models.txt and, when weights are
// recorded, weights.csv into `out_dir`.
int run_command(const RunRequest& request, std::ostream& out, std::ostream& err);

struct VerifyRequest {
  std::vector<std::string> suites;  // qp, lemma1, gradients, convexity, all
  std::uint64_t seed = 0;
};

int verify_command(const VerifyRequest& request, std::ostream& out, std::ostream& err);

struct SweepRequest {
  std::filesystem::path config;
  std::filesystem::path out_dir = "sweep";
  std::string param;
  std::vector<std::string> values;
  std::size_t seeds = 1;
  std::uint64_t first_seed = 0;
  std::vector<std::string> overrides;
  std::size_t workers = 1;
  double tail_fraction = 0.1;
  bool keep_metrics = false;
};

// Runs every (value, seed) cell and writes summary.csv into `out_dir`.
int sweep_command(const SweepRequest& request, std::ostream& out, std::ostream& err);

struct PlotDataRequest {
  std::vector<std::filesystem::path> inputs;  // metrics CSVs
  std::vector<std::string> metrics = {"train_loss"};
  std::optional<std::filesystem::path> output;  // stdout when unset
};

int plot_data_command(const PlotDataRequest& request, std::ostream& out,
                      std::ostream& err);

}  // namespace bdmtl::cli

#endif  // BDMTL_TOOLS_COMMANDS_HPP_
