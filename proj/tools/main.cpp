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

#include <iostream>

#include <CLI11.hpp>

#include "bdmtl/config.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace bdmtl::cli;
  CLI::App app{"Byzantine-resilient decentralized multi-task learning simulator"};
  app.require_subcommand(1);

  RunRequest run;
  std::uint64_t run_seed = 0;
  std::size_t run_workers = 0;
  auto* run_cmd = app.add_subcommand("run", "Run one simulation from a config or manifest");
  run_cmd->add_option("config", run.config, "Config file or manifest.json")->required();
  run_cmd->add_option("-o,--out", run.out_dir, "Output directory");
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Override engine.seed");
  run_cmd->add_option("--set", run.overrides, "Override a key, e.g. engine.rounds=50");
  auto* workers_opt =
      run_cmd->add_option("-j,--workers", run_workers, "Worker threads")->check(CLI::PositiveNumber);

  VerifyRequest verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run numerical oracle suites");
  verify_cmd->add_option("suites", verify.suites, "qp, lemma1, gradients, convexity or all");
  verify_cmd->add_option("--seed", verify.seed, "Seed for random instances");

  SweepRequest sweep;
  sweep.workers = bdmtl::default_workers();
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep over seeds");
  sweep_cmd->add_option("config", sweep.config, "Base config file")->required();
  sweep_cmd->add_option("-p,--param", sweep.param, "Config key to vary")->required();
  sweep_cmd->add_option("-v,--values", sweep.values, "Values for the key")->delimiter(',');
  sweep_cmd->add_option("-s,--seeds", sweep.seeds, "Number of seeds per value");
  sweep_cmd->add_option("--first-seed", sweep.first_seed, "First seed");
  sweep_cmd->add_option("--set", sweep.overrides, "Override a base key");
  sweep_cmd->add_option("-j,--workers", sweep.workers, "Cells run in parallel")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--tail", sweep.tail_fraction, "Fraction of rounds averaged")
      ->check(CLI::Range(0.0, 1.0));
  sweep_cmd->add_option("-o,--out", sweep.out_dir, "Output directory");
  sweep_cmd->add_flag("--keep-metrics", sweep.keep_metrics, "Keep per-cell metrics CSVs");

  PlotDataRequest plot;
  std::string plot_output;
  auto* plot_cmd = app.add_subcommand("plot-data", "Aggregate metrics into long-format CSV");
  plot_cmd->add_option("inputs", plot.inputs, "Metrics CSV files")->required();
  plot_cmd->add_option("-m,--metric", plot.metrics, "Metric columns")->delimiter(',');
  auto* plot_out = plot_cmd->add_option("-o,--out", plot_output, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run_cmd->parsed()) {
    if (seed_opt->count() > 0) run.seed = run_seed;
    if (workers_opt->count() > 0) run.workers = run_workers;
    return run_command(run, std::cout, std::cerr);
  }
  if (verify_cmd->parsed()) return verify_command(verify, std::cout, std::cerr);
  if (sweep_cmd->parsed()) {
    return sweep_command(sweep, std::cout, std::cerr);
  }
  if (plot_out->count() > 0) plot.output = plot_output;
  return plot_data_command(plot, std::cout, std::cerr);
}
