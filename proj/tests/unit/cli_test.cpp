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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bdmtl/io.hpp"
#include "commands.hpp"

namespace bdmtl::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bdmtl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text, const std::string& name = "run.cfg") {
    const fs::path path = dir_ / name;
    std::ofstream(path) << text;
    return path;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

constexpr const char* kMinimal =
    "scenario.name = quadratic\nscenario.agents = 1\nscenario.sigma2 = 1\n"
    "weights.rule = none\nengine.rounds = 10\n";

TEST_F(CliTest, MinimalRunWritesArtifacts) {
  const RunRequest req{write_config(kMinimal), dir_ / "out", {}, {}, {}};
  ASSERT_EQ(run_command(req, out_, err_), kExitOk) << err_.str();
  const std::string metrics = slurp(dir_ / "out" / "metrics.csv");
  EXPECT_EQ(count_lines(metrics), 11u);  // header + 10 rounds
  EXPECT_EQ(count_lines(slurp(dir_ / "out" / "models.txt")), 1u);
  const RunManifest m = read_manifest(dir_ / "out" / "manifest.json");
  EXPECT_EQ(m.config_hash, git_blob_hash(m.config));
  EXPECT_EQ(m.status, "ok");
  EXPECT_FALSE(fs::exists(dir_ / "out" / "weights.csv"));
}

TEST_F(CliTest, SeedOverrideIsDeterministic) {
  const fs::path cfg = write_config(kMinimal);
  ASSERT_EQ(run_command({cfg, dir_ / "a", 7, {}, {}}, out_, err_), kExitOk);
  ASSERT_EQ(run_command({cfg, dir_ / "b", 7, {}, {}}, out_, err_), kExitOk);
  ASSERT_EQ(run_command({cfg, dir_ / "c", 8, {}, {}}, out_, err_), kExitOk);
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "models.txt"), slurp(dir_ / "b" / "models.txt"));
  EXPECT_NE(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "c" / "metrics.csv"));
  EXPECT_EQ(read_manifest(dir_ / "a" / "manifest.json").seed, 7u);
}

TEST_F(CliTest, ManifestReplayIsByteIdentical) {
  const RunRequest first{write_config(kMinimal), dir_ / "a", 5, {"engine.record_weights=true"}, {}};
  ASSERT_EQ(run_command(first, out_, err_), kExitOk) << err_.str();
  const RunRequest replay{dir_ / "a" / "manifest.json", dir_ / "b", {}, {}, 3};
  ASSERT_EQ(run_command(replay, out_, err_), kExitOk) << err_.str();
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "weights.csv"), slurp(dir_ / "b" / "weights.csv"));
  EXPECT_EQ(read_manifest(dir_ / "a" / "manifest.json").config_hash,
            read_manifest(dir_ / "b" / "manifest.json").config_hash);
}

TEST_F(CliTest, MissingFieldExitsOneNamingIt) {
  const fs::path cfg = write_config("scenario.name = quadratic\nengine.rounds = 10\n");
  EXPECT_EQ(run_command({cfg, dir_ / "out", {}, {}, {}}, out_, err_), kExitConfig);
  EXPECT_NE(err_.str().find("scenario.agents"), std::string::npos) << err_.str();
}

TEST_F(CliTest, UnreadableConfigExitsOne) {
  EXPECT_EQ(run_command({dir_ / "absent.cfg", dir_ / "out", {}, {}, {}}, out_, err_), kExitConfig);
  const fs::path cfg = write_config("scenario.name quadratic\n");
  EXPECT_EQ(run_command({cfg, dir_ / "out", {}, {}, {}}, out_, err_), kExitConfig);
}

TEST_F(CliTest, VerifyQp) {
  EXPECT_EQ(verify_command({{"qp"}, 1}, out_, err_), kExitOk);
  EXPECT_NE(out_.str().find("100/100"), std::string::npos) << out_.str();
  EXPECT_EQ(verify_command({{"lemma1", "gradients"}, 1}, out_, err_), kExitOk);
  EXPECT_NE(out_.str().find("10000/10000"), std::string::npos) << out_.str();
  EXPECT_EQ(verify_command({{"nonsense"}, 1}, out_, err_), kExitConfig);
}

TEST_F(CliTest, SweepEmptyValuesExitsOne) {
  SweepRequest req;
  req.config = write_config(kMinimal);
  req.out_dir = dir_ / "sweep";
  req.param = "weights.rule";
  EXPECT_EQ(sweep_command(req, out_, err_), kExitConfig);
}

TEST_F(CliTest, SweepRulesBySeeds) {
  SweepRequest req;
  req.config = write_config(
      "scenario.name = quadratic\nscenario.agents = 4\nscenario.sigma2 = 1\n"
      "scenario.clusters = 2\nscenario.spread = 2\nengine.rounds = 20\n");
  req.out_dir = dir_ / "sweep";
  req.param = "weights.rule";
  req.values = {"none", "average", "distance", "filtered-loss"};
  req.seeds = 10;
  req.workers = 4;
  req.keep_metrics = true;
  ASSERT_EQ(sweep_command(req, out_, err_), kExitOk) << err_.str();
  const std::string summary = slurp(dir_ / "sweep" / "summary.csv");
  EXPECT_EQ(count_lines(summary), 41u);
  EXPECT_EQ(summary.substr(0, summary.find('\n')),
            "param,value,seed,status,final_loss_mean,final_loss_min,final_loss_max,agent_errors");
  EXPECT_TRUE(fs::exists(dir_ / "sweep" / "cell_0039" / "metrics.csv"));

  PlotDataRequest plot;
  plot.inputs = {dir_ / "sweep" / "cell_0000" / "metrics.csv",
                 dir_ / "sweep" / "cell_0010" / "metrics.csv"};
  plot.metrics = {"train_loss", "dist_to_opt"};
  plot.output = dir_ / "long.csv";
  ASSERT_EQ(plot_data_command(plot, out_, err_), kExitOk) << err_.str();
  const std::string long_csv = slurp(dir_ / "long.csv");
  EXPECT_EQ(long_csv.substr(0, long_csv.find('\n')), "round,rule,metric,mean,min,max,count");
  // 20 rounds x 2 rules x 2 metrics.
  EXPECT_EQ(count_lines(long_csv), 81u);
}

TEST_F(CliTest, SweepMarksFailedCellsAndContinues) {
  SweepRequest req;
  req.config = write_config(kMinimal);
  req.out_dir = dir_ / "sweep";
  req.param = "agents.mu";
  req.values = {"0.1", "5"};  // 5 exceeds 1/L
  ASSERT_NE(sweep_command(req, out_, err_), kExitOk);
  const std::string summary = slurp(dir_ / "sweep" / "summary.csv");
  EXPECT_EQ(count_lines(summary), 3u);
  EXPECT_NE(summary.find("agents.mu,0.1,0,ok"), std::string::npos) << summary;
}

TEST_F(CliTest, PlotDataRejectsMissingInput) {
  PlotDataRequest plot;
  plot.inputs = {dir_ / "nope.csv"};
  EXPECT_NE(plot_data_command(plot, out_, err_), kExitOk);
}

}  // namespace
}  // namespace bdmtl::cli
