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

// Acceptance harness: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "bdmtl/engine.hpp"
#include "bdmtl/io.hpp"
#include "bdmtl/oracle.hpp"
#include "bdmtl/scenario.hpp"
#include "bdmtl/weighting.hpp"

namespace {

using namespace bdmtl;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit_s;  // <= 0 means no runtime bound
  std::function<Outcome()> check;
};

std::shared_ptr<QuadraticScenario> quadratic(std::size_t agents, std::size_t clusters,
                                             double spread, std::uint64_t seed,
                                             Eigen::Vector2d center = {2.0, -1.0}) {
  QuadraticParams p;
  p.n_agents = agents;
  p.n_clusters = clusters;
  p.hessian = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  p.sigma2 = 1.0;
  p.spread = spread;
  p.center = center;
  p.seed = seed;
  return std::make_shared<QuadraticScenario>(std::move(p));
}

RandomIntervalAttack interval_attack(double lo, double hi) {
  return RandomIntervalAttack{Eigen::Vector2d::Constant(lo), Eigen::Vector2d::Constant(hi)};
}

// ---- 1-3: oracle suites ---------------------------------------------------------

Outcome from_reports(const std::vector<SuiteReport>& reports) {
  Outcome o{true, {}};
  for (const auto& r : reports) {
    o.pass = o.pass && r.ok();
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += fmt::format("{} {}/{} ({})", r.name, r.passed, r.total, r.detail);
  }
  return o;
}

Outcome criterion_qp() { return from_reports({verify_qp_suite(1)}); }
Outcome criterion_lemma1() { return from_reports({verify_lemma1_suite(1)}); }
Outcome criterion_gradients() { return from_reports(verify_gradient_suites(1)); }

// ---- 4: regret bound --------------------------------------------------------------

Outcome criterion_regret() {
  constexpr double kMu = 0.1;
  constexpr std::size_t kSeeds = 50;
  constexpr std::size_t kRounds = 1000;
  constexpr std::size_t kTailFrom = 800;
  double regret_sum = 0.0;
  double worst_seed = 0.0;
  double bound = 0.0;
  for (std::size_t seed = 0; seed < kSeeds; ++seed) {
    auto scenario = quadratic(6, 1, 0.0, seed);
    bound = regret_bound(*scenario->profile(0), kMu);
    SimulationSetup setup{scenario, build_graph(CompleteTopology{6}), {}, {}};
    setup.roles.push_back(NormalRole{WeightRule::kFilteredLoss, kMu, 0.1, std::nullopt});
    for (int b = 0; b < 5; ++b) setup.roles.push_back(ByzantineRole{interval_attack(15, 16)});
    setup.options.rounds = kRounds;
    setup.options.seed = seed;
    setup.options.metrics_every = kRounds;
    Simulation sim(std::move(setup));
    double tail = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 1; i <= kRounds; ++i) {
      sim.run_round();
      if (i >= kTailFrom) {
        tail += scenario->excess_risk(0, sim.agent(0).theta());
        ++count;
      }
    }
    tail /= static_cast<double>(count);
    worst_seed = std::max(worst_seed, tail);
    regret_sum += tail;
  }
  const double mean = regret_sum / kSeeds;
  const double limit = 1.2 * bound;
  return {mean <= limit,
          fmt::format("mean tail regret {:.4f} <= {:.3f} (bound {:.3f} x 1.2); worst seed {:.4f}",
                      mean, limit, bound, worst_seed)};
}

// ---- 5: per-round risk chain ------------------------------------------------------

struct ChainStats {
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
};

ChainStats risk_chain(RiskEstimate estimate, std::uint64_t seed, std::size_t rounds) {
  auto scenario = quadratic(20, 4, 3.0, seed);
  SimulationSetup setup{scenario, build_graph(CompleteTopology{20}), {}, {}};
  setup.roles.assign(20, NormalRole{WeightRule::kFilteredLoss, 0.1, 0.1, std::nullopt});
  setup.options.rounds = rounds;
  setup.options.seed = seed;
  setup.options.metrics_every = rounds;
  setup.options.risk_estimate = estimate;
  Simulation sim(std::move(setup));
  ChainStats stats;
  for (std::size_t i = 0; i < rounds; ++i) {
    sim.run_round();
    for (AgentId k = 0; k < 20; ++k) {
      const auto& a = sim.agent(k);
      const double gap = scenario->exact_risk(k, a.theta()) -
                         scenario->exact_risk(k, a.theta_hat());
      stats.worst = std::max(stats.worst, gap);
      ++stats.checks;
      if (gap > 1e-9) ++stats.violations;
    }
  }
  return stats;
}

Outcome criterion_risk_chain() {
  ChainStats exact;
  ChainStats ema;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto e = risk_chain(RiskEstimate::kExact, seed, 500);
    exact.checks += e.checks;
    exact.violations += e.violations;
    exact.worst = std::max(exact.worst, e.worst);
    const auto s = risk_chain(RiskEstimate::kEma, seed, 500);
    ema.checks += s.checks;
    ema.violations += s.violations;
  }
  return {exact.violations == 0,
          fmt::format("exact-risk filtering: {}/{} agent-rounds hold, max r(theta)-r(theta_hat) "
                      "{:.3g}; info: EMA-estimated filtering violates in {}/{}",
                      exact.checks - exact.violations, exact.checks, exact.worst,
                      ema.violations, ema.checks)};
}

// ---- 6: localization ----------------------------------------------------------------

struct LocalizationRun {
  double mean = 0.0;
};

double localization_final_loss(std::uint64_t seed, std::size_t byzantine, WeightRule rule) {
  constexpr std::size_t kAgents = 100;
  LocalizationParams params;
  params.n_agents = kAgents;
  params.seed = seed;
  auto scenario = std::make_shared<LocalizationScenario>(params);
  GeometricTopology topo;
  topo.n = kAgents;
  topo.region_lo = params.region_lo;
  topo.region_hi = params.region_hi;
  topo.seed = seed;
  topo.positions = scenario->positions();
  SimulationSetup setup{scenario, build_graph(topo), {}, {}};
  const auto roster = sample_roster(kAgents, byzantine, seed);
  for (AgentId k = 0; k < kAgents; ++k) {
    if (std::binary_search(roster.begin(), roster.end(), k)) {
      setup.roles.push_back(ByzantineRole{interval_attack(15, 16)});
    } else {
      setup.roles.push_back(NormalRole{rule, 0.1, 0.1, std::nullopt});
    }
  }
  setup.options.rounds = 2000;
  setup.options.seed = seed;
  setup.options.test_every = 2000;
  const SimulationResult result = run_simulation(std::move(setup));
  const auto rows = to_rows(result.metrics);
  return final_loss(rows, 0.1).value().mean;
}

Outcome criterion_localization() {
  constexpr std::size_t kSeeds = 10;
  double filt0 = 0, none0 = 0, filt20 = 0, none20 = 0, avg20 = 0;
  std::size_t lone_ok = 0;
  double worst_lone = 0.0;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    filt0 += localization_final_loss(seed, 0, WeightRule::kFilteredLoss) / kSeeds;
    none0 += localization_final_loss(seed, 0, WeightRule::kNone) / kSeeds;
    filt20 += localization_final_loss(seed, 20, WeightRule::kFilteredLoss) / kSeeds;
    none20 += localization_final_loss(seed, 20, WeightRule::kNone) / kSeeds;
    avg20 += localization_final_loss(seed, 20, WeightRule::kAverage) / kSeeds;
    const double lone = localization_final_loss(seed, 99, WeightRule::kFilteredLoss);
    const double solo = localization_final_loss(seed, 99, WeightRule::kNone);
    const double dev = std::abs(lone - solo) / solo;
    worst_lone = std::max(worst_lone, dev);
    if (dev <= 0.2) ++lone_ok;
  }
  const bool a = filt0 <= none0 && filt20 <= none20;
  const bool b = avg20 >= 10.0 * filt20;
  const bool c = lone_ok == kSeeds;
  return {a && b && c,
          fmt::format("(a) 0 byz: filtered {:.4f} vs none {:.4f}; 20 byz: filtered {:.4f} vs "
                      "none {:.4f} [{}]; (b) average {:.3f} = {:.1f}x filtered [{}]; "
                      "(c) 99 byz: {}/{} seeds within 20%, worst {:.2f}% [{}]",
                      filt0, none0, filt20, none20, a ? "ok" : "fail", avg20, avg20 / filt20,
                      b ? "ok" : "fail", lone_ok, kSeeds, 100 * worst_lone, c ? "ok" : "fail")};
}

// ---- 7: distance-rule vulnerability ---------------------------------------------------

struct ExploitRun {
  double tail_error = 0.0;
  std::optional<std::size_t> dominant_round;
};

// Five honest agents of one task plus, optionally, one DistanceExploit
// attacker (agent 5) on a complete graph; the victim is agent 0.
ExploitRun exploit_run(WeightRule rule, bool attacked, std::uint64_t seed) {
  constexpr std::size_t kRounds = 1000;
  constexpr std::size_t kTail = 100;
  const std::size_t n = attacked ? 6 : 5;
  auto scenario = quadratic(n, 1, 0.0, seed, Eigen::Vector2d::Zero());
  SimulationSetup setup{scenario, build_graph(CompleteTopology{n}), {}, {}};
  setup.roles.assign(5, NormalRole{rule, 0.1, 0.1, std::nullopt});
  if (attacked) {
    setup.roles.push_back(ByzantineRole{DistanceExploitAttack{Eigen::Vector2d(10.0, -10.0), 0.01}});
  }
  setup.options.rounds = kRounds;
  setup.options.seed = seed;
  setup.options.metrics_every = kRounds;
  Simulation sim(std::move(setup));
  ExploitRun run;
  const ModelParams optimum = *scenario->optimum(0);
  for (std::size_t i = 1; i <= kRounds; ++i) {
    sim.run_round();
    if (attacked && !run.dominant_round) {
      const WeightVector w = sim.agent(0).weights();
      bool dominant = true;
      for (AgentId l = 0; l < 5; ++l) dominant = dominant && w.at(5) > w.at(l);
      if (dominant) run.dominant_round = i;
    }
    if (i > kRounds - kTail) run.tail_error += (sim.agent(0).theta() - optimum).norm() / kTail;
  }
  return run;
}

Outcome criterion_exploit() {
  constexpr std::size_t kSeeds = 5;
  bool pass = true;
  double min_distance_ratio = std::numeric_limits<double>::infinity();
  double max_filtered_ratio = 0.0;
  std::size_t latest_dominance = 0;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto dist_clean = exploit_run(WeightRule::kDistance, false, seed);
    const auto dist_attacked = exploit_run(WeightRule::kDistance, true, seed);
    const auto filt_clean = exploit_run(WeightRule::kFilteredLoss, false, seed);
    const auto filt_attacked = exploit_run(WeightRule::kFilteredLoss, true, seed);
    const double dr = dist_attacked.tail_error / dist_clean.tail_error;
    const double fr = filt_attacked.tail_error / filt_clean.tail_error;
    min_distance_ratio = std::min(min_distance_ratio, dr);
    max_filtered_ratio = std::max(max_filtered_ratio, fr);
    const bool dominated = dist_attacked.dominant_round && *dist_attacked.dominant_round <= 50;
    latest_dominance = std::max(latest_dominance, dist_attacked.dominant_round.value_or(99999));
    pass = pass && dominated && dr > 5.0 && fr <= 1.5;
  }
  return {pass, fmt::format("{} seeds: attacker outweighs all honest neighbors by round {} "
                            "(<= 50); distance-rule error ratio min {:.1f}x (> 5x); "
                            "filtered-loss error ratio max {:.2f}x (<= 1.5x)",
                            kSeeds, latest_dominance, min_distance_ratio, max_filtered_ratio)};
}

// ---- 8: determinism --------------------------------------------------------------------

std::string metrics_bytes(std::size_t workers) {
  constexpr std::size_t kAgents = 40;
  LocalizationParams params;
  params.n_agents = kAgents;
  params.seed = 11;
  auto scenario = std::make_shared<LocalizationScenario>(params);
  GeometricTopology topo{kAgents, 5.0, 25.0, 0.0, 11, scenario->positions()};
  SimulationSetup setup{scenario, build_graph(topo), {}, {}};
  const auto roster = sample_roster(kAgents, 8, 11);
  const WeightRule rules[] = {WeightRule::kNone, WeightRule::kAverage, WeightRule::kDistance,
                              WeightRule::kLoss, WeightRule::kFilteredLoss};
  for (AgentId k = 0; k < kAgents; ++k) {
    if (std::binary_search(roster.begin(), roster.end(), k)) {
      if (k % 2 == 0) {
        setup.roles.push_back(ByzantineRole{interval_attack(15, 16)});
      } else {
        setup.roles.push_back(
            ByzantineRole{DistanceExploitAttack{Eigen::Vector2d(0.0, 0.0), 0.01}});
      }
    } else {
      setup.roles.push_back(NormalRole{rules[k % 5], 0.1, 0.1, std::nullopt});
    }
  }
  setup.options.rounds = 300;
  setup.options.seed = 11;
  setup.options.batch_size = 3;
  setup.options.record_weights = true;
  setup.options.workers = workers;
  const SimulationResult result = run_simulation(std::move(setup));
  std::ostringstream out;
  write_metrics_csv(out, result.metrics);
  write_weights_csv(out, result.metrics);
  return out.str();
}

Outcome criterion_determinism() {
  const std::string first = metrics_bytes(1);
  const std::string second = metrics_bytes(1);
  const std::string parallel = metrics_bytes(8);
  const bool pass = first == second && first == parallel;
  return {pass, fmt::format("repeat run {}, 1 vs 8 workers {} ({} bytes, blob {})",
                            first == second ? "identical" : "DIFFERS",
                            first == parallel ? "identical" : "DIFFERS", first.size(),
                            git_blob_hash(first).substr(0, 12))};
}

// ---- 9: linear-time weighting -----------------------------------------------------------

std::size_t filtered_ops(std::size_t n, double keep_fraction) {
  std::vector<AgentId> ids(n);
  for (AgentId l = 0; l < n; ++l) ids[l] = l;
  RiskEstimateTable table(ids, 0.5);
  // Self is agent 0 at risk 1; a keep_fraction share of the others score below it.
  const auto kept = static_cast<std::size_t>(keep_fraction * static_cast<double>(n - 1));
  table.assign(0, 1.0);
  for (AgentId l = 1; l < n; ++l) table.assign(l, l <= kept ? 0.5 : 2.0);
  OpCounter counter;
  (void)filtered_loss_weights(table, 0, &counter);
  return counter.ops;
}

// Ratio ops(10n) / ops(n) for n = 10, 100.
std::vector<double> growth_ratios(double keep) {
  return {static_cast<double>(filtered_ops(100, keep)) / static_cast<double>(filtered_ops(10, keep)),
          static_cast<double>(filtered_ops(1000, keep)) /
              static_cast<double>(filtered_ops(100, keep))};
}

// Two-sided ratio test where the kept set scales with |N_k| (including the
// worst case, everything kept). When every neighbor is filtered only self
// survives, so the count is affine with a constant term; there the test is
// one-sided: no growth faster than linear.
Outcome criterion_linear_ops() {
  bool pass = true;
  std::string detail;
  for (double keep : {1.0, 0.5, 0.0}) {
    const bool two_sided = keep > 0.0;
    std::string line = fmt::format("keep {:.0f}% ops", 100 * keep);
    for (std::size_t n : {10, 100, 1000}) line += fmt::format(" {}", filtered_ops(n, keep));
    line += ", ratios";
    for (double r : growth_ratios(keep)) {
      const bool ok = two_sided ? std::abs(r / 10.0 - 1.0) <= 0.1 : r <= 11.0;
      pass = pass && ok;
      line += fmt::format(" {:.2f}", r);
    }
    line += two_sided ? " (10 +- 10%)" : " (<= 11, constant self term)";
    detail += (detail.empty() ? "" : "; ") + line;
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "closed-form weights match QP oracle", 10, criterion_qp},
      {2, "weighted regret never exceeds the average regret", 5, criterion_lemma1},
      {3, "finite-difference gradient checks", 10, criterion_gradients},
      {4, "regret bound with Byzantine neighbors", 120, criterion_regret},
      {5, "filtered combination never raises exact risk", 60, criterion_risk_chain},
      {6, "localization reproduction", 300, criterion_localization},
      {7, "distance-rule vulnerability", 60, criterion_exploit},
      {8, "byte-identical metrics across runs and workers", 0, criterion_determinism},
      {9, "linear-time filtered weighting", 0, criterion_linear_ops},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit_s <= 0 || seconds < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::string timing = fmt::format("{:.2f}s", seconds);
    if (c.time_limit_s > 0) timing += fmt::format(" < {:.0f}s{}", c.time_limit_s, in_time ? "" : " EXCEEDED");
    std::printf("criterion %d: %s: %s: %s [%s]\n", c.id, pass ? "PASS" : "FAIL", c.title.c_str(),
                o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
