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

#include "bdmtl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

#include "bdmtl/error.hpp"

namespace bdmtl {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
           c == '-';
  });
}

// Removes a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string parse_scalar(const std::string& raw, std::size_t line) {
  std::string token = trim(raw);
  if (token.empty()) throw ParseError("config: empty value", line);
  if (token.front() == '"') {
    if (token.size() < 2 || token.back() != '"') {
      throw ParseError("config: unterminated string", line);
    }
    return token.substr(1, token.size() - 2);
  }
  if (token.find_first_of("\"[]") != std::string::npos) {
    throw ParseError("config: unexpected character in value '" + token + "'", line);
  }
  return token;
}

ConfigValue parse_value(const std::string& raw, std::size_t line) {
  ConfigValue value;
  value.line = line;
  const std::string text = trim(raw);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') throw ParseError("config: unterminated array", line);
    value.array = true;
    const std::string body = trim(text.substr(1, text.size() - 2));
    if (body.empty()) return value;
    std::string item;
    bool quoted = false;
    for (char c : body) {
      if (c == '"') quoted = !quoted;
      if (c == ',' && !quoted) {
        value.items.push_back(parse_scalar(item, line));
        item.clear();
      } else {
        item += c;
      }
    }
    value.items.push_back(parse_scalar(item, line));
    return value;
  }
  value.items.push_back(parse_scalar(text, line));
  return value;
}

std::string render_item(const std::string& item) {
  const bool bare = !item.empty() && std::all_of(item.begin(), item.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
           c == '-' || c == '+';
  });
  return bare ? item : "\"" + item + "\"";
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

ConfigDocument ConfigDocument::parse(std::istream& in) {
  ConfigDocument doc;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(strip_comment(raw));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected 'key = value'", line);
    const std::string key = trim(text.substr(0, eq));
    if (!valid_key(key)) throw ParseError("config: invalid key '" + key + "'", line);
    if (doc.values_.count(key) != 0) {
      throw ParseError("config: duplicate key '" + key + "'", line);
    }
    doc.values_[key] = parse_value(text.substr(eq + 1), line);
  }
  return doc;
}

ConfigDocument ConfigDocument::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string(), 0);
  return parse(in);
}

void ConfigDocument::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ParseError("override '" + assignment + "' is not of the form key=value", 0);
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void ConfigDocument::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ParseError("config: invalid key '" + key + "'", 0);
  values_[key] = parse_value(value, 0);
}

const ConfigValue* ConfigDocument::lookup(const std::string& key) const {
  used_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::optional<std::string> ConfigDocument::find_string(const std::string& key) const {
  const ConfigValue* v = lookup(key);
  if (v == nullptr) return std::nullopt;
  if (v->array || v->items.size() != 1) throw ConfigError(key, "expected a scalar");
  return v->items.front();
}

std::string ConfigDocument::get_string(const std::string& key) const {
  auto v = find_string(key);
  if (!v) throw ConfigError(key, "required field is missing");
  return *v;
}

std::optional<double> ConfigDocument::find_double(const std::string& key) const {
  const auto s = find_string(key);
  if (!s) return std::nullopt;
  const auto v = to_double(*s);
  if (!v) throw ConfigError(key, "expected a number, got '" + *s + "'");
  return v;
}

double ConfigDocument::get_double(const std::string& key, double fallback) const {
  return find_double(key).value_or(fallback);
}

std::optional<std::int64_t> ConfigDocument::find_int(const std::string& key) const {
  const auto v = find_double(key);
  if (!v) return std::nullopt;
  if (*v != std::floor(*v) || std::abs(*v) > 9.0e15) {
    throw ConfigError(key, "expected an integer");
  }
  return static_cast<std::int64_t>(*v);
}

std::int64_t ConfigDocument::get_int(const std::string& key, std::int64_t fallback) const {
  return find_int(key).value_or(fallback);
}

bool ConfigDocument::get_bool(const std::string& key, bool fallback) const {
  const auto s = find_string(key);
  if (!s) return fallback;
  if (*s == "true" || *s == "1") return true;
  if (*s == "false" || *s == "0") return false;
  throw ConfigError(key, "expected true or false");
}

std::optional<std::vector<std::string>> ConfigDocument::find_strings(
    const std::string& key) const {
  const ConfigValue* v = lookup(key);
  if (v == nullptr) return std::nullopt;
  return v->items;
}

std::optional<std::vector<double>> ConfigDocument::find_doubles(
    const std::string& key) const {
  const auto items = find_strings(key);
  if (!items) return std::nullopt;
  std::vector<double> out;
  for (const auto& item : *items) {
    const auto v = to_double(item);
    if (!v) throw ConfigError(key, "expected numbers, got '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> ConfigDocument::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) {
    if (used_.count(key) == 0) out.push_back(key);
  }
  return out;
}

std::string ConfigDocument::serialize() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_) {
    out << key << " = ";
    if (value.array) {
      out << '[';
      for (std::size_t i = 0; i < value.items.size(); ++i) {
        if (i != 0) out << ", ";
        out << render_item(value.items[i]);
      }
      out << ']';
    } else {
      out << render_item(value.items.front());
    }
    out << '\n';
  }
  return out.str();
}

std::size_t default_workers() {
  if (const char* env = std::getenv("BDMTL_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

// ---- setup -------------------------------------------------------------------

namespace {

std::size_t positive_count(const ConfigDocument& c, const std::string& key,
                           std::optional<std::int64_t> fallback = std::nullopt) {
  auto v = c.find_int(key);
  if (!v) v = fallback;
  if (!v) throw ConfigError(key, "required field is missing");
  if (*v < 1) throw ConfigError(key, "must be >= 1");
  return static_cast<std::size_t>(*v);
}

// Scalar broadcast to n entries, or an array of exactly n entries.
std::vector<double> per_agent(const ConfigDocument& c, const std::string& key,
                              std::size_t n, double fallback) {
  const auto v = c.find_doubles(key);
  if (!v) return std::vector<double>(n, fallback);
  if (v->size() == 1) return std::vector<double>(n, v->front());
  if (v->size() != n) {
    throw ConfigError(key, "expected a scalar or " + std::to_string(n) + " entries");
  }
  return *v;
}

std::pair<double, double> interval(const ConfigDocument& c, const std::string& key,
                                   std::pair<double, double> fallback) {
  const auto v = c.find_doubles(key);
  if (!v) return fallback;
  if (v->size() != 2 || (*v)[0] > (*v)[1]) {
    throw ConfigError(key, "expected [lo, hi] with lo <= hi");
  }
  return {(*v)[0], (*v)[1]};
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::shared_ptr<const Scenario> build_scenario(const ConfigDocument& c,
                                               const std::filesystem::path& base_dir,
                                               std::uint64_t seed) {
  const std::string name = c.get_string("scenario.name");
  const auto scenario_seed = static_cast<std::uint64_t>(
      c.get_int("scenario.seed", static_cast<std::int64_t>(seed)));
  try {
    if (name == "quadratic") {
      QuadraticParams p;
      p.n_agents = positive_count(c, "scenario.agents");
      p.n_clusters = positive_count(c, "scenario.clusters", 1);
      if (const auto diag = c.find_doubles("scenario.hessian_diag")) {
        p.hessian = to_vector(*diag).asDiagonal();
      } else if (const auto full = c.find_doubles("scenario.hessian")) {
        const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(full->size())));
        if (static_cast<std::size_t>(d * d) != full->size() || d == 0) {
          throw ConfigError("scenario.hessian", "expected d*d row-major entries");
        }
        p.hessian = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>(full->data(), d, d);
      }
      p.sigma2 = c.get_double("scenario.sigma2", 0.0);
      p.spread = c.get_double("scenario.spread", 0.0);
      if (const auto center = c.find_doubles("scenario.center")) p.center = to_vector(*center);
      p.seed = scenario_seed;
      return std::make_shared<QuadraticScenario>(std::move(p));
    }
    if (name == "localization") {
      LocalizationParams p;
      p.n_agents = positive_count(c, "scenario.agents");
      p.seed = scenario_seed;
      if (const auto t = c.find_doubles("scenario.targets")) {
        if (t->empty() || t->size() % 2 != 0) {
          throw ConfigError("scenario.targets", "expected [x1, y1, x2, y2, ...]");
        }
        p.targets.clear();
        for (std::size_t i = 0; i < t->size(); i += 2) p.targets.push_back({(*t)[i], (*t)[i + 1]});
      }
      std::tie(p.region_lo, p.region_hi) =
          interval(c, "scenario.region", {p.region_lo, p.region_hi});
      std::tie(p.sigma_d2_lo, p.sigma_d2_hi) =
          interval(c, "scenario.sigma_d2", {p.sigma_d2_lo, p.sigma_d2_hi});
      std::tie(p.sigma_u2_lo, p.sigma_u2_hi) =
          interval(c, "scenario.sigma_u2", {p.sigma_u2_lo, p.sigma_u2_hi});
      return std::make_shared<LocalizationScenario>(std::move(p));
    }
    if (name == "csv-classification") {
      std::filesystem::path path = c.get_string("scenario.path");
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      PartitionSpec partition;
      if (const auto s = c.find_doubles("scenario.shares")) partition.shares = *s;
      if (const auto f = c.find_doubles("scenario.data_fraction")) partition.data_fraction = *f;
      partition.agent_column = c.find_string("scenario.agent_column");
      CsvDataset data = load_csv_dataset(
          path, c.find_string("scenario.label_column").value_or("label"),
          c.get_double("scenario.train_fraction", 0.75),
          positive_count(c, "scenario.agents"), partition, scenario_seed);
      return std::make_shared<CsvClassificationScenario>(std::move(data));
    }
  } catch (const InvalidSpec& e) {
    throw ConfigError("scenario", e.what());
  }
  throw ConfigError("scenario.name",
                    "unknown scenario '" + name +
                        "' (expected quadratic, localization or csv-classification)");
}

NetworkGraph build_topology(const ConfigDocument& c, const Scenario& scenario,
                            const std::filesystem::path& base_dir, std::uint64_t seed) {
  const std::size_t n = scenario.num_agents();
  const std::string kind = c.find_string("topology.kind").value_or("complete");
  try {
    if (kind == "complete") return build_graph(CompleteTopology{n});
    if (kind == "geometric") {
      GeometricTopology g;
      g.n = n;
      g.seed = seed;
      std::tie(g.region_lo, g.region_hi) = interval(c, "topology.region", {0.0, 1.0});
      const std::string radius = c.find_string("topology.radius").value_or("auto");
      if (radius != "auto") {
        g.radius = c.get_double("topology.radius", 0.0);
        if (!(g.radius > 0.0)) throw ConfigError("topology.radius", "must be > 0 or auto");
      }
      g.positions = scenario.positions();
      return build_graph(g);
    }
    if (kind == "explicit") {
      ExplicitTopology e;
      e.n = n;
      if (const auto file = c.find_string("topology.edges")) {
        std::filesystem::path path = *file;
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        e.edges = load_edge_list(path);
      } else if (const auto inline_edges = c.find_doubles("topology.edge_list")) {
        if (inline_edges->size() % 2 != 0) {
          throw ConfigError("topology.edge_list", "expected pairs [l0, k0, l1, k1, ...]");
        }
        for (std::size_t i = 0; i < inline_edges->size(); i += 2) {
          const double l = (*inline_edges)[i];
          const double k = (*inline_edges)[i + 1];
          if (l < 0 || k < 0 || l != std::floor(l) || k != std::floor(k)) {
            throw ConfigError("topology.edge_list", "ids must be non-negative integers");
          }
          e.edges.emplace_back(static_cast<AgentId>(l), static_cast<AgentId>(k));
        }
      }
      return build_graph(e);
    }
  } catch (const InvalidSpec& e) {
    throw ConfigError("topology", e.what());
  } catch (const ParseError& e) {
    throw ConfigError("topology.edges", e.what());
  }
  throw ConfigError("topology.kind", "unknown topology '" + kind +
                                         "' (expected complete, geometric or explicit)");
}

std::vector<AgentId> byzantine_roster(const ConfigDocument& c, std::size_t n,
                                      std::uint64_t seed) {
  const auto listed = c.find_doubles("agents.byzantine");
  const auto count = c.find_int("agents.byzantine_count");
  if (listed && count) {
    throw ConfigError("agents.byzantine_count", "conflicts with agents.byzantine");
  }
  std::vector<AgentId> roster;
  if (listed) {
    for (double id : *listed) {
      if (id < 0 || id != std::floor(id) || id >= static_cast<double>(n)) {
        throw ConfigError("agents.byzantine", "ids must be integers in [0, " +
                                                  std::to_string(n) + ")");
      }
      roster.push_back(static_cast<AgentId>(id));
    }
  } else if (count) {
    if (*count < 0 || static_cast<std::size_t>(*count) >= n) {
      throw ConfigError("agents.byzantine_count",
                        "must lie in [0, " + std::to_string(n - 1) + "]");
    }
    roster = sample_roster(n, static_cast<std::size_t>(*count), seed);
  }
  std::sort(roster.begin(), roster.end());
  if (std::adjacent_find(roster.begin(), roster.end()) != roster.end()) {
    throw ConfigError("agents.byzantine", "duplicate agent id");
  }
  return roster;
}

AttackSpec build_attack(const ConfigDocument& c, std::size_t dim) {
  const std::string kind = c.find_string("attack.kind").value_or("random-interval");
  if (kind == "random-interval") {
    const auto [lo, hi] = interval(c, "attack.interval", {15.0, 16.0});
    return RandomIntervalAttack{Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), lo),
                                Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), hi)};
  }
  if (kind == "distance-exploit") {
    const auto target = c.find_doubles("attack.target");
    if (!target) throw ConfigError("attack.target", "required for distance-exploit");
    if (target->size() != dim) {
      throw ConfigError("attack.target", "expected " + std::to_string(dim) + " entries");
    }
    const double delta = c.get_double("attack.delta", 0.01);
    if (!(delta > 0.0)) throw ConfigError("attack.delta", "must be > 0");
    return DistanceExploitAttack{to_vector(*target), delta};
  }
  throw ConfigError("attack.kind", "unknown attack '" + kind +
                                       "' (expected random-interval or distance-exploit)");
}

}  // namespace

SimulationSetup build_setup(const ConfigDocument& c, const std::filesystem::path& base_dir) {
  SimulationSetup setup;
  EngineOptions& o = setup.options;
  o.seed = static_cast<std::uint64_t>(c.get_int("engine.seed", 0));
  o.rounds = positive_count(c, "engine.rounds");
  o.batch_size = positive_count(c, "engine.batch_size", 1);
  o.eval_batch_size = positive_count(c, "engine.eval_batch_size",
                                     static_cast<std::int64_t>(o.batch_size));
  o.metrics_every = positive_count(c, "engine.metrics_every", 1);
  o.test_every = positive_count(c, "engine.test_every", 10);
  o.record_weights = c.get_bool("engine.record_weights", false);
  o.workers = positive_count(c, "engine.workers",
                             static_cast<std::int64_t>(default_workers()));
  const std::string estimate = c.find_string("weights.risk_estimate").value_or("ema");
  if (estimate == "ema") {
    o.risk_estimate = RiskEstimate::kEma;
  } else if (estimate == "exact") {
    o.risk_estimate = RiskEstimate::kExact;
  } else {
    throw ConfigError("weights.risk_estimate", "expected ema or exact");
  }

  setup.scenario = build_scenario(c, base_dir, o.seed);
  const std::size_t n = setup.scenario->num_agents();
  const std::size_t dim = setup.scenario->model_dim();
  setup.graph = build_topology(c, *setup.scenario, base_dir, o.seed);

  std::vector<WeightRule> rules(n);
  const auto parse_rule = [](const std::string& key, const std::string& name) {
    const auto rule = parse_weight_rule(name);
    if (!rule) {
      throw ConfigError(key, "unknown rule '" + name +
                                 "' (expected average, distance, loss, filtered-loss or none)");
    }
    return *rule;
  };
  if (const auto per_agent_rules = c.find_strings("weights.rules")) {
    if (per_agent_rules->size() != n) {
      throw ConfigError("weights.rules", "expected " + std::to_string(n) + " entries");
    }
    for (std::size_t k = 0; k < n; ++k) rules[k] = parse_rule("weights.rules", (*per_agent_rules)[k]);
    if (c.has("weights.rule")) throw ConfigError("weights.rule", "conflicts with weights.rules");
  } else {
    const WeightRule rule = parse_rule(
        "weights.rule", c.find_string("weights.rule").value_or("filtered-loss"));
    std::fill(rules.begin(), rules.end(), rule);
  }

  const std::vector<double> mu = per_agent(c, "agents.mu", n, 0.1);
  const std::vector<double> nu = per_agent(c, "agents.nu", n, 0.1);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(mu[k] > 0.0)) throw ConfigError("agents.mu", "must be > 0");
    if (!(nu[k] > 0.0 && nu[k] < 1.0)) throw ConfigError("agents.nu", "must lie in (0, 1)");
  }
  std::optional<ModelParams> initial;
  if (const auto init = c.find_doubles("agents.initial_model")) {
    if (init->size() != dim) {
      throw ConfigError("agents.initial_model", "expected " + std::to_string(dim) + " entries");
    }
    initial = to_vector(*init);
  }

  const std::vector<AgentId> byzantine = byzantine_roster(c, n, o.seed);
  std::optional<AttackSpec> attack;
  if (!byzantine.empty()) attack = build_attack(c, dim);
  if (byzantine.size() == n) throw ConfigError("agents.byzantine", "no normal agent left");

  setup.roles.resize(n);
  for (AgentId k = 0; k < n; ++k) {
    if (std::binary_search(byzantine.begin(), byzantine.end(), k)) {
      setup.roles[k] = ByzantineRole{*attack};
    } else {
      setup.roles[k] = NormalRole{rules[k], mu[k], nu[k], initial};
    }
  }

  if (byzantine.empty()) {
    // Attack keys are meaningless without attackers; mark them read.
    for (const char* key : {"attack.kind", "attack.interval", "attack.target", "attack.delta"}) {
      (void)c.find_strings(key);
    }
  }
  const auto unused = c.unused_keys();
  if (!unused.empty()) throw ConfigError(unused.front(), "unknown configuration key");
  return setup;
}

}  // namespace bdmtl
