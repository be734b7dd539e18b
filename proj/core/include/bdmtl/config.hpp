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

#ifndef BDMTL_CONFIG_HPP_
#define BDMTL_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bdmtl/engine.hpp"

namespace bdmtl {

// Value of one `key = value` line: a scalar or a bracketed array.
struct ConfigValue {
  std::vector<std::string> items;
  bool array = false;
  std::size_t line = 0;
};

// Flat configuration with dotted keys, e.g.
//
//   # comment
//   engine.rounds = 1000
//   weights.rule = filtered-loss
//   agents.byzantine = [3, 17]
//   scenario.path = "data/har.csv"
//
// Getters remember which keys were read so that typos can be reported.
class ConfigDocument {
 public:
  // Throws ParseError with the line number on malformed input.
  static ConfigDocument parse(std::istream& in);
  static ConfigDocument parse_string(const std::string& text);
  static ConfigDocument load(const std::filesystem::path& path);

  // Applies "key=value" (value in config syntax). Throws ParseError.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key) { values_.erase(key); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, ConfigValue>& values() const { return values_; }

  // Typed accessors; throw ConfigError naming the key on type errors.
  std::string get_string(const std::string& key) const;
  std::optional<std::string> find_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> find_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::optional<std::int64_t> find_int(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Scalars are returned as one-element lists.
  std::optional<std::vector<double>> find_doubles(const std::string& key) const;
  std::optional<std::vector<std::string>> find_strings(const std::string& key) const;

  // Keys present in the document that no getter has read.
  std::vector<std::string> unused_keys() const;

  // Canonical text: one `key = value` line per key, sorted by key.
  std::string serialize() const;

 private:
  const ConfigValue* lookup(const std::string& key) const;

  std::map<std::string, ConfigValue> values_;
  mutable std::set<std::string> used_;
};

// Builds a complete simulation setup (scenario, graph, roster, options).
// Relative data paths resolve against `base_dir`. Throws ConfigError with
// the offending key for missing or invalid fields and for unknown keys.
SimulationSetup build_setup(const ConfigDocument& config,
                            const std::filesystem::path& base_dir = {});

// Default worker count: $BDMTL_WORKERS when set to a positive integer, else 1.
std::size_t default_workers();

}  // namespace bdmtl

#endif  // BDMTL_CONFIG_HPP_
