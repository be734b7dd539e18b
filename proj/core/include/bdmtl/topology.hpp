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

#ifndef BDMTL_TOPOLOGY_HPP_
#define BDMTL_TOPOLOGY_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace bdmtl {

// Dense agent index in [0, n).
using AgentId = std::size_t;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(const Point2& a, const Point2& b);

using Edge = std::pair<AgentId, AgentId>;

struct CompleteTopology {
  std::size_t n = 0;
};

// Random geometric graph: agents at `positions` (or sampled uniformly over
// [region_lo, region_hi]^2 from `seed` when absent) are linked when their
// Euclidean distance is at most `radius`. A radius <= 0 selects the smallest
// radius for which the sampled layout is connected.
struct GeometricTopology {
  std::size_t n = 0;
  double region_lo = 0.0;
  double region_hi = 1.0;
  double radius = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::vector<Point2>> positions;
};

struct ExplicitTopology {
  std::size_t n = 0;
  std::vector<Edge> edges;
};

using TopologySpec =
    std::variant<CompleteTopology, GeometricTopology, ExplicitTopology>;

// Undirected agent graph. Every agent is its own neighbor and adjacency is
// symmetric; both hold by construction. Immutable once built.
class NetworkGraph {
 public:
  NetworkGraph() = default;

  // Builds from unordered pairs; self-loops are added for every agent and
  // duplicates are merged. Throws InvalidSpec for ids >= n.
  static NetworkGraph from_edges(std::size_t n, std::span<const Edge> edges);

  std::size_t size() const { return neighbors_.size(); }

  // Sorted neighborhood of k, always containing k. Throws InvalidId.
  std::span<const AgentId> neighborhood(AgentId k) const;

  bool adjacent(AgentId k, AgentId l) const;

  // Number of distinct unordered edges, self-loops included.
  std::size_t edge_count() const;

  bool connected() const;

  // Set by the geometric builder when the graph has several components.
  bool disconnected_warning() const { return disconnected_warning_; }

  // Agent coordinates when the graph came from a geometric layout.
  const std::vector<Point2>& positions() const { return positions_; }

 private:
  friend NetworkGraph build_graph(const TopologySpec& spec);

  std::vector<std::vector<AgentId>> neighbors_;
  std::vector<Point2> positions_;
  bool disconnected_warning_ = false;
};

NetworkGraph build_graph(const TopologySpec& spec);

// Smallest radius that connects all points (longest edge of the Euclidean
// minimum spanning tree). Zero for fewer than two points.
double connectivity_radius(std::span<const Point2> points);

// Plain-text edge list: one "l k" pair per line, 0-indexed. Blank lines and
// lines starting with '#' are skipped.
std::vector<Edge> read_edge_list(std::istream& in);
std::vector<Edge> load_edge_list(const std::filesystem::path& path);

}  // namespace bdmtl

#endif  // BDMTL_TOPOLOGY_HPP_
