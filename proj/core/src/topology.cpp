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

#include "bdmtl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <queue>
#include <sstream>
#include <string>

#include "bdmtl/error.hpp"
#include "bdmtl/rng.hpp"

namespace bdmtl {

double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

NetworkGraph NetworkGraph::from_edges(std::size_t n,
                                      std::span<const Edge> edges) {
  if (n == 0) throw InvalidSpec("topology: agent count must be positive");
  NetworkGraph g;
  g.neighbors_.resize(n);
  for (AgentId k = 0; k < n; ++k) g.neighbors_[k].push_back(k);
  for (const auto& [l, k] : edges) {
    if (l >= n || k >= n) {
      throw InvalidSpec("topology: edge (" + std::to_string(l) + ", " +
                        std::to_string(k) + ") references an agent >= n=" +
                        std::to_string(n));
    }
    g.neighbors_[k].push_back(l);
    g.neighbors_[l].push_back(k);
  }
  for (auto& nbhd : g.neighbors_) {
    std::sort(nbhd.begin(), nbhd.end());
    nbhd.erase(std::unique(nbhd.begin(), nbhd.end()), nbhd.end());
  }
  return g;
}

std::span<const AgentId> NetworkGraph::neighborhood(AgentId k) const {
  if (k >= neighbors_.size()) {
    throw InvalidId("agent " + std::to_string(k) + " out of range [0, " +
                    std::to_string(neighbors_.size()) + ")");
  }
  return neighbors_[k];
}

bool NetworkGraph::adjacent(AgentId k, AgentId l) const {
  const auto nbhd = neighborhood(k);
  return std::binary_search(nbhd.begin(), nbhd.end(), l);
}

std::size_t NetworkGraph::edge_count() const {
  std::size_t count = 0;
  for (AgentId k = 0; k < neighbors_.size(); ++k) {
    for (AgentId l : neighbors_[k]) {
      if (l >= k) ++count;
    }
  }
  return count;
}

bool NetworkGraph::connected() const {
  if (neighbors_.empty()) return true;
  std::vector<bool> seen(neighbors_.size(), false);
  std::queue<AgentId> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t visited = 1;
  while (!frontier.empty()) {
    const AgentId k = frontier.front();
    frontier.pop();
    for (AgentId l : neighbors_[k]) {
      if (!seen[l]) {
        seen[l] = true;
        ++visited;
        frontier.push(l);
      }
    }
  }
  return visited == neighbors_.size();
}

double connectivity_radius(std::span<const Point2> points) {
  // Prim's algorithm on the complete Euclidean graph, O(n^2).
  const std::size_t n = points.size();
  if (n < 2) return 0.0;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> in_tree(n, false);
  best[0] = 0.0;
  double longest = 0.0;
  for (std::size_t iter = 0; iter < n; ++iter) {
    std::size_t next = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_tree[i] && (next == n || best[i] < best[next])) next = i;
    }
    in_tree[next] = true;
    longest = std::max(longest, best[next]);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_tree[i]) best[i] = std::min(best[i], distance(points[next], points[i]));
    }
  }
  return longest;
}

namespace {

NetworkGraph build_complete(const CompleteTopology& spec) {
  std::vector<Edge> edges;
  for (AgentId k = 0; k < spec.n; ++k) {
    for (AgentId l = k + 1; l < spec.n; ++l) edges.emplace_back(l, k);
  }
  return NetworkGraph::from_edges(spec.n, edges);
}

std::vector<Point2> sample_positions(const GeometricTopology& spec) {
  Rng rng = make_stream(spec.seed, 0, 0, StreamPurpose::kTopology);
  std::vector<Point2> points(spec.n);
  for (auto& p : points) {
    p.x = rng.uniform(spec.region_lo, spec.region_hi);
    p.y = rng.uniform(spec.region_lo, spec.region_hi);
  }
  return points;
}

}  // namespace

NetworkGraph build_graph(const TopologySpec& spec) {
  if (const auto* complete = std::get_if<CompleteTopology>(&spec)) {
    return build_complete(*complete);
  }
  if (const auto* expl = std::get_if<ExplicitTopology>(&spec)) {
    return NetworkGraph::from_edges(expl->n, expl->edges);
  }
  const auto& geo = std::get<GeometricTopology>(spec);
  std::vector<Point2> points;
  if (geo.positions) {
    points = *geo.positions;
    if (points.size() != geo.n) {
      throw InvalidSpec("topology: " + std::to_string(points.size()) +
                        " positions given for n=" + std::to_string(geo.n));
    }
  } else {
    if (!(geo.region_lo < geo.region_hi)) {
      throw InvalidSpec("topology: geometric region must satisfy lo < hi");
    }
    points = sample_positions(geo);
  }
  const double radius = geo.radius > 0.0 ? geo.radius : connectivity_radius(points);
  std::vector<Edge> edges;
  for (AgentId k = 0; k < points.size(); ++k) {
    for (AgentId l = k + 1; l < points.size(); ++l) {
      if (distance(points[k], points[l]) <= radius) edges.emplace_back(l, k);
    }
  }
  NetworkGraph g = NetworkGraph::from_edges(geo.n, edges);
  g.positions_ = std::move(points);
  g.disconnected_warning_ = !g.connected();
  return g;
}

std::vector<Edge> read_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long l = -1;
    long long k = -1;
    std::string rest;
    if (!(fields >> l >> k) || (fields >> rest) || l < 0 || k < 0) {
      throw ParseError("edge list: expected two non-negative ids", line_no);
    }
    edges.emplace_back(static_cast<AgentId>(l), static_cast<AgentId>(k));
  }
  return edges;
}

std::vector<Edge> load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open edge list " + path.string(), 0);
  return read_edge_list(in);
}

}  // namespace bdmtl
