#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfn/types.hpp"

namespace mfn {

// Unordered agent pair, stored with first < second.
struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;

  Edge() = default;
  Edge(std::size_t x, std::size_t y) : a(x < y ? x : y), b(x < y ? y : x) {}

  auto operator<=>(const Edge&) const = default;
};

enum class PartitionScheme { None, Directional, ComponentsAfterRemoval };

std::string to_string(PartitionScheme scheme);
PartitionScheme partition_scheme_from_string(const std::string& s);

// Disjoint, non-empty neighbor groups whose union is the owner's neighborhood.
struct SubgroupPartition {
  AgentId owner;
  std::vector<std::vector<AgentId>> groups;
};

struct NeighborhoodView {
  std::vector<AgentId> neighbors;
  // Hop distance from the queried agent to every agent, indexed by agent.
  std::vector<std::size_t> hops;
};

// Connected, loop-free, positively weighted communication graph. Immutable
// after construction and safe to share across threads.
class Topology {
 public:
  // Graph with one agent and no links. Used for degenerate negotiation runs.
  static Topology single_agent();

  std::size_t agent_count() const noexcept { return adjacency_.size(); }
  const std::vector<AgentId>& neighbors(AgentId n) const;
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  double weight(AgentId n, AgentId m) const;
  double min_weight() const noexcept;
  bool contains(AgentId n) const noexcept { return n.index < agent_count(); }

  std::vector<std::size_t> hop_distances(AgentId from) const;
  std::size_t diameter() const;
  double average_degree() const noexcept;
  // True for a simple path (every degree <= 2, |E| = |V| - 1).
  bool is_chain() const noexcept;

 private:
  friend Topology build_topology(std::size_t, const std::vector<std::pair<std::size_t, std::size_t>>&,
                                 const std::optional<std::map<Edge, double>>&);

  std::vector<std::vector<AgentId>> adjacency_;
  std::vector<Edge> edges_;
  std::map<Edge, double> weights_;
};

// Validates and builds a topology. Missing weights default to 1.0, the
// inverse hop distance of a direct link.
Topology build_topology(std::size_t agent_count, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                        const std::optional<std::map<Edge, double>>& weights = std::nullopt);

Topology make_chain(std::size_t agent_count);

NeighborhoodView neighbors_and_hops(const Topology& t, AgentId n);

SubgroupPartition partition_neighborhood(const Topology& t, AgentId n, PartitionScheme scheme);

// A topology as described by a config file: node roles plus edge list.
struct TopologyConfig {
  std::string name;
  std::vector<std::string> roles;
  Topology topology;
};

// Reads {"name", "nodes": [{"id", "role"}], "edges": [[a, b], ...], "weights"?: [[a, b, w], ...]}.
TopologyConfig load_topology_file(const std::string& path);
TopologyConfig parse_topology_config(const std::string& json_text);

}  // namespace mfn
