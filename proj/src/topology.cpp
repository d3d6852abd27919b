#include "mfn/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mfn/errors.hpp"

namespace mfn {

namespace {

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

// Breadth-first hop counts, optionally treating one vertex as removed.
std::vector<std::size_t> bfs(const std::vector<std::vector<AgentId>>& adj, std::size_t from,
                             std::optional<std::size_t> removed = std::nullopt) {
  std::vector<std::size_t> dist(adj.size(), kUnreached);
  std::deque<std::size_t> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    auto u = queue.front();
    queue.pop_front();
    for (auto v : adj[u]) {
      if (removed && v.index == *removed) continue;
      if (dist[v.index] != kUnreached) continue;
      dist[v.index] = dist[u] + 1;
      queue.push_back(v.index);
    }
  }
  return dist;
}

}  // namespace

std::string to_string(PartitionScheme scheme) {
  switch (scheme) {
    case PartitionScheme::None: return "none";
    case PartitionScheme::Directional: return "directional";
    case PartitionScheme::ComponentsAfterRemoval: return "components-after-removal";
  }
  return "none";
}

PartitionScheme partition_scheme_from_string(const std::string& s) {
  if (s == "none") return PartitionScheme::None;
  if (s == "directional") return PartitionScheme::Directional;
  if (s == "components-after-removal") return PartitionScheme::ComponentsAfterRemoval;
  throw Error(ErrorCode::ValidationError, "unknown partition scheme '" + s + "'");
}

Topology Topology::single_agent() {
  Topology t;
  t.adjacency_.resize(1);
  return t;
}

const std::vector<AgentId>& Topology::neighbors(AgentId n) const {
  if (!contains(n)) throw Error(ErrorCode::UnknownAgent, to_string(n));
  return adjacency_[n.index];
}

double Topology::weight(AgentId n, AgentId m) const {
  auto it = weights_.find(Edge(n.index, m.index));
  if (it == weights_.end()) throw Error(ErrorCode::UnknownAgent, "no link " + to_string(n) + "-" + to_string(m));
  return it->second;
}

double Topology::min_weight() const noexcept {
  double w = 1.0;
  bool first = true;
  for (const auto& [e, value] : weights_) {
    w = first ? value : std::min(w, value);
    first = false;
  }
  return w;
}

std::vector<std::size_t> Topology::hop_distances(AgentId from) const {
  if (!contains(from)) throw Error(ErrorCode::UnknownAgent, to_string(from));
  return bfs(adjacency_, from.index);
}

std::size_t Topology::diameter() const {
  std::size_t d = 0;
  for (std::size_t i = 0; i < agent_count(); ++i) {
    auto dist = bfs(adjacency_, i);
    d = std::max(d, *std::max_element(dist.begin(), dist.end()));
  }
  return d;
}

double Topology::average_degree() const noexcept {
  if (adjacency_.empty()) return 0.0;
  return 2.0 * static_cast<double>(edges_.size()) / static_cast<double>(adjacency_.size());
}

bool Topology::is_chain() const noexcept {
  if (edges_.size() + 1 != adjacency_.size()) return false;
  return std::all_of(adjacency_.begin(), adjacency_.end(), [](const auto& nb) { return nb.size() <= 2; });
}

Topology build_topology(std::size_t agent_count, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                        const std::optional<std::map<Edge, double>>& weights) {
  if (agent_count < 2) throw Error(ErrorCode::InvalidParams, "a topology needs at least two agents");

  Topology t;
  t.adjacency_.resize(agent_count);
  for (auto [a, b] : edges) {
    if (a >= agent_count || b >= agent_count) {
      throw Error(ErrorCode::UnknownAgent, "edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
    }
    if (a == b) throw Error(ErrorCode::SelfLoop, "agent " + std::to_string(a));
    Edge e(a, b);
    if (t.weights_.contains(e)) continue;
    double w = 1.0;
    if (weights) {
      if (auto it = weights->find(e); it != weights->end()) w = it->second;
    }
    if (!(w > 0.0)) {
      throw Error(ErrorCode::NonPositiveWeight, "edge (" + std::to_string(e.a) + "," + std::to_string(e.b) + ")");
    }
    t.weights_.emplace(e, w);
    t.edges_.push_back(e);
    t.adjacency_[a].push_back(AgentId(b));
    t.adjacency_[b].push_back(AgentId(a));
  }
  for (auto& nb : t.adjacency_) std::sort(nb.begin(), nb.end());
  std::sort(t.edges_.begin(), t.edges_.end());

  auto dist = bfs(t.adjacency_, 0);
  if (std::find(dist.begin(), dist.end(), kUnreached) != dist.end()) {
    throw Error(ErrorCode::DisconnectedGraph, std::to_string(agent_count) + " agents, graph has several components");
  }
  return t;
}

Topology make_chain(std::size_t agent_count) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i + 1 < agent_count; ++i) edges.emplace_back(i, i + 1);
  return build_topology(agent_count, edges);
}

NeighborhoodView neighbors_and_hops(const Topology& t, AgentId n) {
  return {t.neighbors(n), t.hop_distances(n)};
}

SubgroupPartition partition_neighborhood(const Topology& t, AgentId n, PartitionScheme scheme) {
  const auto& nb = t.neighbors(n);
  SubgroupPartition p{n, {}};
  if (nb.empty()) return p;

  switch (scheme) {
    case PartitionScheme::None:
      p.groups.push_back(nb);
      break;

    case PartitionScheme::Directional: {
      if (!t.is_chain()) throw Error(ErrorCode::SchemeInapplicable, "directional partition requires a linear chain");
      // Orient the chain from the endpoint with the smallest id; the
      // predecessor is the neighbor closer to that head.
      std::size_t head = 0;
      for (std::size_t i = 0; i < t.agent_count(); ++i) {
        if (t.neighbors(AgentId(i)).size() <= 1) {
          head = i;
          break;
        }
      }
      auto from_head = t.hop_distances(AgentId(head));
      std::vector<AgentId> ordered = nb;
      std::sort(ordered.begin(), ordered.end(),
                [&](AgentId x, AgentId y) { return from_head[x.index] < from_head[y.index]; });
      for (auto m : ordered) p.groups.push_back({m});
      break;
    }

    case PartitionScheme::ComponentsAfterRemoval: {
      std::vector<bool> assigned(t.agent_count(), false);
      for (auto m : nb) {
        if (assigned[m.index]) continue;
        std::vector<std::vector<AgentId>> adj(t.agent_count());
        for (std::size_t i = 0; i < t.agent_count(); ++i) adj[i] = t.neighbors(AgentId(i));
        auto reach = bfs(adj, m.index, n.index);
        std::vector<AgentId> group;
        for (auto k : nb) {
          if (reach[k.index] != kUnreached) {
            group.push_back(k);
            assigned[k.index] = true;
          }
        }
        p.groups.push_back(std::move(group));
      }
      break;
    }
  }
  return p;
}

TopologyConfig parse_topology_config(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  try {
    TopologyConfig cfg{doc.value("name", std::string{}), {}, Topology::single_agent()};
    const auto& nodes = doc.at("nodes");
    cfg.roles.resize(nodes.size());
    for (const auto& node : nodes) {
      auto id = node.at("id").get<std::size_t>();
      if (id >= nodes.size()) throw Error(ErrorCode::ValidationError, "nodes[].id " + std::to_string(id) + " not dense");
      cfg.roles[id] = node.value("role", std::string{});
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& e : doc.at("edges")) edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    std::optional<std::map<Edge, double>> weights;
    if (doc.contains("weights")) {
      weights.emplace();
      for (const auto& w : doc["weights"]) {
        (*weights)[Edge(w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>())] = w.at(2).get<double>();
      }
    }
    cfg.topology = build_topology(nodes.size(), edges, weights);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("topology: ") + e.what());
  }
}

TopologyConfig load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology_config(ss.str());
}

}  // namespace mfn
