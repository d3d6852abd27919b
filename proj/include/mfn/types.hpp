#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace mfn {

// Dense agent index in [0, agent_count).
struct AgentId {
  std::size_t index = 0;

  constexpr AgentId() = default;
  constexpr explicit AgentId(std::size_t i) : index(i) {}

  constexpr auto operator<=>(const AgentId&) const = default;
};

std::string to_string(AgentId id);

// Continuous actions are accelerations; discrete actions are integral levels
// stored in the same scalar.
using Action = double;
using JointAction = std::map<AgentId, Action>;

struct ActionSpace {
  double min = 0.0;
  double max = 0.0;
  bool discrete = false;

  double range() const noexcept { return max - min; }
  bool contains(Action a) const noexcept;
  // Clamps into [min, max]; discrete spaces also round to the nearest level.
  Action clamp(Action a) const noexcept;
};

// What an agent sees about one adjacent agent. The value layout is
// domain-defined (see platoon.hpp / pandemic.hpp).
struct NeighborView {
  AgentId id;
  std::vector<double> values;

  bool operator==(const NeighborView&) const = default;
};

// A local, partial view of the environment. Never contains state of agents
// outside the observer's neighborhood.
struct Observation {
  AgentId agent;
  int step = 0;
  std::vector<double> own;
  std::vector<NeighborView> neighbors;

  const NeighborView* neighbor(AgentId id) const noexcept;
  // own ++ neighbor values, in neighbor order.
  std::vector<double> flatten() const;

  bool operator==(const Observation&) const = default;
};

enum class Urgency { Normal, Warning, Urgent };

std::string to_string(Urgency u);

}  // namespace mfn

template <>
struct std::hash<mfn::AgentId> {
  std::size_t operator()(const mfn::AgentId& id) const noexcept { return std::hash<std::size_t>{}(id.index); }
};
