#include "mfn/types.hpp"

#include <algorithm>
#include <cmath>

namespace mfn {

std::string to_string(AgentId id) { return "agent_" + std::to_string(id.index); }

bool ActionSpace::contains(Action a) const noexcept {
  if (!std::isfinite(a) || a < min || a > max) return false;
  return !discrete || a == std::round(a);
}

Action ActionSpace::clamp(Action a) const noexcept {
  if (std::isnan(a)) return discrete ? min : std::clamp(0.0, min, max);
  a = std::clamp(a, min, max);
  return discrete ? std::round(a) : a;
}

const NeighborView* Observation::neighbor(AgentId id) const noexcept {
  auto it = std::find_if(neighbors.begin(), neighbors.end(), [&](const NeighborView& v) { return v.id == id; });
  return it == neighbors.end() ? nullptr : &*it;
}

std::vector<double> Observation::flatten() const {
  std::vector<double> out = own;
  for (const auto& nb : neighbors) out.insert(out.end(), nb.values.begin(), nb.values.end());
  return out;
}

std::string to_string(Urgency u) {
  switch (u) {
    case Urgency::Normal: return "Normal";
    case Urgency::Warning: return "Warning";
    case Urgency::Urgent: return "Urgent";
  }
  return "Normal";
}

}  // namespace mfn
