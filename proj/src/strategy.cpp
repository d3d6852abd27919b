#include <algorithm>
#include <cmath>

#include "mfn/errors.hpp"
#include "mfn/proposal.hpp"
#include "mfn/reasoner.hpp"
#include "mfn/strategy.hpp"

namespace mfn {

std::optional<Action> Proposal::action_for(AgentId agent) const {
  if (agent == proposer) return self_action;
  auto it = neighbor_actions.find(agent);
  if (it == neighbor_actions.end()) return std::nullopt;
  return it->second;
}

double TemporalStrategy::get(const std::string& name) const {
  auto it = parameters.find(name);
  if (it == parameters.end()) throw Error(ErrorCode::InvalidParams, "strategy has no parameter '" + name + "'");
  return it->second;
}

void TemporalStrategy::enforce_bounds() {
  for (auto& [name, value] : parameters) {
    if (auto it = bounds.find(name); it != bounds.end()) value = std::clamp(value, it->second.first, it->second.second);
  }
}

bool ConfidenceWeights::normalized(double tolerance) const noexcept {
  return my_weight >= 0.0 && neighbor_weight >= 0.0 && unobservable_weight >= 0.0 &&
         std::abs(sum() - 1.0) <= tolerance;
}

ConfidenceWeights ConfidenceWeights::normalize() const {
  if (my_weight < 0.0 || neighbor_weight < 0.0 || unobservable_weight < 0.0) {
    throw Error(ErrorCode::InvalidParams, "negative confidence weight");
  }
  const double s = sum();
  if (!(s > 0.0)) throw Error(ErrorCode::InvalidParams, "confidence weights sum to zero");
  return {my_weight / s, neighbor_weight / s, unobservable_weight / s};
}

Action Reasoner::revise_action(const Observation&, const Strategy&, Action rejected, int) { return rejected * 0.7; }

Action Reasoner::unobservable_trend(const Observation&, const PartitionedStats&, const Strategy&) { return 0.0; }

std::vector<std::string> Reasoner::diagnose(const DiagnosisInput&, const Strategy&) { return {}; }

}  // namespace mfn
