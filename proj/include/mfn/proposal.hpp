#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfn/types.hpp"

namespace mfn {

struct ConstraintVerdict {
  bool passed = true;
  std::optional<int> violated_step;
  std::optional<std::string> violated_rule;

  static ConstraintVerdict pass() { return {}; }
  static ConstraintVerdict fail(int step, std::string rule) { return {false, step, std::move(rule)}; }
};

struct TrajectoryStep {
  Observation observation;
  Action action = 0.0;
  double reward = 0.0;
};

// Predicted (observation, action, reward) triples from the decision step
// onward. Full length is horizon + 1; shorter when cut at a violation.
struct Trajectory {
  std::vector<TrajectoryStep> steps;
};

// An agent's suggested action for itself plus cooperative actions for its
// observable neighbors, with the reward of its verified rollout.
struct Proposal {
  AgentId proposer;
  Observation observation;
  Action self_action = 0.0;
  JointAction neighbor_actions;
  double rollout_reward = 0.0;
  int round = 0;
  Urgency urgency = Urgency::Normal;
  Trajectory trajectory;
  ConstraintVerdict verdict;

  // Action this proposal suggests for `agent`, if any.
  std::optional<Action> action_for(AgentId agent) const;
};

}  // namespace mfn
