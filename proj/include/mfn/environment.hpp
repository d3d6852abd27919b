#pragma once

#include <map>
#include <string>
#include <vector>

#include "mfn/proposal.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Global objective plus the declared ranges and constraint sets of a domain.
struct EnvironmentSpec {
  std::string name;
  std::string objective;
  std::map<std::string, double> targets;
  ActionSpace action_space;
  std::vector<std::string> strict_constraints;
  std::vector<std::string> viability_constraints;
  std::map<std::string, double> reward_parameters;
};

// Reward and constraint verdict of one agent in a true environment state.
struct Evaluation {
  double reward = 0.0;
  ConstraintVerdict verdict;
};

}  // namespace mfn
