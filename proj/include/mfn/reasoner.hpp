#pragma once

#include <span>
#include <string>
#include <vector>

#include "mfn/proposal.hpp"
#include "mfn/strategy.hpp"

namespace mfn {

// Inputs for generating the semantic half of a revision signal.
struct DiagnosisInput {
  Observation previous_observation;
  Observation current_observation;
  Action previous_action = 0.0;
  Action current_action = 0.0;
  double previous_reward = 0.0;
  double current_reward = 0.0;
  int rounds_used = 0;
  bool converged = false;
};

// The reasoning backend of one agent. One instance per agent; instances
// never share mutable state. Implementations report unusable output by
// throwing Error(ErrorCode::ReasonerFailure).
class Reasoner {
 public:
  virtual ~Reasoner() = default;

  // Most advantageous own action; always inside the action space.
  virtual Action propose_action(const Observation& obs, const Strategy& strategy, const PartitionedStats& mf) = 0;

  // One cooperative action per observable neighbor.
  virtual JointAction propose_neighbor_actions(const Observation& obs, const Strategy& strategy,
                                               Action self_action) = 0;

  // Next local observation under the joint action of self and neighbors.
  virtual Observation predict_next_observation(const Observation& obs, const Strategy& strategy,
                                               const JointAction& joint) = 0;

  virtual ConflictAssessment assess_conflict(const Proposal& own, std::span<const Proposal> neighbors,
                                             const PartitionedStats& mf, const Strategy& strategy,
                                             double delta) = 0;

  virtual Strategy revise_strategy(const Strategy& strategy, const RevisionSignal& signal) = 0;

  // Replacement for a candidate that failed rollout verification. Default:
  // retreat toward zero by a factor 0.7 per attempt.
  virtual Action revise_action(const Observation& obs, const Strategy& strategy, Action rejected, int attempt);

  // The mean-field trend of unobservable agents expressed in action units.
  // Default: no trend.
  virtual Action unobservable_trend(const Observation& obs, const PartitionedStats& mf, const Strategy& strategy);

  // Semantic directives explaining a reward decline. Default: none.
  virtual std::vector<std::string> diagnose(const DiagnosisInput& input, const Strategy& strategy);
};

}  // namespace mfn
