#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfn/meanfield.hpp"
#include "mfn/proposal.hpp"
#include "mfn/reasoner.hpp"
#include "mfn/strategy.hpp"

namespace mfn {

enum class ConstraintLevel { Strict, MinimumViability };

// An agent's local model of its domain: action space, reward and
// constraint checks on (predicted) local observations.
class EnvironmentModel {
 public:
  virtual ~EnvironmentModel() = default;

  virtual ActionSpace action_space() const = 0;
  // Domain reward of a local observation.
  virtual double reward(const Observation& obs) const = 0;
  // Name of the first rule violated by `obs` reached under `action`, if any.
  // Strict checks every environmental constraint; MinimumViability only the
  // relaxed subset.
  virtual std::optional<std::string> violation(const Observation& obs, Action action, ConstraintLevel level) const = 0;
  virtual Urgency urgency(const Observation& obs) const;
  // Own state vector summarized by the mean-field protocol.
  virtual std::vector<double> mean_field_state(const Observation& obs) const = 0;
  // States of directly observed neighbors, if the domain exposes them.
  virtual std::vector<std::pair<AgentId, std::vector<double>>> observed_neighbor_states(const Observation& obs) const;
};

struct RolloutConfig {
  int horizon = 2;        // k
  double discount = 0.9;  // gamma
  int max_attempts = 10;  // Att_max

  void validate() const;
};

struct AttemptRecord {
  int attempt = 0;
  Action action = 0.0;
  ConstraintVerdict verdict;
  double reward = 0.0;
  bool reward_guard_met = true;
};

struct ProposalResult {
  Proposal proposal;
  std::vector<AttemptRecord> attempts;
  bool verified = false;
};

struct RolloutOutcome {
  Trajectory trajectory;
  ConstraintVerdict verdict;
};

// Discounted sum of step rewards.
double cumulative_reward(const Trajectory& trajectory, double discount);

// Projects the candidate `horizon` steps ahead with the reasoner. The first
// step is checked against every constraint, later steps only against the
// minimum-viability set and earn a binary reward. Stops at the first
// violation.
RolloutOutcome verify_rollout(const Proposal& candidate, const EnvironmentModel& model, Reasoner& reasoner,
                              const Strategy& strategy, const RolloutConfig& cfg);

struct ProposalRequest {
  AgentId agent;
  const Observation* observation = nullptr;
  const Strategy* strategy = nullptr;
  const PartitionedStats* mean_field = nullptr;
  Reasoner* reasoner = nullptr;
  const EnvironmentModel* model = nullptr;
  RolloutConfig config;
  int round = 0;
  // Start from this action instead of asking the reasoner (negotiation path).
  std::optional<Action> initial_action;
  // Immediate reward achieved at the previous time step, for the
  // non-decreasing immediate-reward guard.
  std::optional<double> previous_immediate_reward;
};

// Proposal generation by rollout-simulated verification: returns the first
// candidate that verifies over the whole horizon, else the best-rewarded of
// all attempts.
ProposalResult generate_proposal(const ProposalRequest& request);

}  // namespace mfn
