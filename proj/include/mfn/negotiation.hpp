#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfn/instrumentation.hpp"
#include "mfn/meanfield.hpp"
#include "mfn/proposal.hpp"
#include "mfn/reasoner.hpp"
#include "mfn/rollout.hpp"
#include "mfn/strategy.hpp"
#include "mfn/topology.hpp"

namespace mfn {

struct ConsensusConfig {
  double epsilon = 0.02;
  double action_min = -2.5;
  double action_max = 2.5;
  bool discrete = false;

  static ConsensusConfig for_space(const ActionSpace& space, double epsilon);
  void validate() const;
};

// epsilon * (a_max - a_min) for continuous actions, 0 for discrete ones.
double consensus_delta(const ConsensusConfig& cfg);

// |a - b| < delta, or exact equality when delta is 0.
bool actions_agree(Action a, Action b, double delta) noexcept;

// Compares what each side does with what the other side proposes for it.
// Vacuously true without neighbors.
bool check_consensus(const Proposal& own, std::span<const Proposal> neighbors, double delta);

// Convex combination of own action, neighbors' suggestion and the
// unobservable trend, clamped into the action space.
Action blend_candidate(const ConfidenceWeights& weights, Action own_action, Action neighbor_action,
                       Action unobservable_trend, const ActionSpace& space);

// Discrete counterpart of blend_candidate: the input with the largest weight
// (ties resolved in the order own, neighbor, unobservable).
Action select_by_weight(const ConfidenceWeights& weights, Action own_action, Action neighbor_action,
                        Action unobservable_trend);

// Softmax of rollout rewards over [own, neighbors...], with own scaled by
// my_weight and neighbors by neighbor_weight. Non-finite rewards score 0.
std::vector<double> confidence_scores(const Proposal& own, std::span<const Proposal> neighbors,
                                      const ConfidenceWeights& weights);

// Confidence-weighted mean of own.self_action and every neighbor's action for
// `own.proposer`; discrete spaces take the most confident action, ties to the
// lowest proposer id.
Action finalize_decision(const Proposal& own, std::span<const Proposal> neighbors,
                         std::span<const double> confidences, const ActionSpace& space);

// Everything one agent brings to a negotiation. The strategy is updated in
// place (spatial part) during the negotiation.
struct AgentContext {
  AgentId id;
  Observation observation;
  Strategy strategy;
  Reasoner* reasoner = nullptr;
  const EnvironmentModel* model = nullptr;
  std::optional<double> previous_immediate_reward;
  // Used when no proposal can be produced at all.
  std::optional<Action> fallback_action;
};

struct NegotiationConfig {
  int max_rounds = 3;
  double epsilon = 0.02;
  RolloutConfig rollout;
  PartitionScheme partition = PartitionScheme::None;
  ConfidenceWeights default_weights;
  // Worker threads for per-agent work inside a round barrier.
  int parallelism = 1;

  void validate() const;
};

struct MessageRecord {
  AgentId sender;
  AgentId receiver;
  std::size_t bytes = 0;
  Action sender_action = 0.0;
  std::optional<Action> proposed_for_receiver;
  double rollout_reward = 0.0;
};

struct AgentRoundRecord {
  AgentId agent;
  Action action = 0.0;
  double rollout_reward = 0.0;
  bool verified = false;
  int attempts = 0;
  bool consensus = false;
  bool regenerated = false;
  std::optional<ConfidenceWeights> weights;
  MeanFieldStats merged;
  std::optional<std::string> error;
};

struct RoundRecord {
  int round = 0;
  std::vector<MessageRecord> messages;
  std::vector<AgentRoundRecord> agents;
  bool global_consensus = false;
};

struct NegotiationRecord {
  int time_step = 0;
  // Proposals generated before the first exchange.
  std::vector<AgentRoundRecord> initial;
  std::vector<RoundRecord> rounds;
  int rounds_used = 0;
  bool converged = false;
  // Per-agent finalization confidences over [own, neighbors in topology order].
  std::vector<std::vector<double>> confidences;
};

struct NegotiationOutcome {
  JointAction final_actions;
  std::vector<Proposal> proposals;
  NegotiationRecord record;
};

// Runs proposal generation and up to `max_rounds` exchange rounds, then
// finalizes one action per agent. Agents must be ordered by id and match the
// topology. Per-agent reasoner failures fall back to the previous proposal.
NegotiationOutcome negotiate(std::span<AgentContext> agents, const Topology& topology, const NegotiationConfig& cfg,
                             int time_step = 0, CommStats* comm = nullptr);

}  // namespace mfn
