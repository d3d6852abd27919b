#pragma once

#include <utility>

#include "mfn/pandemic.hpp"
#include "mfn/platoon.hpp"
#include "mfn/reasoner.hpp"

namespace mfn {

// Weight rule shared by the heuristic reasoners. With normalized variance
// s = v / (v + v_ref) of the merged neighborhood statistics:
//   my = 0.6, unobservable = 0.2 (1 - s), neighbor = 0.4 - unobservable.
ConfidenceWeights heuristic_weights(const PartitionedStats& mf, double variance_reference);

// Common conflict assessment: consensus check plus the weight rule.
class HeuristicReasoner : public Reasoner {
 public:
  explicit HeuristicReasoner(double variance_reference) : variance_reference_(variance_reference) {}

  ConflictAssessment assess_conflict(const Proposal& own, std::span<const Proposal> neighbors,
                                     const PartitionedStats& mf, const Strategy& strategy, double delta) override;

 private:
  double variance_reference_;
};

// Gains for an acceleration held over `hold_steps` steps of length dt whose
// error dynamics equal `hold_steps` steps of the per-step controller with
// (k_h, k_v). Identity for hold_steps == 1.
std::pair<double, double> hold_equivalent_gains(double k_h, double k_v, double dt, int hold_steps);

// Proportional headway/velocity controller with predecessor feed-forward:
//   a = k_h (h - h*) + k_v (v_pred - v) + a_pred
// where a_pred is estimated from the mean field of the agents ahead.
// The leader replays its scenario profile.
class PlatoonHeuristic : public HeuristicReasoner {
 public:
  // `hold_steps` is how long a chosen acceleration stays applied (the
  // decision interval); gains are converted so one held action tracks like
  // that many per-step control actions.
  PlatoonHeuristic(PlatoonParams params, PlatoonScenario scenario, double variance_reference = 1.0,
                   int hold_steps = 1);

  static Strategy initial_strategy();

  Action propose_action(const Observation& obs, const Strategy& strategy, const PartitionedStats& mf) override;
  JointAction propose_neighbor_actions(const Observation& obs, const Strategy& strategy, Action self_action) override;
  Observation predict_next_observation(const Observation& obs, const Strategy& strategy,
                                       const JointAction& joint) override;
  Strategy revise_strategy(const Strategy& strategy, const RevisionSignal& signal) override;
  Action unobservable_trend(const Observation& obs, const PartitionedStats& mf, const Strategy& strategy) override;
  std::vector<std::string> diagnose(const DiagnosisInput& input, const Strategy& strategy) override;

  // Feed-forward of the predecessor's expected action is added on top.
  Action controller(double headway, double velocity, double predecessor_velocity, const Strategy& strategy,
                    double predecessor_action = 0.0) const;
  // Expected action of the predecessor: the leader's profile, otherwise the
  // speed-matching term toward the mean of the agents in front of it.
  Action predecessor_estimate(const NeighborView& pred, int step, const PartitionedStats& mf,
                              const Strategy& strategy) const;
  // (k_h, k_v) in effect for the configured hold.
  std::pair<double, double> gains(const Strategy& strategy) const;

 private:
  PlatoonParams params_;
  PlatoonScenario scenario_;
  int hold_steps_ = 1;
};

// Threshold policy on the local infected fraction: escalate one level above
// the escalation threshold, step down below the de-escalation threshold,
// drop to level 0 once no infection is visible at all.
class PandemicHeuristic : public HeuristicReasoner {
 public:
  PandemicHeuristic(PandemicParams params, double variance_reference = 25.0);

  static Strategy initial_strategy();

  Action propose_action(const Observation& obs, const Strategy& strategy, const PartitionedStats& mf) override;
  JointAction propose_neighbor_actions(const Observation& obs, const Strategy& strategy, Action self_action) override;
  Observation predict_next_observation(const Observation& obs, const Strategy& strategy,
                                       const JointAction& joint) override;
  Strategy revise_strategy(const Strategy& strategy, const RevisionSignal& signal) override;
  Action revise_action(const Observation& obs, const Strategy& strategy, Action rejected, int attempt) override;
  Action unobservable_trend(const Observation& obs, const PartitionedStats& mf, const Strategy& strategy) override;
  std::vector<std::string> diagnose(const DiagnosisInput& input, const Strategy& strategy) override;

  // Level chosen for a node at `level` facing infected fraction `fraction`.
  int policy(int level, double fraction, const Strategy& strategy) const;

 private:
  // Infected persons per neighbor estimated from the mean-field summary.
  double neighbor_infected(const PartitionedStats& mf) const;

  PandemicParams params_;
};

}  // namespace mfn
