#include "mfn/heuristics.hpp"

#include <algorithm>
#include <cmath>

#include "mfn/errors.hpp"
#include "mfn/introspection.hpp"
#include "mfn/negotiation.hpp"

namespace mfn {

namespace {

constexpr double kAhead = 1.0;
constexpr double kBehind = -1.0;

const NeighborView* find_relation(const Observation& obs, double relation) {
  for (const auto& nb : obs.neighbors) {
    if (nb.values.size() == 3 && nb.values[2] == relation) return &nb;
  }
  return nullptr;
}

Action joint_action(const JointAction& joint, AgentId id) {
  auto it = joint.find(id);
  return it == joint.end() ? 0.0 : it->second;
}

enum PandemicField { kS, kI, kC, kD, kR, kLevel, kPopulation, kCapacity };

}  // namespace

ConfidenceWeights heuristic_weights(const PartitionedStats& mf, double variance_reference) {
  if (!(variance_reference > 0.0)) throw Error(ErrorCode::InvalidParams, "variance reference must be positive");
  const MeanFieldStats merged = mf.merged();
  if (merged.empty()) return {0.6, 0.4, 0.0};
  const double v = merged.max_variance();
  const double s = v / (v + variance_reference);
  const double unobservable = 0.2 * (1.0 - s);
  return {0.6, 0.4 - unobservable, unobservable};
}

ConflictAssessment HeuristicReasoner::assess_conflict(const Proposal& own, std::span<const Proposal> neighbors,
                                                      const PartitionedStats& mf, const Strategy& strategy,
                                                      double delta) {
  ConflictAssessment out;
  try {
    out.deal = check_consensus(own, neighbors, delta);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::IncomparableProposals) throw;
    out.deal = false;
  }
  out.updated_spatial = strategy.spatial;
  out.updated_spatial.stats = mf;
  if (out.deal) {
    out.rationale = "proposals agree within tolerance";
    return out;
  }
  out.weights = heuristic_weights(mf, variance_reference_);
  out.updated_spatial.directives.clear();
  for (const auto& nb : neighbors) {
    const auto suggested = nb.action_for(own.proposer);
    if (suggested && !actions_agree(own.self_action, *suggested, delta)) {
      out.updated_spatial.directives.push_back("move toward " + to_string(nb.proposer) + " suggestion");
    }
  }
  out.rationale = "conflict with " + std::to_string(out.updated_spatial.directives.size()) + " neighbor(s)";
  return out;
}

// ---- platoon ----

PlatoonHeuristic::PlatoonHeuristic(PlatoonParams params, PlatoonScenario scenario, double variance_reference,
                                   int hold_steps)
    : HeuristicReasoner(variance_reference), params_(params), scenario_(scenario), hold_steps_(hold_steps) {
  params_.validate();
  if (hold_steps_ < 1) throw Error(ErrorCode::InvalidParams, "hold_steps must be >= 1");
}

std::pair<double, double> hold_equivalent_gains(double k_h, double k_v, double dt, int hold_steps) {
  if (hold_steps == 1) return {k_h, k_v};
  // Error dynamics (e_h, e_v) under one step of the controller have
  // trace tr and determinant det. The m-step map has trace s_m (power sums
  // of the eigenvalues) and determinant det^m; pick the gains whose single
  // held step reproduces that map.
  const double tr = 2.0 - k_v * dt - 0.5 * k_h * dt * dt;
  const double det = 1.0 - k_v * dt + 0.5 * k_h * dt * dt;
  double s_prev = 2.0, s = tr;
  for (int m = 2; m <= hold_steps; ++m) {
    const double next = tr * s - det * s_prev;
    s_prev = s;
    s = next;
  }
  const double det_m = std::pow(det, hold_steps);
  const double T = dt * hold_steps;
  return {(1.0 - s + det_m) / (T * T), (3.0 - s - det_m) / (2.0 * T)};
}

Strategy PlatoonHeuristic::initial_strategy() {
  Strategy s;
  s.temporal.parameters = {{"k_h", 0.2}, {"k_v", 0.5}};
  s.temporal.bounds = {{"k_h", {0.1, 0.4}}, {"k_v", {0.3, 1.0}}};
  s.temporal.directives = {"hold the target headway", "match the predecessor speed"};
  return s;
}

Action PlatoonHeuristic::controller(double headway, double velocity, double predecessor_velocity,
                                   const Strategy& strategy, double predecessor_action) const {
  const auto [k_h, k_v] = gains(strategy);
  const double a = k_h * (headway - params_.target_headway) + k_v * (predecessor_velocity - velocity) +
                   predecessor_action;
  return params_.action_space().clamp(a);
}

std::pair<double, double> PlatoonHeuristic::gains(const Strategy& strategy) const {
  return hold_equivalent_gains(strategy.temporal.get("k_h"), strategy.temporal.get("k_v"), params_.dt, hold_steps_);
}

Action PlatoonHeuristic::predecessor_estimate(const NeighborView& pred, int step, const PartitionedStats& mf,
                                              const Strategy& strategy) const {
  if (pred.id.index == 0) return leader_profile(scenario_, step, params_);
  // The predecessor's own headway is not visible; assume it steers toward
  // the mean speed of the agents in front of it. Its group summary holds
  // the predecessor itself once, at the same weight as every other member.
  const GroupStats* g = mf.group_of(pred.id);
  if (!g || g->stats.count < 2) return 0.0;
  const double n = static_cast<double>(g->stats.count);
  const double ahead = (n * g->stats.mean[0] - pred.values[0]) / (n - 1.0);
  return params_.action_space().clamp(gains(strategy).second * (ahead - pred.values[0]));
}

Action PlatoonHeuristic::propose_action(const Observation& obs, const Strategy& strategy, const PartitionedStats& mf) {
  if (obs.agent.index == 0) return leader_profile(scenario_, obs.step, params_);
  const auto* pred = find_relation(obs, kAhead);
  if (!pred) throw Error(ErrorCode::ReasonerFailure, "follower without predecessor view");
  const double ff = mf.empty() ? 0.0 : predecessor_estimate(*pred, obs.step, mf, strategy);
  return controller(pred->values[1], obs.own.at(0), pred->values[0], strategy, ff);
}

JointAction PlatoonHeuristic::propose_neighbor_actions(const Observation& obs, const Strategy& strategy,
                                                       Action self_action) {
  JointAction out;
  const double v = obs.own.at(0);
  for (const auto& nb : obs.neighbors) {
    if (nb.values.size() != 3) throw Error(ErrorCode::ReasonerFailure, "malformed neighbor view");
    if (nb.values[2] == kBehind) {
      out[nb.id] = controller(nb.values[1], nb.values[0], v, strategy, self_action);
    } else {
      out[nb.id] = predecessor_estimate(nb, obs.step, strategy.spatial.stats, strategy);
    }
  }
  return out;
}

Observation PlatoonHeuristic::predict_next_observation(const Observation& obs, const Strategy&,
                                                       const JointAction& joint) {
  if (obs.own.size() != 1) throw Error(ErrorCode::PredictionFailure, "platoon observation layout");
  const double dt = params_.dt;
  auto advance = [&](double v, double a) { return std::clamp(v + a * dt, 0.0, params_.v_max); };

  Observation next = obs;
  next.step = obs.step + 1;
  const double v = obs.own[0];
  const double v_next = advance(v, joint_action(joint, obs.agent));
  next.own[0] = v_next;
  const double self_travel = 0.5 * (v + v_next) * dt;
  for (auto& nb : next.neighbors) {
    if (nb.values.size() != 3) throw Error(ErrorCode::PredictionFailure, "malformed neighbor view");
    const double vm = nb.values[0];
    const double vm_next = advance(vm, joint_action(joint, nb.id));
    const double travel = 0.5 * (vm + vm_next) * dt;
    nb.values[0] = vm_next;
    nb.values[1] += nb.values[2] == kAhead ? travel - self_travel : self_travel - travel;
  }
  return next;
}

Strategy PlatoonHeuristic::revise_strategy(const Strategy& strategy, const RevisionSignal& signal) {
  Strategy out = strategy;
  const double cap = revision_cap(signal.drift);
  if (cap == 0.0) return out;
  for (const auto& d : signal.directives) {
    if (d == "oscillation") {
      out.temporal.parameters["k_h"] = strategy.temporal.get("k_h") * (1.0 - cap);
      out.temporal.parameters["k_v"] = strategy.temporal.get("k_v") * (1.0 + cap);
    } else if (d == "tracking-lag") {
      out.temporal.parameters["k_h"] = strategy.temporal.get("k_h") * (1.0 + cap);
    }
  }
  out.temporal.enforce_bounds();
  return out;
}

Action PlatoonHeuristic::unobservable_trend(const Observation& obs, const PartitionedStats& mf,
                                            const Strategy& strategy) {
  const MeanFieldStats merged = mf.merged();
  if (merged.empty()) return 0.0;
  return params_.action_space().clamp(gains(strategy).second * (merged.mean[0] - obs.own.at(0)));
}

std::vector<std::string> PlatoonHeuristic::diagnose(const DiagnosisInput& input, const Strategy&) {
  const auto h_prev = observed_headway(input.previous_observation);
  const auto h_cur = observed_headway(input.current_observation);
  if (!h_prev || !h_cur) return {};
  const double e_prev = *h_prev - params_.target_headway;
  const double e_cur = *h_cur - params_.target_headway;
  if (e_prev * e_cur < 0.0 && std::abs(e_cur) > 0.5) return {"oscillation"};
  if (std::abs(e_cur) > std::abs(e_prev)) return {"tracking-lag"};
  return {};
}

// ---- pandemic ----

PandemicHeuristic::PandemicHeuristic(PandemicParams params, double variance_reference)
    : HeuristicReasoner(variance_reference), params_(params) {
  params_.validate();
}

Strategy PandemicHeuristic::initial_strategy() {
  Strategy s;
  s.temporal.parameters = {{"escalate_above", 0.01}, {"relax_below", 0.001}};
  s.temporal.bounds = {{"escalate_above", {0.002, 0.05}}, {"relax_below", {0.0001, 0.005}}};
  s.temporal.directives = {"contain local infections", "keep regulation minimal"};
  return s;
}

int PandemicHeuristic::policy(int level, double fraction, const Strategy& strategy) const {
  if (fraction > strategy.temporal.get("escalate_above")) return std::min(level + 1, params_.max_level);
  if (fraction <= 0.0) return 0;
  if (fraction < strategy.temporal.get("relax_below")) return std::max(level - 1, 0);
  return level;
}

double PandemicHeuristic::neighbor_infected(const PartitionedStats& mf) const {
  const MeanFieldStats merged = mf.merged();
  return merged.empty() ? 0.0 : std::max(0.0, merged.mean[0]);
}

Action PandemicHeuristic::propose_action(const Observation& obs, const Strategy& strategy, const PartitionedStats& mf) {
  if (obs.own.size() != 8) throw Error(ErrorCode::ReasonerFailure, "pandemic observation layout");
  const double pressure =
      obs.own[kI] + params_.kappa * static_cast<double>(obs.neighbors.size()) * neighbor_infected(mf);
  return policy(static_cast<int>(obs.own[kLevel]), pressure / obs.own[kPopulation], strategy);
}

JointAction PandemicHeuristic::propose_neighbor_actions(const Observation& obs, const Strategy&, Action self_action) {
  JointAction out;
  for (const auto& nb : obs.neighbors) out[nb.id] = self_action;
  return out;
}

Observation PandemicHeuristic::predict_next_observation(const Observation& obs, const Strategy& strategy,
                                                        const JointAction& joint) {
  if (obs.own.size() != 8) throw Error(ErrorCode::PredictionFailure, "pandemic observation layout");
  const Action a = params_.action_space().clamp(joint_action(joint, obs.agent));
  const int level = static_cast<int>(a);
  NodeCompartments node{obs.own[kS], obs.own[kI], obs.own[kC], obs.own[kD], obs.own[kR]};
  const double pressure = node.infected + params_.kappa * static_cast<double>(obs.neighbors.size()) *
                                              neighbor_infected(strategy.spatial.stats);
  const NodeCompartments nx = expected_node_update(node, level, pressure, obs.own[kPopulation], params_);
  Observation next = obs;
  next.step = obs.step + 1;
  next.own[kS] = nx.susceptible;
  next.own[kI] = nx.infected;
  next.own[kC] = nx.critical;
  next.own[kD] = nx.dead;
  next.own[kR] = nx.recovered;
  next.own[kLevel] = level;
  return next;
}

Strategy PandemicHeuristic::revise_strategy(const Strategy& strategy, const RevisionSignal& signal) {
  Strategy out = strategy;
  const double cap = revision_cap(signal.drift);
  if (cap == 0.0) return out;
  for (const auto& d : signal.directives) {
    if (d == "infections rising") {
      out.temporal.parameters["escalate_above"] = strategy.temporal.get("escalate_above") * (1.0 - cap);
    }
  }
  out.temporal.enforce_bounds();
  return out;
}

Action PandemicHeuristic::revise_action(const Observation&, const Strategy&, Action rejected, int) {
  return params_.action_space().clamp(rejected + 1.0);
}

Action PandemicHeuristic::unobservable_trend(const Observation& obs, const PartitionedStats& mf,
                                             const Strategy& strategy) {
  const MeanFieldStats merged = mf.merged();
  if (merged.empty()) return obs.own.at(kLevel);
  return policy(static_cast<int>(obs.own.at(kLevel)), neighbor_infected(mf) / obs.own.at(kPopulation), strategy);
}

std::vector<std::string> PandemicHeuristic::diagnose(const DiagnosisInput& input, const Strategy&) {
  if (input.previous_observation.own.size() != 8 || input.current_observation.own.size() != 8) return {};
  if (input.current_observation.own[kI] > input.previous_observation.own[kI]) return {"infections rising"};
  return {};
}

}  // namespace mfn
