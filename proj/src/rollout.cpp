#include "mfn/rollout.hpp"

#include <cmath>
#include <limits>
#include <spdlog/spdlog.h>

#include "mfn/errors.hpp"

namespace mfn {

Urgency EnvironmentModel::urgency(const Observation&) const { return Urgency::Normal; }

std::vector<std::pair<AgentId, std::vector<double>>> EnvironmentModel::observed_neighbor_states(
    const Observation&) const {
  return {};
}

void RolloutConfig::validate() const {
  if (horizon < 0) throw Error(ErrorCode::InvalidParams, "rollout horizon must be >= 0");
  if (!(discount > 0.0 && discount <= 1.0)) throw Error(ErrorCode::InvalidParams, "discount must lie in (0, 1]");
  if (max_attempts < 1) throw Error(ErrorCode::InvalidParams, "max_attempts must be >= 1");
}

double cumulative_reward(const Trajectory& trajectory, double discount) {
  if (trajectory.steps.empty()) throw Error(ErrorCode::EmptyTrajectory, "no steps");
  if (!(discount > 0.0 && discount <= 1.0)) throw Error(ErrorCode::InvalidParams, "discount must lie in (0, 1]");
  double total = 0.0;
  double factor = 1.0;
  for (const auto& step : trajectory.steps) {
    total += factor * step.reward;
    factor *= discount;
  }
  return total;
}

RolloutOutcome verify_rollout(const Proposal& candidate, const EnvironmentModel& model, Reasoner& reasoner,
                              const Strategy& strategy, const RolloutConfig& cfg) {
  cfg.validate();
  const ActionSpace space = model.action_space();
  RolloutOutcome out;

  Observation obs = candidate.observation;
  Action action = candidate.self_action;
  JointAction neighbor_actions = candidate.neighbor_actions;

  for (int step = 0; step <= cfg.horizon; ++step) {
    JointAction joint = neighbor_actions;
    joint[obs.agent] = action;

    Observation next;
    try {
      next = reasoner.predict_next_observation(obs, strategy, joint);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ReasonerFailure || e.code() == ErrorCode::PredictionFailure) {
        throw Error(ErrorCode::PredictionFailure, e.what());
      }
      throw;
    }

    const auto level = step == 0 ? ConstraintLevel::Strict : ConstraintLevel::MinimumViability;
    auto rule = model.violation(next, action, level);
    double reward = 0.0;
    if (step == 0) {
      reward = model.reward(next);
    } else {
      reward = rule ? 0.0 : 1.0;
    }
    out.trajectory.steps.push_back({obs, action, reward});
    if (rule) {
      out.verdict = ConstraintVerdict::fail(step, *rule);
      return out;
    }
    if (step == cfg.horizon) break;

    obs = std::move(next);
    action = space.clamp(reasoner.propose_action(obs, strategy, strategy.spatial.stats));
    neighbor_actions = reasoner.propose_neighbor_actions(obs, strategy, action);
  }
  out.verdict = ConstraintVerdict::pass();
  return out;
}

namespace {

// Keeps only actions addressed to observable neighbors, clamped into range.
JointAction restrict_to_neighbors(const JointAction& proposed, const Observation& obs, const ActionSpace& space) {
  JointAction out;
  for (const auto& [id, a] : proposed) {
    if (obs.neighbor(id)) out[id] = space.clamp(a);
  }
  return out;
}

}  // namespace

ProposalResult generate_proposal(const ProposalRequest& req) {
  if (!req.observation || !req.strategy || !req.reasoner || !req.model) {
    throw Error(ErrorCode::InvalidParams, "incomplete proposal request");
  }
  req.config.validate();
  const Observation& obs = *req.observation;
  const PartitionedStats empty_mf;
  const PartitionedStats& mf = req.mean_field ? *req.mean_field : empty_mf;
  const ActionSpace space = req.model->action_space();
  Reasoner& reasoner = *req.reasoner;

  ProposalResult result;
  std::optional<Proposal> best;
  // Current candidate action; unset until the reasoner or caller supplies one.
  bool have_action = req.initial_action.has_value();
  Action action = have_action ? space.clamp(*req.initial_action) : 0.0;
  bool guard_reported = false;

  for (int attempt = 0; attempt < req.config.max_attempts; ++attempt) {
    AttemptRecord record;
    record.attempt = attempt;
    try {
      if (!have_action) {
        action = space.clamp(reasoner.propose_action(obs, *req.strategy, mf));
        have_action = true;
      }
      record.action = action;

      Proposal candidate;
      candidate.proposer = req.agent;
      candidate.observation = obs;
      candidate.self_action = action;
      candidate.neighbor_actions =
          restrict_to_neighbors(reasoner.propose_neighbor_actions(obs, *req.strategy, action), obs, space);
      candidate.round = req.round;
      candidate.urgency = req.model->urgency(obs);

      auto outcome = verify_rollout(candidate, *req.model, reasoner, *req.strategy, req.config);
      candidate.trajectory = std::move(outcome.trajectory);
      candidate.verdict = outcome.verdict;
      candidate.rollout_reward = cumulative_reward(candidate.trajectory, req.config.discount);

      record.verdict = candidate.verdict;
      record.reward = candidate.rollout_reward;
      if (req.previous_immediate_reward) {
        record.reward_guard_met = candidate.trajectory.steps.front().reward >= *req.previous_immediate_reward;
      }
      result.attempts.push_back(record);

      if (candidate.verdict.passed) {
        result.proposal = std::move(candidate);
        result.verified = true;
        return result;
      }
      if (!best || candidate.rollout_reward > best->rollout_reward) best = std::move(candidate);
      action = space.clamp(reasoner.revise_action(obs, *req.strategy, action, attempt + 1));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ReasonerFailure && e.code() != ErrorCode::PredictionFailure) throw;
      record.verdict = ConstraintVerdict::fail(0, "reasoner-failure");
      record.reward = -std::numeric_limits<double>::infinity();
      result.attempts.push_back(record);
      spdlog::warn("{}: attempt {} failed: {}", to_string(req.agent), attempt, e.what());
      if (have_action) {
        try {
          action = space.clamp(reasoner.revise_action(obs, *req.strategy, action, attempt + 1));
        } catch (const Error&) {
          have_action = false;
        }
      }
    }
    guard_reported = guard_reported || !record.reward_guard_met;
  }

  if (!best) throw Error(ErrorCode::NoCandidate, to_string(req.agent) + ": no usable candidate in " +
                                                     std::to_string(req.config.max_attempts) + " attempts");
  if (guard_reported) {
    spdlog::debug("{}: immediate-reward guard dropped after {} attempts", to_string(req.agent), req.config.max_attempts);
  }
  result.proposal = std::move(*best);
  return result;
}

}  // namespace mfn
