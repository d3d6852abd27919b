#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fakes.hpp"
#include "mfn/heuristics.hpp"
#include "mfn/platoon.hpp"
#include "mfn/rollout.hpp"

using namespace mfn;
using fakes::code_of;

namespace {

Trajectory with_rewards(std::initializer_list<double> rewards) {
  Trajectory t;
  for (double r : rewards) t.steps.push_back({Observation{}, 0.0, r});
  return t;
}

Proposal line_candidate(double x, Action a) {
  Proposal p;
  p.proposer = AgentId(0);
  p.observation = fakes::line_observation(0, x);
  p.self_action = a;
  return p;
}

// Four vehicles cruising at 15 m/s with 20 m gaps after the leader's
// acceleration phase has ended.
PlatoonState cruising_platoon() {
  PlatoonState s;
  s.positions = {60.0, 40.0, 20.0, 0.0};
  s.velocities = {15.0, 15.0, 15.0, 15.0};
  s.step = 40;
  s.scenario = PlatoonScenario::CatchUp;
  return s;
}

}  // namespace

TEST(CumulativeReward, DiscountedSum) {
  EXPECT_DOUBLE_EQ(cumulative_reward(with_rewards({0.7}), 0.9), 0.7);
  EXPECT_NEAR(cumulative_reward(with_rewards({0.5, 1.0, 1.0}), 0.9), 2.21, 1e-12);
  EXPECT_DOUBLE_EQ(cumulative_reward(with_rewards({-3.25, 0.0, 0.0}), 0.9), -3.25);
  EXPECT_DOUBLE_EQ(cumulative_reward(with_rewards({1.0, 1.0, 1.0}), 1.0), 3.0);
}

TEST(CumulativeReward, Errors) {
  EXPECT_EQ(code_of([] { cumulative_reward(Trajectory{}, 0.9); }), ErrorCode::EmptyTrajectory);
  EXPECT_EQ(code_of([] { cumulative_reward(with_rewards({1.0}), 0.0); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { cumulative_reward(with_rewards({1.0}), 1.5); }), ErrorCode::InvalidParams);
}

TEST(RolloutConfig, Validation) {
  EXPECT_NO_THROW(RolloutConfig{}.validate());
  EXPECT_NO_THROW((RolloutConfig{0, 0.9, 1}.validate()));
  EXPECT_EQ(code_of([] { RolloutConfig{-1, 0.9, 10}.validate(); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { RolloutConfig{2, 0.9, 0}.validate(); }), ErrorCode::InvalidParams);
}

TEST(VerifyRollout, ViolationAtSecondStepIsReported) {
  fakes::LineModel model;
  model.space = {-50.0, 50.0, false};
  fakes::ScriptedReasoner r;
  r.own_action = [](const Observation&) { return 30.0; };
  const auto out = verify_rollout(line_candidate(0.0, 2.0), model, r, Strategy{}, RolloutConfig{});
  EXPECT_FALSE(out.verdict.passed);
  ASSERT_TRUE(out.verdict.violated_step);
  EXPECT_EQ(*out.verdict.violated_step, 1);
  EXPECT_EQ(out.verdict.violated_rule, "viability");
  EXPECT_EQ(out.trajectory.steps.size(), 2u);
  EXPECT_EQ(out.trajectory.steps[1].reward, 0.0);
}

TEST(VerifyRollout, LaterStepsOnlyNeedViability) {
  // Step 1 lands at 15: outside the strict limit, inside the viability one.
  fakes::LineModel model;
  model.space = {-50.0, 50.0, false};
  fakes::ScriptedReasoner r;
  r.own_action = [](const Observation& o) { return o.own[0] < 5.0 ? 13.0 : 0.0; };
  const auto out = verify_rollout(line_candidate(0.0, 2.0), model, r, Strategy{}, RolloutConfig{});
  EXPECT_TRUE(out.verdict.passed);
  ASSERT_EQ(out.trajectory.steps.size(), 3u);
  EXPECT_DOUBLE_EQ(out.trajectory.steps[0].reward, -2.0);
  EXPECT_EQ(out.trajectory.steps[1].reward, 1.0);
  EXPECT_EQ(out.trajectory.steps[2].reward, 1.0);

  // The same state at the first step fails the strict set.
  const auto strict = verify_rollout(line_candidate(0.0, 15.0), model, r, Strategy{}, RolloutConfig{});
  EXPECT_FALSE(strict.verdict.passed);
  EXPECT_EQ(*strict.verdict.violated_step, 0);
  EXPECT_EQ(strict.verdict.violated_rule, "limit");
}

TEST(VerifyRollout, HorizonZeroIsOneStep) {
  fakes::LineModel model;
  fakes::ScriptedReasoner r;
  const auto out = verify_rollout(line_candidate(3.0, -1.0), model, r, Strategy{}, RolloutConfig{0, 0.9, 10});
  EXPECT_TRUE(out.verdict.passed);
  ASSERT_EQ(out.trajectory.steps.size(), 1u);
  EXPECT_DOUBLE_EQ(out.trajectory.steps[0].reward, -2.0);
}

TEST(VerifyRollout, PredictionFailurePropagates) {
  fakes::LineModel model;
  fakes::ScriptedReasoner r;
  r.fail_predictions = true;
  EXPECT_EQ(code_of([&] { verify_rollout(line_candidate(0.0, 0.0), model, r, Strategy{}, RolloutConfig{}); }),
            ErrorCode::PredictionFailure);
}

TEST(VerifyRollout, StablePlatoonPassesAllThreeChecks) {
  PlatoonParams params;
  PlatoonModel model(params);
  PlatoonHeuristic reasoner(params, PlatoonScenario::CatchUp);
  const auto state = cruising_platoon();
  Proposal p;
  p.proposer = AgentId(2);
  p.observation = platoon_observe(state, AgentId(2));
  p.self_action = 0.0;
  p.neighbor_actions = {{AgentId(1), 0.0}, {AgentId(3), 0.0}};
  const auto out = verify_rollout(p, model, reasoner, PlatoonHeuristic::initial_strategy(), RolloutConfig{});
  EXPECT_TRUE(out.verdict.passed);
  ASSERT_EQ(out.trajectory.steps.size(), 3u);
  EXPECT_NEAR(out.trajectory.steps[0].reward, 0.0, 1e-9);
  EXPECT_EQ(out.trajectory.steps[1].reward, 1.0);
  EXPECT_EQ(out.trajectory.steps[2].reward, 1.0);
}

TEST(VerifyRollout, HeadwayBelowMinimumFailsImmediately) {
  // Closing at 1.4 m/s from 1.2 m: predicted headway 1.2 - 0.7 = 0.5 m.
  PlatoonParams params;
  PlatoonModel model(params);
  PlatoonHeuristic reasoner(params, PlatoonScenario::CatchUp);
  Proposal p;
  p.proposer = AgentId(2);
  p.observation.agent = AgentId(2);
  p.observation.step = 40;
  p.observation.own = {15.0};
  p.observation.neighbors = {{AgentId(1), {13.6, 1.2, 1.0}}};
  p.self_action = 0.0;
  p.neighbor_actions = {{AgentId(1), 0.0}};
  const auto out = verify_rollout(p, model, reasoner, PlatoonHeuristic::initial_strategy(), RolloutConfig{});
  EXPECT_FALSE(out.verdict.passed);
  EXPECT_EQ(*out.verdict.violated_step, 0);
  EXPECT_EQ(out.verdict.violated_rule, "headway");
}

TEST(GenerateProposal, EquilibriumAcceptedOnFirstAttempt) {
  PlatoonParams params;
  PlatoonModel model(params);
  PlatoonHeuristic reasoner(params, PlatoonScenario::CatchUp);
  const auto obs = platoon_observe(cruising_platoon(), AgentId(2));
  const auto strategy = PlatoonHeuristic::initial_strategy();
  ProposalRequest req;
  req.agent = AgentId(2);
  req.observation = &obs;
  req.strategy = &strategy;
  req.reasoner = &reasoner;
  req.model = &model;
  const auto res = generate_proposal(req);
  EXPECT_TRUE(res.verified);
  EXPECT_EQ(res.attempts.size(), 1u);
  EXPECT_NEAR(res.proposal.self_action, 0.0, 1e-12);
  EXPECT_EQ(res.proposal.neighbor_actions.size(), 2u);
}

TEST(GenerateProposal, AdversarialModelUsesEveryAttempt) {
  fakes::AlwaysFailModel model;
  fakes::ScriptedReasoner r;
  r.own_action = [](const Observation&) { return 2.0; };
  const auto obs = fakes::line_observation(0, 1.0);
  const Strategy strategy;
  ProposalRequest req;
  req.agent = AgentId(0);
  req.observation = &obs;
  req.strategy = &strategy;
  req.reasoner = &r;
  req.model = &model;
  const auto res = generate_proposal(req);
  EXPECT_FALSE(res.verified);
  ASSERT_EQ(res.attempts.size(), 10u);
  double best = -INFINITY;
  for (const auto& a : res.attempts) best = std::max(best, a.reward);
  EXPECT_DOUBLE_EQ(res.proposal.rollout_reward, best);
  // The retreat toward zero brings x' = 1 + a closest to the target 0.
  EXPECT_DOUBLE_EQ(res.proposal.self_action, res.attempts.back().action);
}

TEST(GenerateProposal, RetreatFactorPerAttempt) {
  // x = 9 with limit 10: 2.5, 1.75 and 1.225 overshoot, 0.8575 fits.
  fakes::LineModel model;
  fakes::ScriptedReasoner r;
  r.own_action = [](const Observation& o) { return o.own[0] > 8.0 ? 2.5 : 0.0; };
  const auto obs = fakes::line_observation(0, 9.0);
  const Strategy strategy;
  ProposalRequest req;
  req.agent = AgentId(0);
  req.observation = &obs;
  req.strategy = &strategy;
  req.reasoner = &r;
  req.model = &model;
  const auto res = generate_proposal(req);
  EXPECT_TRUE(res.verified);
  ASSERT_EQ(res.attempts.size(), 4u);
  const double expected[] = {2.5, 1.75, 1.225, 0.8575};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(res.attempts[i].action, expected[i], 1e-12);
  EXPECT_FALSE(res.attempts[0].verdict.passed);
  EXPECT_TRUE(res.attempts[3].verdict.passed);
}

TEST(GenerateProposal, InitialActionSkipsTheReasonerProposal) {
  fakes::LineModel model;
  fakes::ScriptedReasoner r;
  const auto obs = fakes::line_observation(0, 2.0);
  const Strategy strategy;
  ProposalRequest req;
  req.agent = AgentId(0);
  req.observation = &obs;
  req.strategy = &strategy;
  req.reasoner = &r;
  req.model = &model;
  req.initial_action = 9.0;  // clamped into [-2.5, 2.5]
  const auto res = generate_proposal(req);
  EXPECT_DOUBLE_EQ(res.attempts.front().action, 2.5);
}

TEST(GenerateProposal, ReasonerSilentOnEveryAttempt) {
  fakes::LineModel model;
  fakes::ScriptedReasoner r;
  r.fail_proposals = true;
  const auto obs = fakes::line_observation(0, 0.0);
  const Strategy strategy;
  ProposalRequest req;
  req.agent = AgentId(0);
  req.observation = &obs;
  req.strategy = &strategy;
  req.reasoner = &r;
  req.model = &model;
  EXPECT_EQ(code_of([&] { generate_proposal(req); }), ErrorCode::NoCandidate);
  EXPECT_EQ(r.proposals.load(), 10);
}

TEST(GenerateProposal, ImmediateRewardGuardIsRecorded) {
  fakes::LineModel model;
  fakes::ScriptedReasoner r;
  const auto obs = fakes::line_observation(0, 4.0);
  const Strategy strategy;
  ProposalRequest req;
  req.agent = AgentId(0);
  req.observation = &obs;
  req.strategy = &strategy;
  req.reasoner = &r;
  req.model = &model;
  req.previous_immediate_reward = -1.0;  // -|4 - 2| = -2 falls short
  auto res = generate_proposal(req);
  EXPECT_FALSE(res.attempts.front().reward_guard_met);
  req.previous_immediate_reward = -3.0;
  res = generate_proposal(req);
  EXPECT_TRUE(res.attempts.front().reward_guard_met);
}

TEST(GenerateProposal, NeighborActionsRestrictedToObservedNeighbors) {
  fakes::LineModel model;
  fakes::ScriptedReasoner r;
  r.neighbor_action = [](const Observation&, AgentId) { return 7.0; };
  auto obs = fakes::line_observation(1, 0.0, {{0, 1.0}, {2, -1.0}});
  const Strategy strategy;
  ProposalRequest req;
  req.agent = AgentId(1);
  req.observation = &obs;
  req.strategy = &strategy;
  req.reasoner = &r;
  req.model = &model;
  const auto res = generate_proposal(req);
  ASSERT_EQ(res.proposal.neighbor_actions.size(), 2u);
  for (const auto& [id, a] : res.proposal.neighbor_actions) {
    EXPECT_NE(obs.neighbor(id), nullptr);
    EXPECT_DOUBLE_EQ(a, 2.5);
  }
}

TEST(GenerateProposalProperty, RandomizedLoopBoundAndConsistency) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-12.0, 12.0), act(-2.5, 2.5), lim(0.5, 12.0);
  for (int trial = 0; trial < 500; ++trial) {
    fakes::LineModel model;
    model.limit = lim(rng);
    model.viability_limit = model.limit + lim(rng);
    fakes::ScriptedReasoner r;
    const double push = act(rng);
    r.own_action = [push](const Observation&) { return push; };
    const auto obs = fakes::line_observation(0, pos(rng));
    const Strategy strategy;
    ProposalRequest req;
    req.agent = AgentId(0);
    req.observation = &obs;
    req.strategy = &strategy;
    req.reasoner = &r;
    req.model = &model;
    req.config.max_attempts = 1 + trial % 10;
    req.config.horizon = trial % 4;
    const auto res = generate_proposal(req);
    ASSERT_LE(res.attempts.size(), static_cast<std::size_t>(req.config.max_attempts));
    ASSERT_GE(res.attempts.size(), 1u);
    EXPECT_EQ(res.verified, res.proposal.verdict.passed);
    EXPECT_NEAR(res.proposal.rollout_reward, cumulative_reward(res.proposal.trajectory, req.config.discount), 1e-12);
    EXPECT_TRUE(std::isfinite(res.proposal.rollout_reward));
    for (std::size_t i = 1; i < res.proposal.trajectory.steps.size(); ++i) {
      const double ri = res.proposal.trajectory.steps[i].reward;
      EXPECT_TRUE(ri == 0.0 || ri == 1.0);
    }
    if (res.verified) {
      EXPECT_EQ(res.proposal.trajectory.steps.size(), static_cast<std::size_t>(req.config.horizon + 1));
    }
  }
}
