#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "fakes.hpp"
#include "mfn/negotiation.hpp"
#include "mfn/wire.hpp"

using namespace mfn;
using fakes::code_of;

namespace {

Proposal make_proposal(std::size_t id, Action self, JointAction others = {}, double reward = 0.0) {
  Proposal p;
  p.proposer = AgentId(id);
  p.self_action = self;
  p.neighbor_actions = std::move(others);
  p.rollout_reward = reward;
  return p;
}

// Agents on a chain, each with a LineModel and its own scripted reasoner.
struct LineWorld {
  Topology topology;
  fakes::LineModel model;
  std::vector<std::unique_ptr<fakes::ScriptedReasoner>> reasoners;
  std::vector<AgentContext> contexts;

  LineWorld(Topology t, const std::vector<double>& xs) : topology(std::move(t)) {
    for (std::size_t i = 0; i < xs.size(); ++i) reasoners.push_back(std::make_unique<fakes::ScriptedReasoner>());
    reset(xs);
  }

  void reset(const std::vector<double>& xs) {
    contexts.clear();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      std::vector<std::pair<std::size_t, double>> nbs;
      if (topology.agent_count() > 1) {
        for (AgentId m : topology.neighbors(AgentId(i))) nbs.push_back({m.index, xs[m.index]});
      }
      AgentContext c;
      c.id = AgentId(i);
      c.observation = fakes::line_observation(i, xs[i], nbs);
      c.reasoner = reasoners[i].get();
      c.model = &model;
      contexts.push_back(std::move(c));
    }
  }

  NegotiationOutcome run(const NegotiationConfig& cfg = {}, CommStats* comm = nullptr) {
    return negotiate(contexts, topology, cfg, 0, comm);
  }
};

}  // namespace

TEST(ConsensusDelta, ScalesWithRange) {
  EXPECT_NEAR(consensus_delta({0.02, -2.5, 2.5, false}), 0.1, 1e-15);
  EXPECT_EQ(consensus_delta({0.02, 0.0, 4.0, true}), 0.0);
  EXPECT_EQ(consensus_delta({0.0, -2.5, 2.5, false}), 0.0);
  EXPECT_EQ(code_of([] { consensus_delta({-0.1, -2.5, 2.5, false}); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([] { consensus_delta({0.02, 1.0, 1.0, false}); }), ErrorCode::InvalidParams);
}

TEST(CheckConsensus, ComparesSharedComponents) {
  const auto a = make_proposal(0, 0.5, {{AgentId(1), 0.2}});
  const auto same = make_proposal(1, 0.2, {{AgentId(0), 0.5}});
  EXPECT_TRUE(check_consensus(a, std::vector{same}, 0.1));
  const auto off = make_proposal(1, 0.2, {{AgentId(0), 0.65}});
  EXPECT_FALSE(check_consensus(a, std::vector{off}, 0.1));
  const auto their_self_off = make_proposal(1, 0.35, {{AgentId(0), 0.5}});
  EXPECT_FALSE(check_consensus(a, std::vector{their_self_off}, 0.1));
  EXPECT_TRUE(check_consensus(a, std::vector<Proposal>{}, 0.1));
}

TEST(CheckConsensus, StrictInequalityAndDiscreteEquality) {
  const auto a = make_proposal(0, 2.0, {{AgentId(1), 2.0}});
  EXPECT_TRUE(check_consensus(a, std::vector{make_proposal(1, 2.0, {{AgentId(0), 2.0}})}, 0.0));
  EXPECT_FALSE(check_consensus(a, std::vector{make_proposal(1, 2.0, {{AgentId(0), 3.0}})}, 0.0));
  // Exactly delta apart does not agree.
  EXPECT_FALSE(actions_agree(0.0, 0.5, 0.5));
  EXPECT_TRUE(actions_agree(0.0, 0.49, 0.5));
}

TEST(CheckConsensus, IncomparableProposals) {
  const auto a = make_proposal(0, 1.0, {{AgentId(5), 0.0}});
  const auto b = make_proposal(1, 1.0, {{AgentId(6), 0.0}});
  EXPECT_EQ(code_of([&] { check_consensus(a, std::vector{b}, 0.1); }), ErrorCode::IncomparableProposals);
}

TEST(BlendCandidate, ConvexCombination) {
  const ActionSpace space{-2.5, 2.5, false};
  EXPECT_NEAR(blend_candidate({0.5, 0.3, 0.2}, 1.0, 2.0, 0.0, space), 1.1, 1e-12);
  EXPECT_DOUBLE_EQ(blend_candidate({1.0, 0.0, 0.0}, -0.7, 2.0, 1.0, space), -0.7);
  EXPECT_DOUBLE_EQ(blend_candidate({0.2, 0.8, 0.0}, 2.5, 10.0, 0.0, space), 2.5);
  EXPECT_EQ(code_of([&] { blend_candidate({0.5, 0.5, 0.5}, 0, 0, 0, space); }), ErrorCode::WeightsNotNormalized);
  EXPECT_EQ(code_of([] { blend_candidate({1, 0, 0}, 0, 0, 0, ActionSpace{0, 4, true}); }), ErrorCode::DiscreteDomain);
}

TEST(SelectByWeight, LargestWeightWins) {
  EXPECT_EQ(select_by_weight({0.2, 0.5, 0.3}, 1, 2, 3), 2);
  EXPECT_EQ(select_by_weight({0.2, 0.3, 0.5}, 1, 2, 3), 3);
  EXPECT_EQ(select_by_weight({0.4, 0.4, 0.2}, 1, 2, 3), 1);
  EXPECT_EQ(code_of([] { select_by_weight({0.1, 0.1, 0.1}, 1, 2, 3); }), ErrorCode::WeightsNotNormalized);
}

TEST(ConfidenceScores, SoftmaxComposedWithWeights) {
  const auto own = make_proposal(0, 0.0, {}, 1.0);
  const std::vector nbs{make_proposal(1, 0.0, {}, 0.0), make_proposal(2, 0.0, {}, 2.0)};
  const ConfidenceWeights w{0.6, 0.4, 0.0};
  const auto c = confidence_scores(own, nbs, w);
  const double z = std::exp(1.0) + std::exp(0.0) + std::exp(2.0);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_NEAR(c[0], 0.6 * std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(c[1], 0.4 * std::exp(0.0) / z, 1e-12);
  EXPECT_NEAR(c[2], 0.4 * std::exp(2.0) / z, 1e-12);
}

TEST(ConfidenceScores, NonFiniteRewardsScoreZero) {
  const auto own = make_proposal(0, 0.0, {}, -INFINITY);
  const std::vector nbs{make_proposal(1, 0.0, {}, 5.0)};
  const auto c = confidence_scores(own, nbs, {0.6, 0.4, 0.0});
  EXPECT_EQ(c[0], 0.0);
  EXPECT_NEAR(c[1], 0.4, 1e-12);
  // Large rewards do not overflow.
  const auto big = confidence_scores(make_proposal(0, 0, {}, 1e6), std::vector{make_proposal(1, 0, {}, 1e6)},
                                     {0.5, 0.5, 0.0});
  EXPECT_NEAR(big[0], 0.25, 1e-12);
}

TEST(FinalizeDecision, WeightedMeanAndTies) {
  const ActionSpace cont{-2.5, 2.5, false};
  const auto own = make_proposal(0, 1.0);
  EXPECT_DOUBLE_EQ(finalize_decision(own, std::vector<Proposal>{}, std::vector{0.3}, cont), 1.0);
  const std::vector nb{make_proposal(1, 0.0, {{AgentId(0), 3.0}})};
  EXPECT_NEAR(finalize_decision(own, nb, std::vector{0.75, 0.25}, cont), 1.5, 1e-12);

  const ActionSpace disc{0.0, 4.0, true};
  const auto own3 = make_proposal(3, 2.0);
  const std::vector nbs{make_proposal(1, 0.0, {{AgentId(3), 4.0}}), make_proposal(4, 0.0, {{AgentId(3), 1.0}})};
  EXPECT_EQ(finalize_decision(own3, nbs, std::vector{0.4, 0.4, 0.4}, disc), 4.0);
  EXPECT_EQ(finalize_decision(own3, nbs, std::vector{0.5, 0.4, 0.4}, disc), 2.0);

  EXPECT_EQ(code_of([&] { finalize_decision(own, nb, std::vector{0.0, 0.0}, cont); }), ErrorCode::AllZeroConfidence);
  EXPECT_EQ(code_of([&] { finalize_decision(own, nb, std::vector{1.0}, cont); }), ErrorCode::LengthMismatch);
}

TEST(Negotiate, SingleAgentKeepsItsProposal) {
  LineWorld w(Topology::single_agent(), {2.0});
  const auto out = w.run();
  EXPECT_EQ(out.record.rounds_used, 1);
  EXPECT_TRUE(out.record.converged);
  EXPECT_DOUBLE_EQ(out.final_actions.at(AgentId(0)), -1.0);
}

TEST(Negotiate, EarlyStopWhenInitialProposalsAgree) {
  // Every agent proposes 0 for itself and for everyone else.
  LineWorld w(make_chain(4), {0.0, 0.0, 0.0, 0.0});
  CommStats comm(4);
  const auto out = w.run({}, &comm);
  EXPECT_EQ(out.record.rounds_used, 1);
  EXPECT_TRUE(out.record.converged);
  for (const auto& a : out.record.rounds[0].agents) {
    EXPECT_TRUE(a.consensus);
    EXPECT_FALSE(a.regenerated);
  }
  EXPECT_EQ(comm.total_messages(), 6u);
  EXPECT_EQ(comm.total_bytes(), 6 * message_wire_size(1));
}

TEST(Negotiate, PersistentDisagreementStopsAtRoundLimit) {
  LineWorld w(make_chain(5), {1.0, -2.0, 3.0, 0.5, -1.0});
  for (auto& r : w.reasoners) {
    r->own_action = [](const Observation&) { return 1.0; };
    r->neighbor_action = [](const Observation&, AgentId) { return -1.0; };
  }
  const auto out = w.run();
  EXPECT_EQ(out.record.rounds_used, 3);
  EXPECT_FALSE(out.record.converged);
  EXPECT_EQ(out.record.rounds.size(), 3u);
  // No regeneration on the last round.
  for (const auto& a : out.record.rounds[2].agents) EXPECT_FALSE(a.regenerated);
  for (const auto& [id, a] : out.final_actions) EXPECT_TRUE(w.model.space.contains(a));
}

TEST(Negotiate, StatisticsReachOneMoreHopEachRound) {
  LineWorld w(make_chain(6), {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
  for (auto& r : w.reasoners) {
    r->own_action = [](const Observation&) { return 1.0; };
    r->neighbor_action = [](const Observation&, AgentId) { return -1.0; };
  }
  NegotiationConfig cfg;
  cfg.max_rounds = 3;
  const auto out = w.run(cfg);
  ASSERT_EQ(out.record.rounds.size(), 3u);
  EXPECT_EQ(out.record.initial[0].merged.count, 1u);
  for (int r = 1; r <= 3; ++r) {
    const auto& merged = out.record.rounds[r - 1].agents[0].merged;
    // Agents 1..r+1, unit weights.
    EXPECT_EQ(merged.count, static_cast<std::size_t>(r + 1)) << "round " << r;
    EXPECT_DOUBLE_EQ(merged.total_weight, r + 1.0);
    EXPECT_NEAR(merged.mean[0], (r + 2) / 2.0, 1e-12);
  }
}

TEST(Negotiate, RejectsMismatchedContexts) {
  LineWorld w(make_chain(3), {0, 0, 0});
  EXPECT_EQ(code_of([&] { negotiate(w.contexts, make_chain(4), NegotiationConfig{}); }), ErrorCode::InvalidParams);
  std::swap(w.contexts[0], w.contexts[1]);
  EXPECT_EQ(code_of([&] { w.run(); }), ErrorCode::InvalidParams);
  NegotiationConfig bad;
  bad.max_rounds = 0;
  w.reset({0, 0, 0});
  EXPECT_EQ(code_of([&] { w.run(bad); }), ErrorCode::InvalidParams);
}

TEST(Negotiate, FailingAgentFallsBack) {
  LineWorld w(make_chain(3), {1.0, 2.0, 3.0});
  w.reasoners[1]->fail_proposals = true;
  w.contexts[1].fallback_action = 0.25;
  const auto out = w.run();
  ASSERT_TRUE(out.record.initial[1].error);
  EXPECT_DOUBLE_EQ(out.record.initial[1].action, 0.25);
  EXPECT_EQ(out.final_actions.size(), 3u);
  for (const auto& [id, a] : out.final_actions) EXPECT_TRUE(std::isfinite(a));
}

TEST(Negotiate, ParallelRoundsMatchSequential) {
  const std::vector<double> xs{4.0, -3.0, 2.0, -1.0, 0.5, 6.0, -2.0};
  auto configure = [](LineWorld& w) {
    for (auto& r : w.reasoners) {
      r->neighbor_action = [](const Observation& o, AgentId id) { return 0.3 * o.neighbor(id)->values[0]; };
    }
  };
  LineWorld a(make_chain(7), xs), b(make_chain(7), xs);
  configure(a);
  configure(b);
  NegotiationConfig seq, par;
  par.parallelism = 4;
  const auto x = a.run(seq), y = b.run(par);
  EXPECT_EQ(x.final_actions, y.final_actions);
  EXPECT_EQ(x.record.rounds_used, y.record.rounds_used);
}

TEST(NegotiateProperty, BoundedAndMonotoneOnRandomGraphs) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(-8.0, 8.0), gain(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 9;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 1; i < n; ++i) edges.push_back({std::uniform_int_distribution<std::size_t>(0, i - 1)(rng), i});
    std::vector<double> xs(n);
    for (auto& x : xs) x = pos(rng);
    LineWorld w(build_topology(n, edges), xs);
    for (auto& r : w.reasoners) {
      const double g = gain(rng), h = gain(rng);
      r->own_action = [g](const Observation& o) { return g * o.own[0]; };
      r->neighbor_action = [h](const Observation& o, AgentId id) { return h * o.neighbor(id)->values[0]; };
      r->weights = {0.5, 0.3, 0.2};
    }
    NegotiationConfig cfg;
    cfg.max_rounds = 1 + trial % 3;
    const auto out = w.run(cfg);
    ASSERT_LE(out.record.rounds_used, cfg.max_rounds);
    ASSERT_EQ(out.record.rounds.size(), static_cast<std::size_t>(out.record.rounds_used));
    for (std::size_t i = 0; i < n; ++i) {
      double prev = out.record.initial[i].rollout_reward;
      for (const auto& round : out.record.rounds) {
        EXPECT_GE(round.agents[i].rollout_reward, prev) << "trial " << trial << " agent " << i;
        EXPECT_LE(round.agents[i].attempts, 10);
        prev = round.agents[i].rollout_reward;
      }
      EXPECT_TRUE(w.model.space.contains(out.final_actions.at(AgentId(i))));
      if (const auto& wts = out.record.rounds.back().agents[i].weights) {
        EXPECT_TRUE(wts->normalized());
      }
      double total = 0.0;
      for (double c : out.record.confidences[i]) total += c;
      EXPECT_GT(total, 0.0);
    }
  }
}
