#include <gtest/gtest.h>

#include <random>

#include "fakes.hpp"
#include "mfn/platoon.hpp"
#include "oracles.hpp"

using namespace mfn;
using fakes::code_of;

namespace {

PlatoonState two_cars(double gap, double v_lead, double v_follow) {
  PlatoonState s;
  s.positions = {gap, 0.0};
  s.velocities = {v_lead, v_follow};
  s.step = 40;
  s.scenario = PlatoonScenario::CatchUp;
  return s;
}

Observation with_headway(double h) {
  Observation o;
  o.agent = AgentId(2);
  o.own = {15.0};
  o.neighbors = {{AgentId(1), {15.0, h, 1.0}}};
  return o;
}

}  // namespace

TEST(PlatoonStep, ExactKinematics) {
  PlatoonParams params;
  auto s = two_cars(20.0, 15.0, 15.0);
  const auto n = platoon_step(s, {{AgentId(1), 1.0}}, params);
  EXPECT_DOUBLE_EQ(n.velocities[1], 15.5);
  EXPECT_DOUBLE_EQ(n.positions[1], 7.625);
  EXPECT_DOUBLE_EQ(n.velocities[0], 15.0);  // leader cruising at step 40
  EXPECT_EQ(n.step, 41);
}

TEST(PlatoonStep, ZeroInputAndSpeedClamp) {
  PlatoonParams params;
  auto s = two_cars(20.0, 15.0, 14.0);
  auto n = platoon_step(s, {}, params);
  EXPECT_EQ(n.velocities, s.velocities);
  EXPECT_DOUBLE_EQ(n.headway(1), 20.0 + 0.5);
  s = two_cars(20.0, 15.0, 0.4);
  n = platoon_step(s, {{AgentId(1), -2.5}}, params);
  EXPECT_EQ(n.velocities[1], 0.0);
  EXPECT_DOUBLE_EQ(n.positions[1], oracle::kin_step(0.0, 0.4, -2.5, 0.5, 30.0).x);
  s = two_cars(20.0, 15.0, 29.5);
  n = platoon_step(s, {{AgentId(1), 2.5}}, params);
  EXPECT_EQ(n.velocities[1], 30.0);
}

TEST(PlatoonStep, LeaderIgnoresActionsAndRangeIsEnforced) {
  PlatoonParams params;
  auto s = two_cars(20.0, 12.0, 12.0);
  s.step = 0;
  const auto n = platoon_step(s, {{AgentId(0), -2.5}}, params);
  EXPECT_DOUBLE_EQ(n.velocities[0], 12.25);
  EXPECT_EQ(code_of([&] { platoon_step(s, {{AgentId(1), 3.0}}, params); }), ErrorCode::OutOfRangeAction);
  EXPECT_EQ(code_of([&] { platoon_step(s, {{AgentId(1), NAN}}, params); }), ErrorCode::OutOfRangeAction);
}

TEST(PlatoonStepProperty, MatchesKinematicOracle) {
  PlatoonParams params;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> acc(-2.5, 2.5), vel(0.0, 30.0);
  auto s = initial_platoon_state(PlatoonScenario::SlowDown, 6, params);
  for (int t = 0; t < 200; ++t) {
    for (auto& v : s.velocities) v = vel(rng);
    JointAction a;
    for (std::size_t n = 1; n < 6; ++n) a[AgentId(n)] = acc(rng);
    const auto next = platoon_step(s, a, params);
    for (std::size_t n = 0; n < 6; ++n) {
      const double an = n == 0 ? leader_profile(s.scenario, s.step, params) : a[AgentId(n)];
      const auto k = oracle::kin_step(s.positions[n], s.velocities[n], an, params.dt, params.v_max);
      EXPECT_NEAR(next.positions[n], k.x, 1e-9);
      EXPECT_NEAR(next.velocities[n], k.v, 1e-12);
    }
    s = next;
  }
}

TEST(LeaderProfile, Phases) {
  PlatoonParams params;
  EXPECT_GT(leader_profile(PlatoonScenario::CatchUp, 0, params), 0.0);
  EXPECT_GT(leader_profile(PlatoonScenario::CatchUp, 11, params), 0.0);
  EXPECT_EQ(leader_profile(PlatoonScenario::CatchUp, 12, params), 0.0);
  EXPECT_LT(leader_profile(PlatoonScenario::SlowDown, 0, params), 0.0);
  EXPECT_EQ(leader_profile(PlatoonScenario::SlowDown, 10, params), 0.0);
  // Both leaders settle at the 15 m/s cruise speed.
  for (auto sc : {PlatoonScenario::CatchUp, PlatoonScenario::SlowDown}) {
    auto s = initial_platoon_state(sc, 2, params);
    for (int t = 0; t < 40; ++t) s = platoon_step(s, {{AgentId(1), 0.0}}, params);
    EXPECT_NEAR(s.velocities[0], 15.0, 1e-12) << to_string(sc);
  }
}

TEST(InitialPlatoon, ScenarioLayouts) {
  PlatoonParams params;
  const auto c = initial_platoon_state(PlatoonScenario::CatchUp, 8, params);
  EXPECT_EQ(c.size(), 8u);
  EXPECT_DOUBLE_EQ(c.headway(1), 30.0);
  for (std::size_t n = 2; n < 8; ++n) EXPECT_DOUBLE_EQ(c.headway(n), 20.0);
  for (double v : c.velocities) EXPECT_EQ(v, 12.0);
  const auto d = initial_platoon_state(PlatoonScenario::SlowDown, 8, params);
  for (double v : d.velocities) EXPECT_EQ(v, 20.0);
  const auto j1 = initial_platoon_state(PlatoonScenario::SlowDown, 8, params, 7, 2.0);
  const auto j2 = initial_platoon_state(PlatoonScenario::SlowDown, 8, params, 7, 2.0);
  EXPECT_EQ(j1.positions, j2.positions);
  for (std::size_t n = 1; n < 8; ++n) EXPECT_LE(std::abs(j1.headway(n) - 20.0), 2.0);
  EXPECT_NE(j1.positions, d.positions);
  EXPECT_EQ(code_of([&] { initial_platoon_state(PlatoonScenario::CatchUp, 1, params); }), ErrorCode::InvalidParams);
}

TEST(PlatoonObserve, LocalSliceOnly) {
  PlatoonParams params;
  const auto s = initial_platoon_state(PlatoonScenario::CatchUp, 5, params);
  const auto mid = platoon_observe(s, AgentId(2));
  EXPECT_EQ(mid.own, std::vector<double>{12.0});
  ASSERT_EQ(mid.neighbors.size(), 2u);
  EXPECT_EQ(mid.neighbors[0].id, AgentId(1));
  EXPECT_EQ(mid.neighbors[0].values, (std::vector<double>{12.0, 20.0, 1.0}));
  EXPECT_EQ(mid.neighbors[1].id, AgentId(3));
  EXPECT_EQ(mid.neighbors[1].values, (std::vector<double>{12.0, 20.0, -1.0}));
  const auto first = platoon_observe(s, AgentId(1));
  EXPECT_EQ(first.neighbors[0].id, AgentId(0));
  EXPECT_DOUBLE_EQ(first.neighbors[0].values[1], 30.0);
  const auto tail = platoon_observe(s, AgentId(4));
  ASSERT_EQ(tail.neighbors.size(), 1u);
  EXPECT_EQ(tail.neighbors[0].values[2], 1.0);
  EXPECT_EQ(code_of([&] { platoon_observe(s, AgentId(5)); }), ErrorCode::UnknownAgent);
}

TEST(PlatoonObserveProperty, NeverExposesNonNeighbors) {
  PlatoonParams params;
  auto s = initial_platoon_state(PlatoonScenario::SlowDown, 10, params, 3, 1.0);
  for (int t = 0; t < 30; ++t) {
    for (std::size_t n = 0; n < s.size(); ++n) {
      const auto o = platoon_observe(s, AgentId(n));
      EXPECT_EQ(o.own.size(), 1u);
      for (const auto& nb : o.neighbors) {
        EXPECT_EQ(std::max(nb.id.index, n) - std::min(nb.id.index, n), 1u);
        EXPECT_EQ(nb.values.size(), 3u);
      }
    }
    s = platoon_step(s, {}, params);
  }
}

TEST(PlatoonEvaluate, RewardAndConstraints) {
  PlatoonParams params;
  EXPECT_DOUBLE_EQ(platoon_evaluate(two_cars(20.0, 15.0, 15.0), AgentId(1), params).reward, 0.0);
  const auto e = platoon_evaluate(two_cars(18.0, 15.0, 15.0), AgentId(1), params);
  EXPECT_DOUBLE_EQ(e.reward, -2.0);
  EXPECT_TRUE(e.verdict.passed);
  const auto crash = platoon_evaluate(two_cars(0.5, 15.0, 15.0), AgentId(1), params);
  EXPECT_FALSE(crash.verdict.passed);
  EXPECT_EQ(crash.verdict.violated_rule, "collision");
  EXPECT_FALSE(platoon_evaluate(two_cars(1.0, 15.0, 15.0), AgentId(1), params).verdict.passed);
  PlatoonParams weighted = params;
  weighted.alpha = 0.5;
  weighted.beta = 2.0;
  EXPECT_DOUBLE_EQ(platoon_evaluate(two_cars(24.0, 15.0, 16.0), AgentId(1), weighted).reward, -4.0);
}

TEST(PlatoonModel, ConstraintSets) {
  PlatoonParams params;
  PlatoonModel m(params);
  EXPECT_EQ(m.violation(with_headway(0.5), 0.0, ConstraintLevel::Strict), "headway");
  EXPECT_EQ(m.violation(with_headway(0.5), 0.0, ConstraintLevel::MinimumViability), "headway");
  auto o = with_headway(20.0);
  o.neighbors.push_back({AgentId(3), {15.0, 0.8, -1.0}});
  EXPECT_EQ(m.violation(o, 0.0, ConstraintLevel::Strict), "rear-headway");
  EXPECT_EQ(m.violation(o, 0.0, ConstraintLevel::MinimumViability), std::nullopt);
  o = with_headway(20.0);
  o.own[0] = 31.0;
  EXPECT_EQ(m.violation(o, 0.0, ConstraintLevel::MinimumViability), "speed-range");
  EXPECT_EQ(m.urgency(with_headway(20.0)), Urgency::Normal);
  EXPECT_EQ(m.urgency(with_headway(8.0)), Urgency::Warning);
  EXPECT_EQ(m.urgency(with_headway(3.0)), Urgency::Urgent);
  EXPECT_DOUBLE_EQ(m.reward(with_headway(18.0)), -2.0);
}

TEST(SafetyOverride, EmergencyBraking) {
  PlatoonParams params;
  auto [a, over] = safety_override(with_headway(20.0), 1.2, params);
  EXPECT_EQ(a, 1.2);
  EXPECT_FALSE(over);
  std::tie(a, over) = safety_override(with_headway(3.0), 1.2, params);
  EXPECT_EQ(a, -2.5);
  EXPECT_TRUE(over);
  std::tie(a, over) = safety_override(with_headway(5.0), 1.2, params);
  EXPECT_FALSE(over);
  std::tie(a, over) = safety_override(with_headway(4.8), 0.0, params);
  EXPECT_TRUE(over);
  EXPECT_NEAR(a, -0.5, 1e-12);
  // A harder planned brake is kept.
  std::tie(a, over) = safety_override(with_headway(4.8), -2.0, params);
  EXPECT_EQ(a, -2.0);
}

TEST(TrackingCorrection, ProportionalToDrift) {
  PlatoonParams params;
  const auto anchor = with_headway(20.0);
  EXPECT_EQ(tracking_correction(anchor, anchor, params), 0.0);
  auto now = with_headway(21.0);
  now.neighbors[0].values[0] = 16.0;
  EXPECT_NEAR(tracking_correction(now, anchor, params), 0.3 * 1.0 + 0.8 * 1.0, 1e-12);
  Observation leader;
  leader.own = {15.0};
  EXPECT_EQ(tracking_correction(leader, leader, params), 0.0);
}

TEST(PlatoonSpec, DeclaredRanges) {
  PlatoonParams params;
  const auto spec = platoon_spec(params);
  EXPECT_EQ(spec.action_space.min, -2.5);
  EXPECT_EQ(spec.action_space.max, 2.5);
  EXPECT_EQ(spec.targets.at("headway"), 20.0);
  EXPECT_EQ(spec.targets.at("velocity"), 15.0);
  const auto s = initial_platoon_state(PlatoonScenario::CatchUp, 4, params);
  const auto o = platoon_observe(s, AgentId(1));
  EXPECT_EQ(platoon_normalization(o, params).observation.size(), o.flatten().size());
}
