#include "mfn/platoon.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mfn/errors.hpp"

namespace mfn {

namespace {

constexpr double kAhead = 1.0;
constexpr double kBehind = -1.0;

void require_agent(const PlatoonState& s, AgentId n) {
  if (n.index >= s.size()) throw Error(ErrorCode::UnknownAgent, to_string(n));
}

const NeighborView* view_with_relation(const Observation& obs, double relation) {
  for (const auto& nb : obs.neighbors) {
    if (nb.values.size() == 3 && nb.values[2] == relation) return &nb;
  }
  return nullptr;
}

}  // namespace

std::string to_string(PlatoonScenario s) { return s == PlatoonScenario::CatchUp ? "catch-up" : "slow-down"; }

PlatoonScenario platoon_scenario_from_string(const std::string& s) {
  if (s == "catch-up") return PlatoonScenario::CatchUp;
  if (s == "slow-down") return PlatoonScenario::SlowDown;
  throw Error(ErrorCode::ValidationError, "unknown platoon scenario '" + s + "'");
}

void PlatoonParams::validate() const {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidParams, "dt must be positive");
  if (!(v_max > 0.0)) throw Error(ErrorCode::InvalidParams, "v_max must be positive");
  if (!(a_max > a_min)) throw Error(ErrorCode::InvalidParams, "a_max must exceed a_min");
  if (!(min_headway >= 0.0) || !(target_headway > min_headway)) throw Error(ErrorCode::InvalidParams, "headway targets");
  if (!(safety_threshold > min_headway)) throw Error(ErrorCode::InvalidParams, "safety threshold below h_min");
  if (steps < 1) throw Error(ErrorCode::InvalidParams, "steps must be >= 1");
}

double PlatoonState::headway(std::size_t n) const {
  if (n == 0 || n >= size()) throw Error(ErrorCode::UnknownAgent, "no predecessor for vehicle " + std::to_string(n));
  return positions[n - 1] - positions[n];
}

PlatoonState initial_platoon_state(PlatoonScenario scenario, std::size_t vehicles, const PlatoonParams& params,
                                   std::optional<std::uint64_t> seed, double jitter) {
  params.validate();
  if (vehicles < 2) throw Error(ErrorCode::InvalidParams, "a platoon needs at least two vehicles");
  PlatoonState s;
  s.scenario = scenario;
  s.positions.resize(vehicles);
  s.velocities.assign(vehicles, scenario == PlatoonScenario::CatchUp ? 12.0 : 20.0);

  std::optional<std::mt19937_64> rng;
  if (seed && jitter > 0.0) rng.emplace(*seed);
  std::uniform_real_distribution<double> noise(-jitter, jitter);

  s.positions[0] = 0.0;
  for (std::size_t n = 1; n < vehicles; ++n) {
    double gap = params.target_headway;
    if (scenario == PlatoonScenario::CatchUp && n == 1) gap += 10.0;
    if (rng) gap += noise(*rng);
    s.positions[n] = s.positions[n - 1] - gap;
  }
  return s;
}

Action leader_profile(PlatoonScenario scenario, int step, const PlatoonParams& params) {
  const double t = step * params.dt;
  switch (scenario) {
    case PlatoonScenario::CatchUp:
      return t < 6.0 ? 0.5 : 0.0;
    case PlatoonScenario::SlowDown:
      return t < 5.0 ? -1.0 : 0.0;
  }
  return 0.0;
}

PlatoonState platoon_step(const PlatoonState& state, const JointAction& actions, const PlatoonParams& params) {
  PlatoonState next = state;
  next.step = state.step + 1;
  for (std::size_t n = 0; n < state.size(); ++n) {
    double a = 0.0;
    if (n == 0) {
      a = leader_profile(state.scenario, state.step, params);
    } else if (auto it = actions.find(AgentId(n)); it != actions.end()) {
      a = it->second;
      if (!std::isfinite(a) || a < params.a_min - 1e-12 || a > params.a_max + 1e-12) {
        throw Error(ErrorCode::OutOfRangeAction, to_string(AgentId(n)) + " acceleration " + std::to_string(a));
      }
    }
    const double v = state.velocities[n];
    const double v_next = std::clamp(v + a * params.dt, 0.0, params.v_max);
    next.velocities[n] = v_next;
    // Equals x + v dt + a dt^2 / 2 unless the speed saturates.
    next.positions[n] = state.positions[n] + 0.5 * (v + v_next) * params.dt;
  }
  return next;
}

Observation platoon_observe(const PlatoonState& state, AgentId n) {
  require_agent(state, n);
  Observation obs;
  obs.agent = n;
  obs.step = state.step;
  obs.own = {state.velocities[n.index]};
  if (n.index > 0) {
    obs.neighbors.push_back({AgentId(n.index - 1), {state.velocities[n.index - 1], state.headway(n.index), kAhead}});
  }
  if (n.index + 1 < state.size()) {
    obs.neighbors.push_back(
        {AgentId(n.index + 1), {state.velocities[n.index + 1], state.headway(n.index + 1), kBehind}});
  }
  return obs;
}

Evaluation platoon_evaluate(const PlatoonState& state, AgentId n, const PlatoonParams& params) {
  require_agent(state, n);
  const double v = state.velocities[n.index];
  Evaluation e;
  e.reward = -params.beta * std::abs(v - params.target_velocity);
  if (n.index > 0) {
    const double h = state.headway(n.index);
    e.reward -= params.alpha * std::abs(h - params.target_headway);
    if (!(h > params.min_headway)) {
      e.verdict = ConstraintVerdict::fail(0, "collision");
      return e;
    }
  }
  if (v < 0.0 || v > params.v_max) e.verdict = ConstraintVerdict::fail(0, "speed-range");
  return e;
}

std::optional<double> observed_headway(const Observation& obs) {
  if (const auto* pred = view_with_relation(obs, kAhead)) return pred->values[1];
  return std::nullopt;
}

double tracking_correction(const Observation& now, const Observation& anchor, const PlatoonParams& params) {
  const auto* pn = view_with_relation(now, kAhead);
  const auto* pa = view_with_relation(anchor, kAhead);
  if (!pn || !pa || now.own.empty() || anchor.own.empty()) return 0.0;
  const double dh = pn->values[1] - pa->values[1];
  const double dclosing = (pn->values[0] - now.own[0]) - (pa->values[0] - anchor.own[0]);
  return params.tracking_gain_h * dh + params.tracking_gain_v * dclosing;
}

std::pair<Action, bool> safety_override(const Observation& obs, Action planned, const PlatoonParams& params) {
  const auto h = observed_headway(obs);
  if (!h || !(*h < params.safety_threshold)) return {planned, false};
  const double emergency =
      std::clamp(-params.emergency_gain * (params.safety_threshold - *h), params.a_min, 0.0);
  return {std::min(planned, emergency), true};
}

EnvironmentSpec platoon_spec(const PlatoonParams& params) {
  EnvironmentSpec spec;
  spec.name = "platoon";
  spec.objective = "keep every headway at the target gap and every velocity at the target speed without collisions";
  spec.targets = {{"headway", params.target_headway}, {"velocity", params.target_velocity}};
  spec.action_space = params.action_space();
  spec.strict_constraints = {"headway > h_min", "rear headway > h_min", "0 <= velocity <= v_max"};
  spec.viability_constraints = {"headway > h_min", "0 <= velocity <= v_max"};
  spec.reward_parameters = {{"alpha", params.alpha}, {"beta", params.beta}};
  return spec;
}

NormalizationBounds platoon_normalization(const Observation& obs, const PlatoonParams& params) {
  NormalizationBounds b;
  b.observation.push_back({0.0, params.v_max});
  for (std::size_t i = 0; i < obs.neighbors.size(); ++i) {
    b.observation.push_back({0.0, params.v_max});
    b.observation.push_back({0.0, 3.0 * params.target_headway});
    b.observation.push_back({-1.0, 1.0});
  }
  b.action = {params.a_min, params.a_max};
  return b;
}

PlatoonModel::PlatoonModel(PlatoonParams params) : params_(params) { params_.validate(); }

double PlatoonModel::reward(const Observation& obs) const {
  if (obs.own.empty()) throw Error(ErrorCode::DimensionMismatch, "platoon observation without velocity");
  double r = -params_.beta * std::abs(obs.own[0] - params_.target_velocity);
  if (auto h = observed_headway(obs)) r -= params_.alpha * std::abs(*h - params_.target_headway);
  return r;
}

std::optional<std::string> PlatoonModel::violation(const Observation& obs, Action, ConstraintLevel level) const {
  if (auto h = observed_headway(obs); h && !(*h > params_.min_headway)) return "headway";
  const double v = obs.own.at(0);
  if (v < 0.0 || v > params_.v_max) return "speed-range";
  if (level == ConstraintLevel::MinimumViability) return std::nullopt;
  if (const auto* fol = view_with_relation(obs, kBehind); fol && !(fol->values[1] > params_.min_headway)) {
    return "rear-headway";
  }
  return std::nullopt;
}

Urgency PlatoonModel::urgency(const Observation& obs) const {
  const auto h = observed_headway(obs);
  if (!h) return Urgency::Normal;
  if (*h < params_.safety_threshold) return Urgency::Urgent;
  if (*h < 0.5 * params_.target_headway) return Urgency::Warning;
  return Urgency::Normal;
}

std::vector<double> PlatoonModel::mean_field_state(const Observation& obs) const { return {obs.own.at(0)}; }

std::vector<std::pair<AgentId, std::vector<double>>> PlatoonModel::observed_neighbor_states(
    const Observation& obs) const {
  std::vector<std::pair<AgentId, std::vector<double>>> out;
  for (const auto& nb : obs.neighbors) out.push_back({nb.id, {nb.values.at(0)}});
  return out;
}

}  // namespace mfn
