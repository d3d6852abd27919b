#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfn/environment.hpp"
#include "mfn/introspection.hpp"
#include "mfn/proposal.hpp"
#include "mfn/rollout.hpp"

namespace mfn {

// Single-lane vehicle platoon. Vehicle 0 leads and follows a scripted
// acceleration profile; vehicles 1.. are agents. Positions are bumper
// positions, so a headway is the bumper-to-bumper gap to the predecessor.
//
// Observation layout:
//   own             = [velocity]
//   predecessor     = [velocity, headway to it, +1]
//   follower        = [velocity, its headway to us, -1]

enum class PlatoonScenario { CatchUp, SlowDown };

std::string to_string(PlatoonScenario s);
PlatoonScenario platoon_scenario_from_string(const std::string& s);

struct PlatoonParams {
  double dt = 0.5;
  double v_max = 30.0;
  double target_headway = 20.0;
  double target_velocity = 15.0;
  double min_headway = 1.0;
  double alpha = 1.0;  // headway reward weight
  double beta = 1.0;   // velocity reward weight
  double a_min = -2.5;
  double a_max = 2.5;
  double safety_threshold = 5.0;
  double emergency_gain = 2.5;
  // Proportional gains of the execution layer between decision epochs.
  double tracking_gain_h = 0.3;
  double tracking_gain_v = 0.8;
  int steps = 120;

  void validate() const;
  ActionSpace action_space() const noexcept { return {a_min, a_max, false}; }
};

struct PlatoonState {
  std::vector<double> positions;
  std::vector<double> velocities;
  int step = 0;
  PlatoonScenario scenario = PlatoonScenario::CatchUp;

  std::size_t size() const noexcept { return positions.size(); }
  // Gap from vehicle n to its predecessor; n >= 1.
  double headway(std::size_t n) const;
};

// Catch-up: all vehicles at 12 m/s and 20 m apart except a 30 m gap behind
// the leader; the leader gains 0.5 m/s^2 for 6 s to cruise at 15 m/s.
// Slow-down: all at 20 m/s, 20 m apart; the leader brakes at 1 m/s^2 for 5 s.
// A seed adds up to +-jitter metres to each initial gap.
PlatoonState initial_platoon_state(PlatoonScenario scenario, std::size_t vehicles, const PlatoonParams& params,
                                   std::optional<std::uint64_t> seed = std::nullopt, double jitter = 0.0);

Action leader_profile(PlatoonScenario scenario, int step, const PlatoonParams& params);

// Advances one step. `actions` holds follower accelerations (the leader entry,
// if present, is ignored). Missing followers hold speed.
PlatoonState platoon_step(const PlatoonState& state, const JointAction& actions, const PlatoonParams& params);

Observation platoon_observe(const PlatoonState& state, AgentId n);

Evaluation platoon_evaluate(const PlatoonState& state, AgentId n, const PlatoonParams& params);

// Headway taken from the predecessor view of an observation, if present.
std::optional<double> observed_headway(const Observation& obs);

// Execution-layer correction between decision epochs: proportional tracking of
// how headway and closing speed drifted since the observation `anchor` taken
// at the last epoch. Zero when `now` equals `anchor`.
double tracking_correction(const Observation& now, const Observation& anchor, const PlatoonParams& params);

// Below the safety threshold the planned action is replaced by
// clamp(-gain * (threshold - h), a_min, 0), or kept when it already brakes harder.
std::pair<Action, bool> safety_override(const Observation& obs, Action planned, const PlatoonParams& params);

EnvironmentSpec platoon_spec(const PlatoonParams& params);

// Per-component normalization ranges matching the observation layout.
NormalizationBounds platoon_normalization(const Observation& obs, const PlatoonParams& params);

class PlatoonModel : public EnvironmentModel {
 public:
  explicit PlatoonModel(PlatoonParams params);

  ActionSpace action_space() const override { return params_.action_space(); }
  double reward(const Observation& obs) const override;
  std::optional<std::string> violation(const Observation& obs, Action action, ConstraintLevel level) const override;
  Urgency urgency(const Observation& obs) const override;
  std::vector<double> mean_field_state(const Observation& obs) const override;
  std::vector<std::pair<AgentId, std::vector<double>>> observed_neighbor_states(const Observation& obs) const override;

  const PlatoonParams& params() const noexcept { return params_; }

 private:
  PlatoonParams params_;
};

}  // namespace mfn
