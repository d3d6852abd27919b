#pragma once

#include <optional>
#include <vector>

namespace mfn {

struct PlatoonMetrics {
  double rmse_h = 0.0;
  double rmse_v = 0.0;
  double sd_h = 0.0;
  double sd_v = 0.0;
};

// Follower headways and velocities per time step t = 1..T, plus the
// leader's velocity at the same steps.
struct PlatoonTrace {
  std::vector<std::vector<double>> headways;    // [t][follower]
  std::vector<std::vector<double>> velocities;  // [t][follower]
  std::vector<double> leader_velocity;          // [t]
};

// RMSE over all follower-step pairs against h* and the leader velocity;
// SD is the time average of the population standard deviation across
// followers. Throws IncompleteLog on empty, ragged or short traces.
PlatoonMetrics compute_platoon_metrics(const PlatoonTrace& trace, double target_headway,
                                       std::optional<std::size_t> expected_steps = std::nullopt);

struct PandemicMetrics {
  double infection_normalized = 0.0;  // I_n
  double peak_infection = 0.0;        // PI_n
  double deaths_normalized = 0.0;     // D_n
  double duration = 0.0;              // PD, days
};

// Daily totals for t = 0..T. new_infections[0] holds the initial seed.
struct PandemicTrace {
  std::vector<double> infected;
  std::vector<double> critical;
  std::vector<double> deaths;
  std::vector<double> new_infections;
  double population = 0.0;
};

// PD = t_end - t_start with t_start the first day with I + C > 0 and t_end
// the last such day (I + C stays 0 afterwards). Unfinished outbreaks end at
// the last logged day.
PandemicMetrics compute_pandemic_metrics(const PandemicTrace& trace,
                                         std::optional<std::size_t> expected_days = std::nullopt);

}  // namespace mfn
