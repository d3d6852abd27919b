#include "mfn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfn/errors.hpp"

namespace mfn {

namespace {

double population_sd(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / n);
}

}  // namespace

PlatoonMetrics compute_platoon_metrics(const PlatoonTrace& trace, double target_headway,
                                       std::optional<std::size_t> expected_steps) {
  const std::size_t steps = trace.headways.size();
  if (steps == 0) throw Error(ErrorCode::IncompleteLog, "no platoon steps");
  if (trace.velocities.size() != steps || trace.leader_velocity.size() != steps) {
    throw Error(ErrorCode::IncompleteLog, "platoon trace columns differ in length");
  }
  if (expected_steps && steps != *expected_steps) {
    throw Error(ErrorCode::IncompleteLog,
                "expected " + std::to_string(*expected_steps) + " steps, got " + std::to_string(steps));
  }
  const std::size_t followers = trace.headways.front().size();
  if (followers == 0) throw Error(ErrorCode::IncompleteLog, "no followers");

  double se_h = 0.0, se_v = 0.0, sd_h = 0.0, sd_v = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& h = trace.headways[t];
    const auto& v = trace.velocities[t];
    if (h.size() != followers || v.size() != followers) {
      throw Error(ErrorCode::IncompleteLog, "step " + std::to_string(t) + " misses followers");
    }
    for (std::size_t i = 0; i < followers; ++i) {
      se_h += (h[i] - target_headway) * (h[i] - target_headway);
      se_v += (v[i] - trace.leader_velocity[t]) * (v[i] - trace.leader_velocity[t]);
    }
    sd_h += population_sd(h);
    sd_v += population_sd(v);
  }
  const double pairs = static_cast<double>(steps * followers);
  return {std::sqrt(se_h / pairs), std::sqrt(se_v / pairs), sd_h / static_cast<double>(steps),
          sd_v / static_cast<double>(steps)};
}

PandemicMetrics compute_pandemic_metrics(const PandemicTrace& trace, std::optional<std::size_t> expected_days) {
  const std::size_t days = trace.infected.size();
  if (days == 0) throw Error(ErrorCode::IncompleteLog, "no pandemic days");
  if (trace.critical.size() != days || trace.deaths.size() != days || trace.new_infections.size() != days) {
    throw Error(ErrorCode::IncompleteLog, "pandemic trace columns differ in length");
  }
  if (expected_days && days != *expected_days) {
    throw Error(ErrorCode::IncompleteLog,
                "expected " + std::to_string(*expected_days) + " days, got " + std::to_string(days));
  }
  if (!(trace.population > 0.0)) throw Error(ErrorCode::InvalidParams, "population must be positive");

  PandemicMetrics m;
  m.infection_normalized =
      std::accumulate(trace.new_infections.begin(), trace.new_infections.end(), 0.0) / trace.population;
  m.peak_infection = *std::max_element(trace.infected.begin(), trace.infected.end()) / trace.population;
  m.deaths_normalized = trace.deaths.back() / trace.population;

  std::optional<std::size_t> first, last;
  for (std::size_t t = 0; t < days; ++t) {
    if (trace.infected[t] + trace.critical[t] > 0.0) {
      if (!first) first = t;
      last = t;
    }
  }
  if (first) m.duration = static_cast<double>(*last - *first);
  return m;
}

}  // namespace mfn
