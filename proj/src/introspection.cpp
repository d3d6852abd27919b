#include "mfn/introspection.hpp"

#include <algorithm>
#include <cmath>
#include <spdlog/spdlog.h>

#include "mfn/errors.hpp"

namespace mfn {

void NormalizationBounds::validate() const {
  for (const auto& [lo, hi] : observation) {
    if (!(hi > lo)) throw Error(ErrorCode::BoundsMismatch, "observation bound max must exceed min");
  }
  if (!(action.second > action.first)) throw Error(ErrorCode::BoundsMismatch, "action bound max must exceed min");
}

TransitionVector build_transition(const Observation& before, const Observation& after, Action action,
                                  const NormalizationBounds& bounds) {
  bounds.validate();
  const auto a = before.flatten();
  const auto b = after.flatten();
  if (a.size() != b.size() || a.size() != bounds.observation.size()) {
    throw Error(ErrorCode::BoundsMismatch, "observation layout does not match bounds (" + std::to_string(a.size()) +
                                               ", " + std::to_string(b.size()) + ", " +
                                               std::to_string(bounds.observation.size()) + ")");
  }
  TransitionVector out;
  out.components.reserve(a.size() + 1);
  for (std::size_t c = 0; c < a.size(); ++c) {
    const auto [lo, hi] = bounds.observation[c];
    const double raw = (b[c] - a[c]) / (hi - lo);
    const double norm = std::clamp(raw, -1.0, 1.0);
    out.clamped = out.clamped || norm != raw;
    out.components.push_back(norm);
  }
  const auto [alo, ahi] = bounds.action;
  const double raw = (action - alo) / (ahi - alo);
  const double norm = std::clamp(raw, 0.0, 1.0);
  out.clamped = out.clamped || norm != raw;
  out.components.push_back(norm);
  if (out.clamped) spdlog::warn("transition input outside normalization bounds, clamped");
  return out;
}

double drift_intensity(const std::vector<double>& prev, const std::vector<double>& cur) {
  if (prev.size() != cur.size()) throw Error(ErrorCode::DimensionMismatch, "transition vectors differ in length");
  double dot = 0.0, np = 0.0, nc = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    dot += prev[i] * cur[i];
    np += prev[i] * prev[i];
    nc += cur[i] * cur[i];
  }
  const bool zp = np == 0.0;
  const bool zc = nc == 0.0;
  if (zp && zc) return 0.0;
  if (zp || zc) return 1.0;
  const double cosine = std::clamp(dot / (std::sqrt(np) * std::sqrt(nc)), -1.0, 1.0);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

double drift_intensity(const TransitionVector& prev, const TransitionVector& cur) {
  return drift_intensity(prev.components, cur.components);
}

bool reflect_trigger(double reward_prev, double reward_cur) { return reward_cur < reward_prev; }

double revision_cap(double drift) { return 0.5 * (std::clamp(drift, 0.0, 2.0) / 2.0); }

Strategy apply_revision(const Strategy& strategy, const RevisionSignal& signal, Reasoner& reasoner) {
  if (!(signal.drift >= 0.0 && signal.drift <= 2.0)) throw Error(ErrorCode::InvalidParams, "drift outside [0, 2]");
  if (signal.drift == 0.0) return strategy;

  Strategy revised;
  try {
    revised = reasoner.revise_strategy(strategy, signal);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ReasonerFailure) throw;
    spdlog::warn("strategy revision failed, keeping strategy: {}", e.what());
    return strategy;
  }

  const double cap = revision_cap(signal.drift);
  revised.temporal.bounds = strategy.temporal.bounds;
  for (auto& [name, value] : revised.temporal.parameters) {
    auto old = strategy.temporal.parameters.find(name);
    if (old == strategy.temporal.parameters.end()) continue;
    const double span = cap * std::abs(old->second);
    value = std::clamp(value, old->second - span, old->second + span);
  }
  // Parameters are never dropped by a revision.
  for (const auto& [name, value] : strategy.temporal.parameters) revised.temporal.parameters.try_emplace(name, value);
  revised.temporal.enforce_bounds();
  revised.spatial.stats = strategy.spatial.stats;
  return revised;
}

Introspector::Introspector(NormalizationBounds bounds) : bounds_(std::move(bounds)) { bounds_.validate(); }

ReflectionOutcome Introspector::reflect(const Observation& before, const Observation& after, Action action,
                                        double reward, int step, const Strategy& strategy, Reasoner& reasoner,
                                        const DiagnosisInput& diagnosis) {
  ReflectionOutcome out;
  out.transition = build_transition(before, after, action, bounds_);
  out.strategy = strategy;

  if (prev_reward_ && prev_transition_ && reflect_trigger(*prev_reward_, reward)) {
    out.triggered = true;
    RevisionSignal signal;
    signal.drift = drift_intensity(*prev_transition_, out.transition);
    signal.triggered_at = step;
    try {
      signal.directives = reasoner.diagnose(diagnosis, strategy);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ReasonerFailure) throw;
      spdlog::warn("diagnosis failed: {}", e.what());
    }
    for (const auto& d : signal.directives) {
      if (!signal.semantic.empty()) signal.semantic += "; ";
      signal.semantic += d;
    }
    out.strategy = apply_revision(strategy, signal, reasoner);
    out.signal = std::move(signal);
  }
  prev_transition_ = out.transition;
  prev_reward_ = reward;
  return out;
}

}  // namespace mfn
