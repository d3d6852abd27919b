#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mfn/reasoner.hpp"
#include "mfn/strategy.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Per-component reference ranges used for min-max normalization.
struct NormalizationBounds {
  std::vector<std::pair<double, double>> observation;  // matches Observation::flatten()
  std::pair<double, double> action{0.0, 1.0};

  void validate() const;
};

// Normalized observation delta followed by the normalized action.
struct TransitionVector {
  std::vector<double> components;
  // True when some input had to be clamped into its bounds.
  bool clamped = false;
};

// Delta components are divided by their range (so lie in [-1, 1]); the action
// maps to [0, 1] with the range midpoint at 0.5.
TransitionVector build_transition(const Observation& before, const Observation& after, Action action,
                                  const NormalizationBounds& bounds);

// 1 - cos(prev, cur), in [0, 2]. Two zero vectors give 0; exactly one gives 1.
double drift_intensity(const TransitionVector& prev, const TransitionVector& cur);
double drift_intensity(const std::vector<double>& prev, const std::vector<double>& cur);

// Strict reward decline.
bool reflect_trigger(double reward_prev, double reward_cur);

// Largest relative parameter change a revision of intensity `drift` may make.
double revision_cap(double drift);

// Asks the reasoner for a revised strategy, then limits every temporal
// parameter to the drift-scaled relative cap and to its bounds. Zero drift
// or a reasoner failure leaves the strategy unchanged.
Strategy apply_revision(const Strategy& strategy, const RevisionSignal& signal, Reasoner& reasoner);

struct ReflectionOutcome {
  TransitionVector transition;
  bool triggered = false;
  std::optional<RevisionSignal> signal;
  Strategy strategy;
};

// One agent's reflection state across decision epochs.
class Introspector {
 public:
  explicit Introspector(NormalizationBounds bounds);

  ReflectionOutcome reflect(const Observation& before, const Observation& after, Action action, double reward,
                            int step, const Strategy& strategy, Reasoner& reasoner, const DiagnosisInput& diagnosis);

  const std::optional<double>& previous_reward() const noexcept { return prev_reward_; }

 private:
  NormalizationBounds bounds_;
  std::optional<TransitionVector> prev_transition_;
  std::optional<double> prev_reward_;
};

}  // namespace mfn
