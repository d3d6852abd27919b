#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mfn/meanfield.hpp"

namespace mfn {

// Long-horizon plan: tunable parameters (gains, thresholds, targets) plus
// free-form rules. Parameters stay inside their declared bounds.
struct TemporalStrategy {
  std::map<std::string, double> parameters;
  std::map<std::string, std::pair<double, double>> bounds;
  std::vector<std::string> directives;

  double get(const std::string& name) const;
  // Clamps every bounded parameter into its range.
  void enforce_bounds();

  bool operator==(const TemporalStrategy&) const = default;
};

// Directives about neighbors plus the latest merged neighborhood statistics.
struct SpatialStrategy {
  std::vector<std::string> directives;
  PartitionedStats stats;
};

struct Strategy {
  TemporalStrategy temporal;
  SpatialStrategy spatial;
};

struct ConfidenceWeights {
  double my_weight = 0.6;
  double neighbor_weight = 0.4;
  double unobservable_weight = 0.0;

  double sum() const noexcept { return my_weight + neighbor_weight + unobservable_weight; }
  bool normalized(double tolerance = 1e-9) const noexcept;
  // Rescales to sum 1. Throws InvalidParams on negative or all-zero weights.
  ConfidenceWeights normalize() const;
};

struct ConflictAssessment {
  bool deal = true;
  ConfidenceWeights weights;
  SpatialStrategy updated_spatial;
  std::string rationale;
};

// Correction produced by introspection: what to change and how much.
struct RevisionSignal {
  std::vector<std::string> directives;
  std::string semantic;
  double drift = 0.0;  // lambda in [0, 2]
  int triggered_at = 0;
};

}  // namespace mfn
