#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mfn/types.hpp"

namespace mfn {

// Weighted summary (mean, variance, total weight) of a set of state vectors.
// Components are aggregated independently with a shared weight. An empty
// summary (count == 0) is the identity of merge() and may have dimension 0.
struct MeanFieldStats {
  std::vector<double> mean;
  std::vector<double> variance;
  double total_weight = 0.0;
  std::size_t count = 0;

  std::size_t dimension() const noexcept { return mean.size(); }
  bool empty() const noexcept { return count == 0; }
  double max_variance() const noexcept;

  static MeanFieldStats empty_of(std::size_t dimension);
};

// Statistics of one neighbor subgroup. `members` are the direct neighbors
// the group was formed from; the stats may also summarize agents further away.
struct GroupStats {
  std::vector<AgentId> members;
  MeanFieldStats stats;

  std::size_t group_size() const noexcept { return members.size(); }
};

struct PartitionedStats {
  std::vector<GroupStats> groups;

  bool empty() const noexcept;
  // All groups folded into one summary.
  MeanFieldStats merged() const;
  // Group containing the given direct neighbor, if any.
  const GroupStats* group_of(AgentId member) const noexcept;
};

struct BoundParams {
  double smoothness = 1.0;  // L2
  double min_weight = 1.0;  // w_min
};

struct ErrorBounds {
  double single = 0.0;
  std::optional<double> partitioned;
};

struct VarianceDecomposition {
  std::vector<double> within;
  std::vector<double> between;
  std::vector<double> total;
};

// Weighted mean and (population) variance, built by sequential Welford updates.
MeanFieldStats aggregate(std::span<const double> states, std::span<const double> weights);
MeanFieldStats aggregate(std::span<const std::vector<double>> states, std::span<const double> weights);

// Adds one weighted state to a summary.
MeanFieldStats welford_update(const MeanFieldStats& prior, std::span<const double> state, double weight);
MeanFieldStats welford_update(const MeanFieldStats& prior, double state, double weight);

// Combines summaries of two disjoint sets; commutative and associative.
MeanFieldStats merge(const MeanFieldStats& a, const MeanFieldStats& b);

// Same mean and variance, total weight multiplied by `factor` (> 0).
MeanFieldStats scaled(const MeanFieldStats& s, double factor);

// Mean-field approximation error bounds, evaluated per component and reported
// for the worst component. Subgroup sizes enter through their weight mass,
// which equals the member count under unit link weights.
ErrorBounds error_bounds(const MeanFieldStats& full, const PartitionedStats* partitioned, const BoundParams& p);

// Law of total variance over the groups of a partition (normalized by the
// total weight). total == within + between per component.
VarianceDecomposition variance_decomposition(const PartitionedStats& partitioned);

}  // namespace mfn
