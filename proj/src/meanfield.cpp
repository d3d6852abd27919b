#include "mfn/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include "mfn/errors.hpp"

namespace mfn {

namespace {

void require_weight(double w) {
  if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorCode::NonPositiveWeight, "weight " + std::to_string(w));
}

}  // namespace

double MeanFieldStats::max_variance() const noexcept {
  return variance.empty() ? 0.0 : *std::max_element(variance.begin(), variance.end());
}

MeanFieldStats MeanFieldStats::empty_of(std::size_t dimension) {
  return {std::vector<double>(dimension, 0.0), std::vector<double>(dimension, 0.0), 0.0, 0};
}

bool PartitionedStats::empty() const noexcept {
  return std::all_of(groups.begin(), groups.end(), [](const GroupStats& g) { return g.stats.empty(); });
}

MeanFieldStats PartitionedStats::merged() const {
  MeanFieldStats out;
  for (const auto& g : groups) out = merge(out, g.stats);
  return out;
}

const GroupStats* PartitionedStats::group_of(AgentId member) const noexcept {
  for (const auto& g : groups) {
    if (std::find(g.members.begin(), g.members.end(), member) != g.members.end()) return &g;
  }
  return nullptr;
}

MeanFieldStats welford_update(const MeanFieldStats& prior, std::span<const double> state, double weight) {
  require_weight(weight);
  if (prior.empty()) {
    return {std::vector<double>(state.begin(), state.end()), std::vector<double>(state.size(), 0.0), weight, 1};
  }
  if (state.size() != prior.dimension()) throw Error(ErrorCode::DimensionMismatch, "state vs. summary dimension");

  MeanFieldStats next = prior;
  next.total_weight = prior.total_weight + weight;
  next.count = prior.count + 1;
  const double ratio = weight / next.total_weight;
  const double keep = prior.total_weight / next.total_weight;
  for (std::size_t c = 0; c < state.size(); ++c) {
    const double deviation = state[c] - prior.mean[c];
    next.mean[c] = prior.mean[c] + ratio * deviation;
    next.variance[c] = std::max(0.0, keep * prior.variance[c] + ratio * deviation * (state[c] - next.mean[c]));
  }
  return next;
}

MeanFieldStats welford_update(const MeanFieldStats& prior, double state, double weight) {
  return welford_update(prior, std::span<const double>(&state, 1), weight);
}

MeanFieldStats aggregate(std::span<const double> states, std::span<const double> weights) {
  if (states.empty()) throw Error(ErrorCode::EmptyInput, "aggregate needs at least one state");
  if (states.size() != weights.size()) throw Error(ErrorCode::LengthMismatch, "states vs. weights");
  MeanFieldStats s;
  for (std::size_t i = 0; i < states.size(); ++i) s = welford_update(s, states[i], weights[i]);
  return s;
}

MeanFieldStats aggregate(std::span<const std::vector<double>> states, std::span<const double> weights) {
  if (states.empty()) throw Error(ErrorCode::EmptyInput, "aggregate needs at least one state");
  if (states.size() != weights.size()) throw Error(ErrorCode::LengthMismatch, "states vs. weights");
  MeanFieldStats s;
  for (std::size_t i = 0; i < states.size(); ++i) s = welford_update(s, states[i], weights[i]);
  return s;
}

MeanFieldStats merge(const MeanFieldStats& a, const MeanFieldStats& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.dimension() != b.dimension()) throw Error(ErrorCode::DimensionMismatch, "merging summaries");

  MeanFieldStats out = MeanFieldStats::empty_of(a.dimension());
  out.total_weight = a.total_weight + b.total_weight;
  out.count = a.count + b.count;
  const double wa = a.total_weight / out.total_weight;
  const double wb = b.total_weight / out.total_weight;
  for (std::size_t c = 0; c < a.dimension(); ++c) {
    const double delta = b.mean[c] - a.mean[c];
    out.mean[c] = a.mean[c] + wb * delta;
    out.variance[c] = std::max(0.0, wa * a.variance[c] + wb * b.variance[c] + wa * wb * delta * delta);
  }
  return out;
}

MeanFieldStats scaled(const MeanFieldStats& s, double factor) {
  require_weight(factor);
  MeanFieldStats out = s;
  out.total_weight *= factor;
  return out;
}

ErrorBounds error_bounds(const MeanFieldStats& full, const PartitionedStats* partitioned, const BoundParams& p) {
  if (!(p.smoothness > 0.0) || !(p.min_weight > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "L2 and w_min must be positive");
  }
  const double scale = p.smoothness / (2.0 * p.min_weight);
  ErrorBounds out;
  for (std::size_t c = 0; c < full.dimension(); ++c) {
    out.single = std::max(out.single, scale * full.total_weight * full.variance[c]);
  }
  if (partitioned) {
    double worst = 0.0;
    for (std::size_t c = 0; c < full.dimension(); ++c) {
      double sum = 0.0;
      for (const auto& g : partitioned->groups) {
        if (g.stats.empty()) continue;
        if (g.stats.dimension() != full.dimension()) throw Error(ErrorCode::DimensionMismatch, "group vs. full stats");
        sum += g.stats.total_weight * g.stats.variance[c];
      }
      worst = std::max(worst, scale * sum);
    }
    out.partitioned = worst;
  }
  return out;
}

VarianceDecomposition variance_decomposition(const PartitionedStats& partitioned) {
  if (partitioned.groups.empty() || partitioned.empty()) throw Error(ErrorCode::EmptyPartition, "no populated group");
  const MeanFieldStats total = partitioned.merged();
  const std::size_t dim = total.dimension();
  VarianceDecomposition out{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0), total.variance};
  for (const auto& g : partitioned.groups) {
    if (g.stats.empty()) continue;
    const double share = g.stats.total_weight / total.total_weight;
    for (std::size_t c = 0; c < dim; ++c) {
      const double offset = g.stats.mean[c] - total.mean[c];
      out.within[c] += share * g.stats.variance[c];
      out.between[c] += share * offset * offset;
    }
  }
  return out;
}

}  // namespace mfn
