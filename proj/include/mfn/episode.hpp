#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "mfn/config.hpp"
#include "mfn/instrumentation.hpp"
#include "mfn/metrics.hpp"
#include "mfn/negotiation.hpp"

namespace mfn {

struct EpisodeSummary {
  Domain domain = Domain::Platoon;
  std::size_t agents = 0;
  int steps = 0;  // steps actually simulated
  bool complete = false;
  std::optional<std::string> error;

  std::optional<PlatoonMetrics> platoon;
  std::optional<PandemicMetrics> pandemic;
  CommReport comm;

  std::size_t negotiations = 0;
  std::size_t collisions = 0;
  std::size_t overrides = 0;
  std::size_t reflections = 0;
  std::size_t revisions = 0;
  int max_rounds_used = 0;
};

struct EpisodeResult {
  EpisodeSummary summary;
  PlatoonTrace platoon_trace;
  PandemicTrace pandemic_trace;
};

struct EpisodeHooks {
  // Replaces the configured reasoner for each agent.
  std::function<std::unique_ptr<Reasoner>(AgentId, const RunConfig&)> reasoner_factory;
  // Called after each negotiation with the decision step.
  std::function<void(int, const NegotiationOutcome&)> on_negotiation;
};

// Topology of the configured scenario: a chain for platoons, the city graph
// (or the configured topology file) for pandemics.
TopologyConfig scenario_topology(const RunConfig& cfg);

// Runs one episode. Writes the JSON-lines log to `log` when given. An
// environment failure stops the run and is reported in the summary
// (complete = false) rather than thrown.
EpisodeResult run_episode(const RunConfig& cfg, std::ostream* log = nullptr, const EpisodeHooks& hooks = {});

// Log file path used by the CLI for a config.
std::string default_log_path(const RunConfig& cfg);

}  // namespace mfn
