#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mfn/environment.hpp"
#include "mfn/introspection.hpp"
#include "mfn/rollout.hpp"
#include "mfn/topology.hpp"

namespace mfn {

// SICDR compartment model on a facility graph. Each node is one agent that
// sets a regulation level 0..4 scaling its contact rate.
//
// Observation layout:
//   own       = [S, I, C, D, R, level, population, hospital capacity]
//   neighbors = ids only (empty values)

enum class PandemicMode { Stochastic, ExpectedValue };

std::string to_string(PandemicMode m);
PandemicMode pandemic_mode_from_string(const std::string& s);

struct PandemicParams {
  double beta0 = 0.3;  // per day
  double kappa = 0.2;  // neighbor coupling
  double infectious_period = 7.0;
  double p_critical = 0.05;
  double critical_period = 7.0;
  double p_death = 0.2;
  std::array<double, 5> contact{1.0, 0.8, 0.5, 0.25, 0.0};
  double eta = 0.05;  // regulation cost weight
  double capacity_fraction = 0.05;
  // Expected-value mode sends compartments below this many persons to R.
  double extinction_threshold = 0.5;
  int days = 120;
  int max_level = 4;

  void validate() const;
  ActionSpace action_space() const noexcept { return {0.0, static_cast<double>(max_level), true}; }
  double level_cost(int level) const noexcept { return static_cast<double>(level) / max_level; }
};

struct NodeCompartments {
  double susceptible = 0.0;
  double infected = 0.0;
  double critical = 0.0;
  double dead = 0.0;
  double recovered = 0.0;

  double total() const noexcept { return susceptible + infected + critical + dead + recovered; }
  double active() const noexcept { return infected + critical; }
};

struct PandemicState {
  std::vector<NodeCompartments> nodes;
  std::vector<int> levels;
  std::vector<double> population;
  std::vector<double> capacity;
  // Cumulative new infections per node, including the initial seed.
  std::vector<double> cumulative_infections;
  int day = 0;

  std::size_t size() const noexcept { return nodes.size(); }
  double total_population() const noexcept;
  double total_active() const noexcept;
};

struct PandemicScenarioInit {
  double population = 500.0;
  std::size_t seed_node = 0;
  double seed_infections = 5.0;
};

// Splits the population evenly across nodes, remainder to node 0 (Home).
PandemicState initial_pandemic_state(const Topology& topology, const PandemicScenarioInit& init,
                                     const PandemicParams& params);

// Expected-value update of one node under the given infectious pressure
// (own I plus kappa times neighbor I), including the extinction cut.
NodeCompartments expected_node_update(const NodeCompartments& node, int level, double pressure, double population,
                                      const PandemicParams& params, double* new_infections = nullptr);

// Binomial draws in stochastic mode (rng required), expectations otherwise.
// Returns the new state; `new_infections` (if given) receives per-node counts.
PandemicState pandemic_step(const PandemicState& state, const Topology& topology, const JointAction& levels,
                            PandemicMode mode, const PandemicParams& params, std::mt19937_64* rng = nullptr,
                            std::vector<double>* new_infections = nullptr);

Observation pandemic_observe(const PandemicState& state, const Topology& topology, AgentId n);

Evaluation pandemic_evaluate(const PandemicState& state, AgentId n, const PandemicParams& params);

EnvironmentSpec pandemic_spec(const PandemicParams& params);

NormalizationBounds pandemic_normalization(const Observation& obs, const PandemicParams& params);

// Fraction of a node's population that is infected, from an observation.
double observed_infected_fraction(const Observation& obs);

class PandemicModel : public EnvironmentModel {
 public:
  explicit PandemicModel(PandemicParams params);

  ActionSpace action_space() const override { return params_.action_space(); }
  double reward(const Observation& obs) const override;
  std::optional<std::string> violation(const Observation& obs, Action action, ConstraintLevel level) const override;
  Urgency urgency(const Observation& obs) const override;
  // [I, C, level]
  std::vector<double> mean_field_state(const Observation& obs) const override;

  const PandemicParams& params() const noexcept { return params_; }

 private:
  PandemicParams params_;
};

}  // namespace mfn
