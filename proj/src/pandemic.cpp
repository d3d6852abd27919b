#include "mfn/pandemic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfn/errors.hpp"

namespace mfn {

namespace {

enum OwnField { kS, kI, kC, kD, kR, kLevel, kPopulation, kCapacity, kOwnFields };

int checked_level(Action a, const PandemicParams& p, AgentId n) {
  if (!std::isfinite(a) || a != std::round(a) || a < 0.0 || a > p.max_level) {
    throw Error(ErrorCode::InvalidLevel, to_string(n) + " level " + std::to_string(a));
  }
  return static_cast<int>(a);
}

double draw_binomial(double trials, double p, std::mt19937_64& rng) {
  const auto n = static_cast<long long>(std::llround(std::max(0.0, trials)));
  if (n == 0 || p <= 0.0) return 0.0;
  if (p >= 1.0) return static_cast<double>(n);
  return static_cast<double>(std::binomial_distribution<long long>(n, p)(rng));
}

double infection_probability(int level, double pressure, double population, const PandemicParams& p) {
  const double contact = p.contact[static_cast<std::size_t>(level)];
  return 1.0 - std::exp(-p.beta0 * contact * pressure / population);
}

}  // namespace

NodeCompartments expected_node_update(const NodeCompartments& cur, int level, double pressure, double population,
                                      const PandemicParams& params, double* new_infections) {
  if (level < 0 || level > params.max_level) throw Error(ErrorCode::InvalidLevel, std::to_string(level));
  const double infections = cur.susceptible * infection_probability(level, pressure, population, params);
  const double i_out = cur.infected / params.infectious_period;
  const double to_c = i_out * params.p_critical;
  const double c_out = cur.critical / params.critical_period;
  const double to_d = c_out * params.p_death;

  NodeCompartments nx;
  nx.susceptible = cur.susceptible - infections;
  nx.infected = cur.infected + infections - i_out;
  nx.critical = cur.critical + to_c - c_out;
  nx.dead = cur.dead + to_d;
  nx.recovered = cur.recovered + (i_out - to_c) + (c_out - to_d);
  if (nx.infected < params.extinction_threshold) {
    nx.recovered += nx.infected;
    nx.infected = 0.0;
  }
  if (nx.critical < params.extinction_threshold) {
    nx.recovered += nx.critical;
    nx.critical = 0.0;
  }
  if (new_infections) *new_infections = infections;
  return nx;
}

std::string to_string(PandemicMode m) { return m == PandemicMode::Stochastic ? "stochastic" : "expected-value"; }

PandemicMode pandemic_mode_from_string(const std::string& s) {
  if (s == "stochastic") return PandemicMode::Stochastic;
  if (s == "expected-value") return PandemicMode::ExpectedValue;
  throw Error(ErrorCode::ValidationError, "unknown pandemic mode '" + s + "'");
}

void PandemicParams::validate() const {
  if (!(beta0 >= 0.0) || !(kappa >= 0.0)) throw Error(ErrorCode::InvalidParams, "rates must be non-negative");
  if (!(infectious_period >= 1.0) || !(critical_period >= 1.0)) {
    throw Error(ErrorCode::InvalidParams, "periods must be at least one day");
  }
  for (double p : {p_critical, p_death, capacity_fraction}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidParams, "probabilities must lie in [0, 1]");
  }
  for (double c : contact) {
    if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::InvalidParams, "contact factors must lie in [0, 1]");
  }
  if (max_level != 4) throw Error(ErrorCode::InvalidParams, "five regulation levels are supported");
  if (days < 1) throw Error(ErrorCode::InvalidParams, "days must be >= 1");
  if (!(extinction_threshold >= 0.0)) throw Error(ErrorCode::InvalidParams, "extinction threshold must be >= 0");
}

double PandemicState::total_population() const noexcept {
  return std::accumulate(population.begin(), population.end(), 0.0);
}

double PandemicState::total_active() const noexcept {
  double a = 0.0;
  for (const auto& n : nodes) a += n.active();
  return a;
}

PandemicState initial_pandemic_state(const Topology& topology, const PandemicScenarioInit& init,
                                     const PandemicParams& params) {
  params.validate();
  const std::size_t n = topology.agent_count();
  if (init.seed_node >= n) throw Error(ErrorCode::UnknownAgent, "seed node out of range");
  if (!(init.population >= static_cast<double>(n))) throw Error(ErrorCode::InvalidParams, "population too small");

  PandemicState s;
  const double base = std::floor(init.population / static_cast<double>(n));
  s.population.assign(n, base);
  s.population[0] += init.population - base * static_cast<double>(n);
  if (!(init.seed_infections >= 0.0 && init.seed_infections <= s.population[init.seed_node])) {
    throw Error(ErrorCode::InvalidParams, "seed infections exceed node population");
  }
  s.nodes.resize(n);
  s.levels.assign(n, 0);
  s.capacity.resize(n);
  s.cumulative_infections.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.nodes[i].susceptible = s.population[i];
    s.capacity[i] = params.capacity_fraction * s.population[i];
  }
  s.nodes[init.seed_node].susceptible -= init.seed_infections;
  s.nodes[init.seed_node].infected = init.seed_infections;
  s.cumulative_infections[init.seed_node] = init.seed_infections;
  return s;
}

PandemicState pandemic_step(const PandemicState& state, const Topology& topology, const JointAction& levels,
                            PandemicMode mode, const PandemicParams& params, std::mt19937_64* rng,
                            std::vector<double>* new_infections) {
  if (state.size() != topology.agent_count()) throw Error(ErrorCode::InvalidParams, "state and topology differ");
  if (mode == PandemicMode::Stochastic && !rng) throw Error(ErrorCode::InvalidParams, "stochastic mode needs an rng");

  PandemicState next = state;
  next.day = state.day + 1;
  for (const auto& [id, a] : levels) {
    if (id.index >= state.size()) throw Error(ErrorCode::UnknownAgent, to_string(id));
    next.levels[id.index] = checked_level(a, params, id);
  }
  if (new_infections) new_infections->assign(state.size(), 0.0);

  const double leave_i = 1.0 / params.infectious_period;
  const double leave_c = 1.0 / params.critical_period;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto& cur = state.nodes[i];
    double pressure = cur.infected;
    for (AgentId m : topology.neighbors(AgentId(i))) pressure += params.kappa * state.nodes[m.index].infected;
    const double p_inf = infection_probability(next.levels[i], pressure, state.population[i], params);

    double infections = 0.0;
    if (mode == PandemicMode::ExpectedValue) {
      next.nodes[i] = expected_node_update(cur, next.levels[i], pressure, state.population[i], params, &infections);
    } else {
      infections = draw_binomial(cur.susceptible, p_inf, *rng);
      const double i_out = draw_binomial(cur.infected, leave_i, *rng);
      const double to_c = draw_binomial(i_out, params.p_critical, *rng);
      const double c_out = draw_binomial(cur.critical, leave_c, *rng);
      const double to_d = draw_binomial(c_out, params.p_death, *rng);
      auto& nx = next.nodes[i];
      nx.susceptible = cur.susceptible - infections;
      nx.infected = cur.infected + infections - i_out;
      nx.critical = cur.critical + to_c - c_out;
      nx.dead = cur.dead + to_d;
      nx.recovered = cur.recovered + (i_out - to_c) + (c_out - to_d);
    }
    next.cumulative_infections[i] += infections;
    if (new_infections) (*new_infections)[i] = infections;
  }
  return next;
}

Observation pandemic_observe(const PandemicState& state, const Topology& topology, AgentId n) {
  if (n.index >= state.size()) throw Error(ErrorCode::UnknownAgent, to_string(n));
  const auto& c = state.nodes[n.index];
  Observation obs;
  obs.agent = n;
  obs.step = state.day;
  obs.own = {c.susceptible,
             c.infected,
             c.critical,
             c.dead,
             c.recovered,
             static_cast<double>(state.levels[n.index]),
             state.population[n.index],
             state.capacity[n.index]};
  for (AgentId m : topology.neighbors(n)) obs.neighbors.push_back({m, {}});
  return obs;
}

Evaluation pandemic_evaluate(const PandemicState& state, AgentId n, const PandemicParams& params) {
  if (n.index >= state.size()) throw Error(ErrorCode::UnknownAgent, to_string(n));
  const auto& c = state.nodes[n.index];
  Evaluation e;
  e.reward = -(c.infected / state.population[n.index] + params.eta * params.level_cost(state.levels[n.index]));
  if (c.critical > state.capacity[n.index]) e.verdict = ConstraintVerdict::fail(0, "hospital-capacity");
  return e;
}

EnvironmentSpec pandemic_spec(const PandemicParams& params) {
  EnvironmentSpec spec;
  spec.name = "pandemic";
  spec.objective = "minimize infections and deaths while keeping regulation as light as possible";
  spec.targets = {{"infected", 0.0}, {"level", 0.0}};
  spec.action_space = params.action_space();
  spec.strict_constraints = {"critical <= hospital capacity"};
  spec.viability_constraints = {"critical <= hospital capacity"};
  spec.reward_parameters = {{"eta", params.eta}};
  return spec;
}

NormalizationBounds pandemic_normalization(const Observation& obs, const PandemicParams& params) {
  if (obs.own.size() != kOwnFields) throw Error(ErrorCode::BoundsMismatch, "pandemic observation layout");
  const double pop = obs.own[kPopulation];
  NormalizationBounds b;
  for (int f = kS; f <= kR; ++f) b.observation.push_back({0.0, pop});
  b.observation.push_back({0.0, static_cast<double>(params.max_level)});
  b.observation.push_back({0.0, pop});
  b.observation.push_back({0.0, std::max(pop, 1.0)});
  b.action = {0.0, static_cast<double>(params.max_level)};
  return b;
}

double observed_infected_fraction(const Observation& obs) {
  if (obs.own.size() != kOwnFields) throw Error(ErrorCode::DimensionMismatch, "pandemic observation layout");
  return obs.own[kI] / obs.own[kPopulation];
}

PandemicModel::PandemicModel(PandemicParams params) : params_(params) { params_.validate(); }

double PandemicModel::reward(const Observation& obs) const {
  return -(observed_infected_fraction(obs) + params_.eta * params_.level_cost(static_cast<int>(obs.own[kLevel])));
}

std::optional<std::string> PandemicModel::violation(const Observation& obs, Action, ConstraintLevel) const {
  if (obs.own.size() != kOwnFields) throw Error(ErrorCode::DimensionMismatch, "pandemic observation layout");
  if (obs.own[kC] > obs.own[kCapacity]) return "hospital-capacity";
  return std::nullopt;
}

Urgency PandemicModel::urgency(const Observation& obs) const {
  const double f = observed_infected_fraction(obs);
  if (obs.own[kC] > 0.8 * obs.own[kCapacity] || f > 0.05) return Urgency::Urgent;
  if (f > 0.01) return Urgency::Warning;
  return Urgency::Normal;
}

std::vector<double> PandemicModel::mean_field_state(const Observation& obs) const {
  if (obs.own.size() != kOwnFields) throw Error(ErrorCode::DimensionMismatch, "pandemic observation layout");
  return {obs.own[kI], obs.own[kC], obs.own[kLevel]};
}

}  // namespace mfn
