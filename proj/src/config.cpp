#include "mfn/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "mfn/errors.hpp"

namespace mfn {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ValidationError, field + ": " + why);
}

void reject_unknown(const json& obj, const std::string& prefix, const std::set<std::string>& known) {
  if (!obj.is_object()) invalid(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) invalid(prefix.empty() ? key : prefix + "." + key, "unknown field");
  }
}

template <typename T>
void read(const json& obj, const std::string& key, const std::string& prefix, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    invalid(prefix.empty() ? key : prefix + "." + key, "wrong type");
  }
}

template <typename T>
void read_opt(const json& obj, const std::string& key, const std::string& prefix, std::optional<T>& out) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  T value{};
  read(obj, key, prefix, value);
  out = value;
}

void read_platoon(const json& j, PlatoonParams& p) {
  reject_unknown(j, "platoon",
                 {"dt", "v_max", "target_headway", "target_velocity", "min_headway", "alpha", "beta", "a_min", "a_max",
                  "safety_threshold", "emergency_gain", "tracking_gain_h", "tracking_gain_v"});
  read(j, "dt", "platoon", p.dt);
  read(j, "v_max", "platoon", p.v_max);
  read(j, "target_headway", "platoon", p.target_headway);
  read(j, "target_velocity", "platoon", p.target_velocity);
  read(j, "min_headway", "platoon", p.min_headway);
  read(j, "alpha", "platoon", p.alpha);
  read(j, "beta", "platoon", p.beta);
  read(j, "a_min", "platoon", p.a_min);
  read(j, "a_max", "platoon", p.a_max);
  read(j, "safety_threshold", "platoon", p.safety_threshold);
  read(j, "emergency_gain", "platoon", p.emergency_gain);
  read(j, "tracking_gain_h", "platoon", p.tracking_gain_h);
  read(j, "tracking_gain_v", "platoon", p.tracking_gain_v);
}

void read_pandemic(const json& j, PandemicParams& p) {
  reject_unknown(j, "pandemic",
                 {"beta0", "kappa", "infectious_period", "p_critical", "critical_period", "p_death", "contact", "eta",
                  "capacity_fraction", "extinction_threshold"});
  read(j, "beta0", "pandemic", p.beta0);
  read(j, "kappa", "pandemic", p.kappa);
  read(j, "infectious_period", "pandemic", p.infectious_period);
  read(j, "p_critical", "pandemic", p.p_critical);
  read(j, "critical_period", "pandemic", p.critical_period);
  read(j, "p_death", "pandemic", p.p_death);
  read(j, "contact", "pandemic", p.contact);
  read(j, "eta", "pandemic", p.eta);
  read(j, "capacity_fraction", "pandemic", p.capacity_fraction);
  read(j, "extinction_threshold", "pandemic", p.extinction_threshold);
}

void read_llm(const json& j, LlmEndpointConfig& l) {
  reject_unknown(j, "llm",
                 {"base_url", "path", "model_name", "temperature", "top_p", "max_retries", "api_key_env",
                  "timeout_seconds", "max_concurrency", "transcript_path"});
  read(j, "base_url", "llm", l.base_url);
  read(j, "path", "llm", l.path);
  read(j, "model_name", "llm", l.model_name);
  read(j, "temperature", "llm", l.temperature);
  read(j, "top_p", "llm", l.top_p);
  read(j, "max_retries", "llm", l.max_retries);
  read(j, "api_key_env", "llm", l.api_key_env);
  read(j, "timeout_seconds", "llm", l.timeout_seconds);
  read(j, "max_concurrency", "llm", l.max_concurrency);
  read_opt(j, "transcript_path", "llm", l.transcript_path);
}

}  // namespace

std::string to_string(ReasonerKind k) { return k == ReasonerKind::Heuristic ? "heuristic" : "llm"; }

void LlmEndpointConfig::validate() const {
  if (base_url.empty()) invalid("llm.base_url", "must not be empty");
  if (model_name.empty()) invalid("llm.model_name", "must not be empty");
  if (!(temperature >= 0.0 && temperature <= 2.0)) invalid("llm.temperature", "must lie in [0, 2]");
  if (!(top_p > 0.0 && top_p <= 1.0)) invalid("llm.top_p", "must lie in (0, 1]");
  if (max_retries < 1) invalid("llm.max_retries", "must be >= 1");
  if (timeout_seconds < 1) invalid("llm.timeout_seconds", "must be >= 1");
  if (max_concurrency < 1) invalid("llm.max_concurrency", "must be >= 1");
}

ScenarioInfo resolve_scenario(const std::string& id) {
  if (id == "cpp-catch-up") return {id, Domain::Platoon, PlatoonScenario::CatchUp, "", 0.0};
  if (id == "cpp-slow-down") return {id, Domain::Platoon, PlatoonScenario::SlowDown, "", 0.0};
  if (id == "pc-helsinki") return {id, Domain::Pandemic, PlatoonScenario::CatchUp, "helsinki", 500.0};
  if (id == "pc-hong-kong") return {id, Domain::Pandemic, PlatoonScenario::CatchUp, "hong_kong", 1000.0};
  if (id == "pc-new-york") return {id, Domain::Pandemic, PlatoonScenario::CatchUp, "new_york", 1500.0};
  invalid("scenario", "unknown scenario '" + id + "'");
}

double RunConfig::effective_epsilon() const {
  if (epsilon) return *epsilon;
  return scenario_info().domain == Domain::Platoon ? 0.02 : 0.0;
}

PartitionScheme RunConfig::effective_partition() const {
  if (partition) return *partition;
  return scenario_info().domain == Domain::Platoon ? PartitionScheme::Directional
                                                   : PartitionScheme::ComponentsAfterRemoval;
}

int RunConfig::episode_steps() const {
  if (steps) return *steps;
  return scenario_info().domain == Domain::Platoon ? platoon.steps : pandemic.days;
}

void RunConfig::validate() const {
  const ScenarioInfo info = resolve_scenario(scenario);
  if (horizon < 0) invalid("hyperparameters.k", "must be >= 0");
  if (max_rounds < 1) invalid("hyperparameters.r", "must be >= 1");
  if (max_attempts < 1) invalid("hyperparameters.att_max", "must be >= 1");
  if (epsilon && !(*epsilon >= 0.0)) invalid("hyperparameters.epsilon", "must be >= 0");
  if (!(discount > 0.0 && discount <= 1.0)) invalid("hyperparameters.gamma", "must lie in (0, 1]");
  if (delta < 1) invalid("hyperparameters.delta", "must be >= 1");
  if (parallelism < 1) invalid("parallelism", "must be >= 1");
  if (steps && *steps < 1) invalid("steps", "must be >= 1");
  if (info.domain == Domain::Platoon && platoon_size < 2) invalid("platoon_size", "must be >= 2");
  if (!(initial_jitter >= 0.0)) invalid("initial_jitter", "must be >= 0");
  if (!(seed_infections >= 0.0)) invalid("seed_infections", "must be >= 0");
  try {
    platoon.validate();
  } catch (const Error& e) {
    invalid("platoon", e.what());
  }
  try {
    pandemic.validate();
  } catch (const Error& e) {
    invalid("pandemic", e.what());
  }
  if (reasoner == ReasonerKind::Llm) llm.validate();
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text.empty() ? std::string("{}") : json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (j.is_null()) j = json::object();
  reject_unknown(j, "",
                 {"scenario", "topology_file", "reasoner", "llm", "hyperparameters", "seed", "output_dir",
                  "pandemic_mode", "instrumentation", "introspection", "partition", "platoon_size", "initial_jitter",
                  "parallelism", "steps", "platoon", "pandemic", "seed_node", "seed_infections"});

  RunConfig cfg;
  read(j, "scenario", "", cfg.scenario);
  read_opt(j, "topology_file", "", cfg.topology_file);
  if (auto it = j.find("reasoner"); it != j.end()) {
    if (*it == "heuristic") {
      cfg.reasoner = ReasonerKind::Heuristic;
    } else if (*it == "llm") {
      cfg.reasoner = ReasonerKind::Llm;
    } else {
      invalid("reasoner", "expected 'heuristic' or 'llm'");
    }
  }
  if (auto it = j.find("llm"); it != j.end()) read_llm(*it, cfg.llm);
  if (auto it = j.find("hyperparameters"); it != j.end()) {
    reject_unknown(*it, "hyperparameters", {"k", "r", "att_max", "epsilon", "gamma", "delta"});
    read(*it, "k", "hyperparameters", cfg.horizon);
    read(*it, "r", "hyperparameters", cfg.max_rounds);
    read(*it, "att_max", "hyperparameters", cfg.max_attempts);
    read_opt(*it, "epsilon", "hyperparameters", cfg.epsilon);
    read(*it, "gamma", "hyperparameters", cfg.discount);
    read(*it, "delta", "hyperparameters", cfg.delta);
  }
  read(j, "seed", "", cfg.seed);
  read(j, "output_dir", "", cfg.output_dir);
  if (auto it = j.find("pandemic_mode"); it != j.end()) {
    try {
      cfg.pandemic_mode = pandemic_mode_from_string(it->get<std::string>());
    } catch (const std::exception&) {
      invalid("pandemic_mode", "expected 'stochastic' or 'expected-value'");
    }
  }
  read(j, "instrumentation", "", cfg.instrumentation);
  read(j, "introspection", "", cfg.introspection);
  if (auto it = j.find("partition"); it != j.end()) {
    try {
      cfg.partition = partition_scheme_from_string(it->get<std::string>());
    } catch (const std::exception&) {
      invalid("partition", "unknown partition scheme");
    }
  }
  read(j, "platoon_size", "", cfg.platoon_size);
  read(j, "initial_jitter", "", cfg.initial_jitter);
  read(j, "parallelism", "", cfg.parallelism);
  read_opt(j, "steps", "", cfg.steps);
  if (auto it = j.find("platoon"); it != j.end()) read_platoon(*it, cfg.platoon);
  if (auto it = j.find("pandemic"); it != j.end()) read_pandemic(*it, cfg.pandemic);
  read(j, "seed_node", "", cfg.seed_node);
  read(j, "seed_infections", "", cfg.seed_infections);

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["scenario"] = cfg.scenario;
  j["topology_file"] = cfg.topology_file ? json(*cfg.topology_file) : json(nullptr);
  j["reasoner"] = to_string(cfg.reasoner);
  j["hyperparameters"] = {{"k", cfg.horizon},         {"r", cfg.max_rounds}, {"att_max", cfg.max_attempts},
                          {"epsilon", cfg.effective_epsilon()}, {"gamma", cfg.discount}, {"delta", cfg.delta}};
  j["seed"] = cfg.seed;
  j["pandemic_mode"] = to_string(cfg.pandemic_mode);
  j["instrumentation"] = cfg.instrumentation;
  j["introspection"] = cfg.introspection;
  j["partition"] = to_string(cfg.effective_partition());
  j["platoon_size"] = cfg.platoon_size;
  j["initial_jitter"] = cfg.initial_jitter;
  j["steps"] = cfg.episode_steps();
  const auto& p = cfg.platoon;
  j["platoon"] = {{"dt", p.dt},
                  {"v_max", p.v_max},
                  {"target_headway", p.target_headway},
                  {"target_velocity", p.target_velocity},
                  {"min_headway", p.min_headway},
                  {"alpha", p.alpha},
                  {"beta", p.beta},
                  {"a_min", p.a_min},
                  {"a_max", p.a_max},
                  {"safety_threshold", p.safety_threshold},
                  {"emergency_gain", p.emergency_gain},
                  {"tracking_gain_h", p.tracking_gain_h},
                  {"tracking_gain_v", p.tracking_gain_v}};
  const auto& d = cfg.pandemic;
  j["pandemic"] = {{"beta0", d.beta0},
                   {"kappa", d.kappa},
                   {"infectious_period", d.infectious_period},
                   {"p_critical", d.p_critical},
                   {"critical_period", d.critical_period},
                   {"p_death", d.p_death},
                   {"contact", d.contact},
                   {"eta", d.eta},
                   {"capacity_fraction", d.capacity_fraction},
                   {"extinction_threshold", d.extinction_threshold}};
  j["seed_node"] = cfg.seed_node;
  j["seed_infections"] = cfg.seed_infections;
  return j;
}

}  // namespace mfn
