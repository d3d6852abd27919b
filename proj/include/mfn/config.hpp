#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "mfn/pandemic.hpp"
#include "mfn/platoon.hpp"
#include "mfn/topology.hpp"

namespace mfn {

enum class Domain { Platoon, Pandemic };
enum class ReasonerKind { Heuristic, Llm };

std::string to_string(ReasonerKind k);

struct LlmEndpointConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string path = "/v1/chat/completions";
  std::string model_name = "gpt-4o";
  double temperature = 0.3;
  double top_p = 1.0;
  int max_retries = 3;
  std::string api_key_env = "MFNEGO_API_KEY";
  int timeout_seconds = 60;
  int max_concurrency = 4;
  std::optional<std::string> transcript_path;

  void validate() const;
};

// A named scenario and what it resolves to.
struct ScenarioInfo {
  std::string id;
  Domain domain = Domain::Platoon;
  PlatoonScenario platoon = PlatoonScenario::CatchUp;
  std::string city;  // pandemic topology name
  double population = 0.0;
};

// cpp-catch-up, cpp-slow-down, pc-helsinki, pc-hong-kong, pc-new-york.
ScenarioInfo resolve_scenario(const std::string& id);

struct RunConfig {
  std::string scenario = "cpp-catch-up";
  std::optional<std::string> topology_file;
  ReasonerKind reasoner = ReasonerKind::Heuristic;
  LlmEndpointConfig llm;

  int horizon = 2;        // k
  int max_rounds = 3;     // r
  int max_attempts = 10;  // Att_max
  std::optional<double> epsilon;  // 0.02 for platoons, 0 for pandemics when unset
  double discount = 0.9;  // gamma
  int delta = 1;          // decision interval

  std::uint64_t seed = 0;
  std::string output_dir = "runs";
  PandemicMode pandemic_mode = PandemicMode::Stochastic;
  bool instrumentation = true;
  bool introspection = true;
  std::optional<PartitionScheme> partition;  // directional (platoon) / components (pandemic) when unset
  std::size_t platoon_size = 8;
  double initial_jitter = 0.0;
  int parallelism = 1;
  std::optional<int> steps;  // episode length override

  PlatoonParams platoon;
  PandemicParams pandemic;
  std::size_t seed_node = 0;
  double seed_infections = 5.0;

  // Throws ValidationError naming the offending field.
  void validate() const;

  ScenarioInfo scenario_info() const { return resolve_scenario(scenario); }
  double effective_epsilon() const;
  PartitionScheme effective_partition() const;
  int episode_steps() const;
};

// Reads a JSON config; missing fields keep their defaults, unknown fields are
// rejected. Throws ParseError on malformed JSON and ValidationError otherwise.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace mfn
