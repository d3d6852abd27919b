#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mfn/config.hpp"
#include "mfn/episode.hpp"
#include "mfn/errors.hpp"
#include "mfn/run_log.hpp"
#include "mfn/suite.hpp"

namespace {

// Process exit codes by failure category.
enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kEnvironment = 3,
  kReasoner = 4,
  kLog = 5,
  kSuiteFailures = 6,
};

int exit_code(mfn::ErrorCode c) {
  using mfn::ErrorCode;
  switch (c) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::DisconnectedGraph:
    case ErrorCode::SelfLoop:
    case ErrorCode::NonPositiveWeight:
    case ErrorCode::InvalidParams:
      return kConfig;
    case ErrorCode::ReasonerFailure:
      return kReasoner;
    case ErrorCode::IncompleteLog:
      return kLog;
    default:
      return kEnvironment;
  }
}

struct Overrides {
  std::string config_path;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> delta;
  std::string reasoner;
  std::string output_dir;
  std::optional<int> steps;
  std::optional<std::size_t> platoon_size;
  bool expected_value = false;
  bool no_introspection = false;
  bool no_instrumentation = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_option("-s,--scenario", o.scenario, "scenario id");
  cmd->add_option("--delta", o.delta, "decision interval in steps");
  cmd->add_option("--reasoner", o.reasoner, "heuristic or llm")->check(CLI::IsMember({"heuristic", "llm"}));
  cmd->add_option("-o,--output-dir", o.output_dir, "directory for run logs");
  cmd->add_option("--steps", o.steps, "episode length override");
  cmd->add_option("--platoon-size", o.platoon_size, "vehicles in the platoon");
  cmd->add_flag("--expected-value", o.expected_value, "deterministic pandemic dynamics");
  cmd->add_flag("--no-introspection", o.no_introspection, "disable strategy revision");
  cmd->add_flag("--no-instrumentation", o.no_instrumentation, "disable message accounting");
}

mfn::RunConfig build_config(const Overrides& o) {
  mfn::RunConfig cfg = o.config_path.empty() ? mfn::RunConfig{} : mfn::load_config(o.config_path);
  if (!o.scenario.empty()) cfg.scenario = o.scenario;
  if (o.seed) cfg.seed = *o.seed;
  if (o.delta) cfg.delta = *o.delta;
  if (!o.reasoner.empty()) cfg.reasoner = o.reasoner == "llm" ? mfn::ReasonerKind::Llm : mfn::ReasonerKind::Heuristic;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.steps) cfg.steps = *o.steps;
  if (o.platoon_size) cfg.platoon_size = *o.platoon_size;
  if (o.expected_value) cfg.pandemic_mode = mfn::PandemicMode::ExpectedValue;
  if (o.no_introspection) cfg.introspection = false;
  if (o.no_instrumentation) cfg.instrumentation = false;
  cfg.validate();
  return cfg;
}

nlohmann::json summary_json(const mfn::EpisodeSummary& s, const std::string& log_path) {
  nlohmann::json j = {{"complete", s.complete},  {"steps", s.steps},       {"agents", s.agents},
                      {"negotiations", s.negotiations}, {"collisions", s.collisions}, {"overrides", s.overrides},
                      {"reflections", s.reflections},   {"revisions", s.revisions},   {"log", log_path},
                      {"comm", mfn::to_json(s.comm)}};
  if (s.platoon) j["metrics"] = mfn::to_json(*s.platoon);
  if (s.pandemic) j["metrics"] = mfn::to_json(*s.pandemic);
  if (s.error) j["error"] = *s.error;
  return j;
}

int cmd_run(const Overrides& o, const std::string& log_override) {
  const mfn::RunConfig cfg = build_config(o);
  const std::string path = log_override.empty() ? mfn::default_log_path(cfg) : log_override;
  if (auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream log(path);
  if (!log) throw mfn::Error(mfn::ErrorCode::ValidationError, "output_dir: cannot write '" + path + "'");
  const mfn::EpisodeResult r = mfn::run_episode(cfg, &log);
  std::cout << summary_json(r.summary, path).dump(2) << '\n';
  return r.summary.complete ? kOk : kEnvironment;
}

int cmd_replay(const std::string& path) {
  const mfn::ReplayResult r = mfn::replay_metrics(path);
  nlohmann::json j = {{"agents", r.agents},
                      {"steps", r.steps},
                      {"negotiations", r.negotiations},
                      {"rounds", r.rounds},
                      {"messages", r.messages},
                      {"message_bytes", r.message_bytes},
                      {"mean_bytes_per_agent_round", r.mean_bytes_per_agent_round}};
  if (r.platoon) j["metrics"] = mfn::to_json(*r.platoon);
  if (r.pandemic) j["metrics"] = mfn::to_json(*r.pandemic);
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_suite(const Overrides& o, const std::vector<std::string>& scenarios, std::vector<std::uint64_t> seeds,
              int runs, const std::string& csv_path, const std::string& log_dir) {
  mfn::SuiteConfig sc;
  sc.base = build_config(o);
  sc.scenarios = scenarios.empty() ? std::vector<std::string>{sc.base.scenario} : scenarios;
  if (seeds.empty()) {
    for (int i = 0; i < runs; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  }
  sc.seeds = seeds;
  if (!log_dir.empty()) sc.log_dir = log_dir;
  const mfn::SuiteResult r = mfn::run_suite(sc);
  if (csv_path.empty() || csv_path == "-") {
    mfn::write_suite_csv(r, std::cout);
  } else {
    if (auto dir = std::filesystem::path(csv_path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream out(csv_path);
    mfn::write_suite_csv(r, out);
  }
  return r.failures.empty() ? kOk : kSuiteFailures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field negotiation for decentralized multi-agent control"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  Overrides run_o;
  std::string log_path;
  auto* run = app.add_subcommand("run", "run one episode and write its log");
  add_common(run, run_o);
  run->add_option("--seed", run_o.seed, "random seed");
  run->add_option("--log", log_path, "log file (default: <output-dir>/<scenario>_n<N>_d<delta>_seed<seed>.jsonl)");

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "recompute metrics from a run log");
  replay->add_option("log", replay_path, "run log")->required();

  Overrides suite_o;
  std::vector<std::string> scenarios;
  std::vector<std::uint64_t> seeds;
  int runs = 5;
  std::string csv_path, log_dir;
  auto* suite = app.add_subcommand("suite", "run scenarios over several seeds and aggregate");
  add_common(suite, suite_o);
  suite->add_option("--scenarios", scenarios, "scenario ids");
  suite->add_option("--seeds", seeds, "explicit seeds");
  suite->add_option("--runs", runs, "seeds 0..runs-1 when --seeds is absent")->check(CLI::PositiveNumber);
  suite->add_option("--csv", csv_path, "output CSV (default stdout)");
  suite->add_option("--log-dir", log_dir, "keep per-run logs here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("mfnego"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) return cmd_run(run_o, log_path);
    if (*replay) return cmd_replay(replay_path);
    if (*suite) return cmd_suite(suite_o, scenarios, seeds, runs, csv_path, log_dir);
  } catch (const mfn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
