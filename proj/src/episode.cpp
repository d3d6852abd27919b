#include "mfn/episode.hpp"

#include <cmath>
#include <ostream>
#include <spdlog/spdlog.h>

#include "mfn/cities.hpp"
#include "mfn/errors.hpp"
#include "mfn/heuristics.hpp"
#include "mfn/introspection.hpp"
#include "mfn/llm.hpp"
#include "mfn/run_log.hpp"

namespace mfn {

using nlohmann::json;

namespace {

struct AgentRuntime {
  CountingReasoner* reasoner = nullptr;
  std::optional<Introspector> introspector;
  std::optional<Observation> epoch_observation;
  Action epoch_action = 0.0;
  double epoch_reward = 0.0;
};

double total(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

json state_json(const PandemicState& s, const std::vector<double>& new_infections) {
  std::vector<double> S, I, C, D, R;
  for (const auto& n : s.nodes) {
    S.push_back(n.susceptible);
    I.push_back(n.infected);
    C.push_back(n.critical);
    D.push_back(n.dead);
    R.push_back(n.recovered);
  }
  return {{"S", S}, {"I", I}, {"C", C}, {"D", D}, {"R", R}, {"levels", s.levels}, {"new_infections", new_infections}};
}

void add_pandemic_day(PandemicTrace& trace, const PandemicState& s, const std::vector<double>& new_infections) {
  std::vector<double> I, C, D;
  for (const auto& n : s.nodes) {
    I.push_back(n.infected);
    C.push_back(n.critical);
    D.push_back(n.dead);
  }
  trace.infected.push_back(total(I));
  trace.critical.push_back(total(C));
  trace.deaths.push_back(total(D));
  trace.new_infections.push_back(total(new_infections));
}

json strategy_json(const TemporalStrategy& s) {
  json j = json::object();
  for (const auto& [k, v] : s.parameters) j[k] = v;
  return j;
}

// Everything shared by the two domain loops.
class EpisodeRunner {
 public:
  EpisodeRunner(const RunConfig& cfg, std::ostream* log, const EpisodeHooks& hooks)
      : cfg_(cfg), info_(cfg.scenario_info()), hooks_(hooks), writer_(log), topo_(scenario_topology(cfg)),
        comm_(topo_.topology.agent_count()) {
    ncfg_.max_rounds = cfg.max_rounds;
    ncfg_.epsilon = cfg.effective_epsilon();
    ncfg_.rollout = {cfg.horizon, cfg.discount, cfg.max_attempts};
    ncfg_.partition = cfg.effective_partition();
    ncfg_.parallelism = cfg.parallelism;
    result_.summary.domain = info_.domain;
    result_.summary.agents = topo_.topology.agent_count();
  }

  EpisodeResult run() {
    if (info_.domain == Domain::Platoon) {
      run_platoon();
    } else {
      run_pandemic();
    }
    return std::move(result_);
  }

 private:
  std::size_t agent_count() const { return topo_.topology.agent_count(); }

  void setup_agents(const EnvironmentModel& model, const Strategy& initial) {
    const std::size_t n = agent_count();
    contexts_.resize(n);
    runtime_.resize(n);
    owned_.clear();
    std::shared_ptr<ChatTransport> transport;
    if (cfg_.reasoner == ReasonerKind::Llm && !hooks_.reasoner_factory) transport = make_http_transport(cfg_.llm);
    const EnvironmentSpec spec = info_.domain == Domain::Platoon ? platoon_spec(cfg_.platoon) : pandemic_spec(cfg_.pandemic);
    for (std::size_t i = 0; i < n; ++i) {
      const AgentId id(i);
      std::unique_ptr<Reasoner> inner;
      if (hooks_.reasoner_factory) {
        inner = hooks_.reasoner_factory(id, cfg_);
      } else if (cfg_.reasoner == ReasonerKind::Llm) {
        inner = make_llm_reasoner(cfg_.llm, spec, id, transport);
      } else if (info_.domain == Domain::Platoon) {
        inner = std::make_unique<PlatoonHeuristic>(cfg_.platoon, info_.platoon, 1.0, cfg_.delta);
      } else {
        inner = std::make_unique<PandemicHeuristic>(cfg_.pandemic);
      }
      owned_.push_back(std::make_unique<CountingReasoner>(std::move(inner)));
      runtime_[i].reasoner = owned_.back().get();
      contexts_[i].id = id;
      contexts_[i].reasoner = owned_.back().get();
      contexts_[i].model = &model;
      contexts_[i].strategy = initial;
    }
  }

  void write_header(json extra) {
    json h = {{"type", "header"},
              {"schema", kRunLogSchema},
              {"domain", info_.domain == Domain::Platoon ? "platoon" : "pandemic"},
              {"scenario", cfg_.scenario},
              {"agents", agent_count()},
              {"steps", cfg_.episode_steps()},
              {"topology", topo_.name}};
    json edges = json::array();
    for (const auto& e : topo_.topology.edges()) edges.push_back({e.a, e.b});
    h["edges"] = edges;
    for (auto& [k, v] : extra.items()) h[k] = v;
    h["config"] = config_to_json(cfg_);
    writer_.write(h);
  }

  // Introspection at a decision epoch, then negotiation; returns the
  // actions to cache until the next epoch.
  JointAction decide(int t, const std::vector<Observation>& obs, const std::vector<double>& rewards,
                     const JointAction& cached, std::function<NormalizationBounds(const Observation&)> bounds) {
    const std::size_t n = agent_count();
    for (std::size_t i = 0; i < n; ++i) {
      AgentRuntime& rt = runtime_[i];
      AgentContext& ctx = contexts_[i];
      if (cfg_.introspection) {
        if (!rt.introspector) rt.introspector.emplace(bounds(obs[i]));
        if (rt.epoch_observation) {
          DiagnosisInput diag;
          diag.previous_observation = *rt.epoch_observation;
          diag.current_observation = obs[i];
          diag.previous_action = rt.epoch_action;
          diag.current_action = rt.epoch_action;
          diag.previous_reward = rt.epoch_reward;
          diag.current_reward = rewards[i];
          diag.rounds_used = last_rounds_used_;
          diag.converged = last_converged_;
          auto outcome = rt.introspector->reflect(*rt.epoch_observation, obs[i], rt.epoch_action, rewards[i], t,
                                                  ctx.strategy, *rt.reasoner, diag);
          if (outcome.triggered) {
            ++result_.summary.reflections;
            const bool changed = outcome.strategy.temporal != ctx.strategy.temporal;
            if (changed) ++result_.summary.revisions;
            writer_.write({{"type", "revision"},
                           {"t", t},
                           {"agent", i},
                           {"drift", outcome.signal->drift},
                           {"directives", outcome.signal->directives},
                           {"before", strategy_json(ctx.strategy.temporal)},
                           {"after", strategy_json(outcome.strategy.temporal)},
                           {"changed", changed}});
            ctx.strategy.temporal = outcome.strategy.temporal;
          }
        }
      }
      ctx.observation = obs[i];
      ctx.previous_immediate_reward = rewards[i];
      if (auto it = cached.find(AgentId(i)); it != cached.end()) ctx.fallback_action = it->second;
    }

    NegotiationOutcome outcome = negotiate(contexts_, topo_.topology, ncfg_, t, cfg_.instrumentation ? &comm_ : nullptr);
    ++result_.summary.negotiations;
    result_.summary.max_rounds_used = std::max(result_.summary.max_rounds_used, outcome.record.rounds_used);
    last_rounds_used_ = outcome.record.rounds_used;
    last_converged_ = outcome.record.converged;
    writer_.write(to_json(outcome.record, outcome.final_actions));
    if (hooks_.on_negotiation) hooks_.on_negotiation(t, outcome);

    for (std::size_t i = 0; i < n; ++i) {
      runtime_[i].epoch_observation = obs[i];
      runtime_[i].epoch_action = outcome.final_actions.at(AgentId(i));
      runtime_[i].epoch_reward = rewards[i];
    }
    return outcome.final_actions;
  }

  void finish(bool complete, const std::optional<std::string>& error, json metrics) {
    std::size_t calls = 0;
    for (const auto* r : owned_ptrs()) calls += r->calls();
    comm_.record_reasoner_calls(calls);
    result_.summary.comm = summarize(comm_, agent_count());
    result_.summary.complete = complete;
    result_.summary.error = error;
    json s = {{"type", "summary"},
              {"complete", complete},
              {"steps", result_.summary.steps},
              {"metrics", metrics},
              {"comm", to_json(result_.summary.comm)},
              {"negotiations", result_.summary.negotiations},
              {"collisions", result_.summary.collisions},
              {"overrides", result_.summary.overrides},
              {"reflections", result_.summary.reflections},
              {"revisions", result_.summary.revisions},
              {"max_rounds_used", result_.summary.max_rounds_used}};
    if (error) s["error"] = *error;
    writer_.write(s);
  }

  std::vector<const CountingReasoner*> owned_ptrs() const {
    std::vector<const CountingReasoner*> out;
    for (const auto& r : owned_) out.push_back(r.get());
    return out;
  }

  void run_platoon() {
    const PlatoonParams& p = cfg_.platoon;
    PlatoonModel model(p);
    setup_agents(model, PlatoonHeuristic::initial_strategy());
    const std::size_t n = agent_count();
    const int steps = cfg_.episode_steps();

    PlatoonState state = initial_platoon_state(info_.platoon, n, p, cfg_.seed, cfg_.initial_jitter);
    write_header({{"target_headway", p.target_headway}, {"dt", p.dt}});
    writer_.write({{"type", "initial"}, {"positions", state.positions}, {"velocities", state.velocities}});

    JointAction cached;
    std::vector<Observation> anchor;
    try {
      for (int t = 0; t < steps; ++t) {
        std::vector<Observation> obs(n);
        std::vector<double> rewards(n);
        for (std::size_t i = 0; i < n; ++i) {
          obs[i] = platoon_observe(state, AgentId(i));
          rewards[i] = platoon_evaluate(state, AgentId(i), p).reward;
        }
        const bool epoch = t % cfg_.delta == 0;
        if (epoch) {
          cached = decide(t, obs, rewards, cached, [&](const Observation& o) { return platoon_normalization(o, p); });
          anchor = obs;
        }

        JointAction applied;
        std::vector<std::size_t> overridden;
        std::vector<double> planned(n, 0.0), executed(n, 0.0);
        planned[0] = executed[0] = leader_profile(info_.platoon, state.step, p);
        for (std::size_t i = 1; i < n; ++i) {
          planned[i] = p.action_space().clamp(cached.at(AgentId(i)) + tracking_correction(obs[i], anchor[i], p));
          auto [a, ov] = safety_override(obs[i], planned[i], p);
          if (ov) {
            overridden.push_back(i);
            ++result_.summary.overrides;
          }
          executed[i] = a;
          applied[AgentId(i)] = a;
        }

        PlatoonState next = platoon_step(state, applied, p);
        std::vector<double> step_rewards(n);
        std::vector<std::size_t> collided;
        for (std::size_t i = 0; i < n; ++i) {
          const Evaluation e = platoon_evaluate(next, AgentId(i), p);
          step_rewards[i] = e.reward;
          if (!e.verdict.passed && e.verdict.violated_rule == "collision") collided.push_back(i);
        }
        result_.summary.collisions += collided.size();

        writer_.write({{"type", "step"},
                       {"t", t},
                       {"negotiated", epoch},
                       {"planned", planned},
                       {"applied", executed},
                       {"overridden", overridden},
                       {"collisions", collided},
                       {"rewards", step_rewards},
                       {"positions", next.positions},
                       {"velocities", next.velocities}});

        std::vector<double> h, v;
        for (std::size_t i = 1; i < n; ++i) {
          h.push_back(next.headway(i));
          v.push_back(next.velocities[i]);
        }
        result_.platoon_trace.headways.push_back(std::move(h));
        result_.platoon_trace.velocities.push_back(std::move(v));
        result_.platoon_trace.leader_velocity.push_back(next.velocities[0]);
        state = std::move(next);
        result_.summary.steps = t + 1;
      }
    } catch (const Error& e) {
      spdlog::error("episode aborted at step {}: {}", result_.summary.steps, e.what());
      finish(false, std::string(e.what()), json(nullptr));
      return;
    }
    result_.summary.platoon = compute_platoon_metrics(result_.platoon_trace, p.target_headway);
    finish(true, std::nullopt, to_json(*result_.summary.platoon));
  }

  void run_pandemic() {
    const PandemicParams& p = cfg_.pandemic;
    PandemicModel model(p);
    setup_agents(model, PandemicHeuristic::initial_strategy());
    const std::size_t n = agent_count();
    const int steps = cfg_.episode_steps();

    PandemicState state = initial_pandemic_state(
        topo_.topology, {info_.population, cfg_.seed_node, cfg_.seed_infections}, p);
    std::mt19937_64 rng(cfg_.seed);
    result_.pandemic_trace.population = state.total_population();
    write_header({{"population", state.total_population()}, {"mode", to_string(cfg_.pandemic_mode)}});
    json init = state_json(state, state.cumulative_infections);
    init["type"] = "initial";
    writer_.write(init);
    add_pandemic_day(result_.pandemic_trace, state, state.cumulative_infections);

    JointAction cached;
    std::vector<Observation> anchor;
    try {
      for (int t = 0; t < steps; ++t) {
        std::vector<Observation> obs(n);
        std::vector<double> rewards(n);
        for (std::size_t i = 0; i < n; ++i) {
          obs[i] = pandemic_observe(state, topo_.topology, AgentId(i));
          rewards[i] = pandemic_evaluate(state, AgentId(i), p).reward;
        }
        const bool epoch = t % cfg_.delta == 0;
        if (epoch) {
          cached = decide(t, obs, rewards, cached, [&](const Observation& o) { return pandemic_normalization(o, p); });
        }
        std::vector<double> new_infections;
        PandemicState next = pandemic_step(state, topo_.topology, cached, cfg_.pandemic_mode, p, &rng, &new_infections);
        std::vector<double> step_rewards(n);
        std::vector<std::size_t> over_capacity;
        for (std::size_t i = 0; i < n; ++i) {
          const Evaluation e = pandemic_evaluate(next, AgentId(i), p);
          step_rewards[i] = e.reward;
          if (!e.verdict.passed) over_capacity.push_back(i);
        }
        json rec = state_json(next, new_infections);
        rec["type"] = "step";
        rec["t"] = t;
        rec["negotiated"] = epoch;
        rec["rewards"] = step_rewards;
        rec["over_capacity"] = over_capacity;
        writer_.write(rec);
        add_pandemic_day(result_.pandemic_trace, next, new_infections);
        state = std::move(next);
        result_.summary.steps = t + 1;
      }
    } catch (const Error& e) {
      spdlog::error("episode aborted at day {}: {}", result_.summary.steps, e.what());
      finish(false, std::string(e.what()), json(nullptr));
      return;
    }
    result_.summary.pandemic = compute_pandemic_metrics(result_.pandemic_trace);
    finish(true, std::nullopt, to_json(*result_.summary.pandemic));
  }

  const RunConfig& cfg_;
  ScenarioInfo info_;
  const EpisodeHooks& hooks_;
  RunLogWriter writer_;
  TopologyConfig topo_;
  CommStats comm_;
  NegotiationConfig ncfg_;
  std::vector<std::unique_ptr<CountingReasoner>> owned_;
  std::vector<AgentContext> contexts_;
  std::vector<AgentRuntime> runtime_;
  int last_rounds_used_ = 0;
  bool last_converged_ = false;
  EpisodeResult result_;
};

}  // namespace

TopologyConfig scenario_topology(const RunConfig& cfg) {
  const ScenarioInfo info = cfg.scenario_info();
  if (info.domain == Domain::Platoon) {
    if (cfg.topology_file) {
      TopologyConfig t = load_topology_file(*cfg.topology_file);
      if (!t.topology.is_chain() || t.topology.agent_count() != cfg.platoon_size) {
        throw Error(ErrorCode::ValidationError, "topology_file: platoons need a chain of platoon_size vehicles");
      }
      return t;
    }
    std::vector<std::string> roles{"leader"};
    for (std::size_t i = 1; i < cfg.platoon_size; ++i) roles.push_back("follower");
    return {"chain", roles, make_chain(cfg.platoon_size)};
  }
  if (cfg.topology_file) return load_topology_file(*cfg.topology_file);
  return city_topology(info.city);
}

EpisodeResult run_episode(const RunConfig& cfg, std::ostream* log, const EpisodeHooks& hooks) {
  cfg.validate();
  EpisodeRunner runner(cfg, log, hooks);
  return runner.run();
}

std::string default_log_path(const RunConfig& cfg) {
  std::string size;
  if (resolve_scenario(cfg.scenario).domain == Domain::Platoon) size = "_n" + std::to_string(cfg.platoon_size);
  return cfg.output_dir + "/" + cfg.scenario + size + "_d" + std::to_string(cfg.delta) + "_seed" +
         std::to_string(cfg.seed) + ".jsonl";
}

}  // namespace mfn
