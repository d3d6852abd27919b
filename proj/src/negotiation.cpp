#include "mfn/negotiation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <spdlog/spdlog.h>
#include <thread>

#include "mfn/errors.hpp"
#include "mfn/wire.hpp"

namespace mfn {

ConsensusConfig ConsensusConfig::for_space(const ActionSpace& space, double epsilon) {
  return {epsilon, space.min, space.max, space.discrete};
}

void ConsensusConfig::validate() const {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidParams, "epsilon must be >= 0");
  if (!discrete && !(action_max > action_min)) throw Error(ErrorCode::InvalidParams, "action_max must exceed action_min");
}

double consensus_delta(const ConsensusConfig& cfg) {
  cfg.validate();
  if (cfg.discrete) return 0.0;
  return cfg.epsilon * (cfg.action_max - cfg.action_min);
}

bool actions_agree(Action a, Action b, double delta) noexcept {
  if (delta <= 0.0) return a == b;
  return std::abs(a - b) < delta;
}

bool check_consensus(const Proposal& own, std::span<const Proposal> neighbors, double delta) {
  for (const auto& nb : neighbors) {
    const auto their_view_of_me = nb.action_for(own.proposer);
    const auto my_view_of_them = own.action_for(nb.proposer);
    if (!their_view_of_me && !my_view_of_them) {
      throw Error(ErrorCode::IncomparableProposals,
                  to_string(own.proposer) + " and " + to_string(nb.proposer) + " share no action component");
    }
    if (their_view_of_me && !actions_agree(own.self_action, *their_view_of_me, delta)) return false;
    if (my_view_of_them && !actions_agree(nb.self_action, *my_view_of_them, delta)) return false;
  }
  return true;
}

Action blend_candidate(const ConfidenceWeights& weights, Action own_action, Action neighbor_action,
                       Action unobservable_trend, const ActionSpace& space) {
  if (space.discrete) throw Error(ErrorCode::DiscreteDomain, "use select_by_weight for discrete actions");
  if (!weights.normalized()) throw Error(ErrorCode::WeightsNotNormalized, "weights must sum to 1");
  const double blended = weights.my_weight * own_action + weights.neighbor_weight * neighbor_action +
                         weights.unobservable_weight * unobservable_trend;
  return space.clamp(blended);
}

Action select_by_weight(const ConfidenceWeights& weights, Action own_action, Action neighbor_action,
                        Action unobservable_trend) {
  if (!weights.normalized()) throw Error(ErrorCode::WeightsNotNormalized, "weights must sum to 1");
  Action pick = own_action;
  double best = weights.my_weight;
  if (weights.neighbor_weight > best) {
    pick = neighbor_action;
    best = weights.neighbor_weight;
  }
  if (weights.unobservable_weight > best) pick = unobservable_trend;
  return pick;
}

std::vector<double> confidence_scores(const Proposal& own, std::span<const Proposal> neighbors,
                                      const ConfidenceWeights& weights) {
  std::vector<double> rewards;
  rewards.reserve(neighbors.size() + 1);
  rewards.push_back(own.rollout_reward);
  for (const auto& nb : neighbors) rewards.push_back(nb.rollout_reward);

  double peak = -std::numeric_limits<double>::infinity();
  for (double r : rewards) {
    if (std::isfinite(r)) peak = std::max(peak, r);
  }
  std::vector<double> scores(rewards.size(), 0.0);
  if (!std::isfinite(peak)) {
    std::fill(scores.begin(), scores.end(), 1.0);
  } else {
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      if (std::isfinite(rewards[i])) scores[i] = std::exp(rewards[i] - peak);
    }
  }
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = scores[i] / total * (i == 0 ? weights.my_weight : weights.neighbor_weight);
  }
  return scores;
}

Action finalize_decision(const Proposal& own, std::span<const Proposal> neighbors, std::span<const double> confidences,
                         const ActionSpace& space) {
  if (confidences.size() != neighbors.size() + 1) throw Error(ErrorCode::LengthMismatch, "one confidence per proposal");
  struct Entry {
    AgentId proposer;
    Action action;
    double confidence;
  };
  std::vector<Entry> entries;
  entries.push_back({own.proposer, own.self_action, confidences[0]});
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    if (auto a = neighbors[i].action_for(own.proposer)) entries.push_back({neighbors[i].proposer, *a, confidences[i + 1]});
  }
  double total = 0.0;
  for (const auto& e : entries) {
    if (!(e.confidence >= 0.0)) throw Error(ErrorCode::InvalidParams, "negative confidence");
    total += e.confidence;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::AllZeroConfidence, to_string(own.proposer));

  if (space.discrete) {
    const Entry* best = nullptr;
    for (const auto& e : entries) {
      if (!best || e.confidence > best->confidence || (e.confidence == best->confidence && e.proposer < best->proposer)) {
        best = &e;
      }
    }
    return space.clamp(best->action);
  }
  double acc = 0.0;
  for (const auto& e : entries) acc += e.confidence * e.action;
  return space.clamp(acc / total);
}

void NegotiationConfig::validate() const {
  if (max_rounds < 1) throw Error(ErrorCode::InvalidParams, "max_rounds must be >= 1");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidParams, "epsilon must be >= 0");
  if (parallelism < 1) throw Error(ErrorCode::InvalidParams, "parallelism must be >= 1");
  rollout.validate();
  default_weights.normalize();
}

namespace {

struct AgentState {
  SubgroupPartition partition;
  std::map<AgentId, MeanFieldStats> heard;  // latest summary received from (or observed of) each neighbor
  std::vector<Proposal> received;           // in topology neighbor order
  std::optional<Proposal> proposal;
  std::optional<ConfidenceWeights> weights;
  AgentRoundRecord record;
};

template <typename F>
void for_each_agent(std::size_t count, int parallelism, F&& fn) {
  if (parallelism <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), count);
    for (std::size_t w = 0; w < n_workers; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

PartitionedStats knowledge_of(const AgentState& st) {
  PartitionedStats out;
  for (const auto& members : st.partition.groups) {
    GroupStats g;
    g.members = members;
    for (AgentId m : members) {
      if (auto it = st.heard.find(m); it != st.heard.end()) g.stats = merge(g.stats, it->second);
    }
    out.groups.push_back(std::move(g));
  }
  return out;
}

// Summary forwarded to `to`: everything heard from outside the recipient's
// subgroup, plus the sender's own state. Single-group partitions only leave
// out the recipient's own report.
MeanFieldStats outgoing_stats(const AgentState& st, AgentId to, const std::vector<double>& own_state) {
  std::set<AgentId> excluded{to};
  if (st.partition.groups.size() > 1) {
    for (const auto& members : st.partition.groups) {
      if (std::find(members.begin(), members.end(), to) != members.end()) excluded.insert(members.begin(), members.end());
    }
  }
  MeanFieldStats acc;
  for (const auto& [id, s] : st.heard) {
    if (!excluded.contains(id)) acc = merge(acc, s);
  }
  return welford_update(acc, own_state, 1.0);
}

Proposal fallback_proposal(const AgentContext& ctx, int round) {
  Proposal p;
  p.proposer = ctx.id;
  p.observation = ctx.observation;
  p.self_action = ctx.model->action_space().clamp(ctx.fallback_action.value_or(0.0));
  p.rollout_reward = -std::numeric_limits<double>::infinity();
  p.round = round;
  p.verdict = ConstraintVerdict::fail(0, "fallback");
  return p;
}

void fill_record(AgentRoundRecord& rec, AgentId id, const Proposal& p) {
  rec.agent = id;
  rec.action = p.self_action;
  rec.rollout_reward = p.rollout_reward;
  rec.verified = p.verdict.passed;
}

}  // namespace

NegotiationOutcome negotiate(std::span<AgentContext> agents, const Topology& topology, const NegotiationConfig& cfg,
                             int time_step, CommStats* comm) {
  cfg.validate();
  if (agents.size() != topology.agent_count()) {
    throw Error(ErrorCode::InvalidParams, "agent count differs from topology size");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].id.index != i || !agents[i].reasoner || !agents[i].model) {
      throw Error(ErrorCode::InvalidParams, "agent contexts must be complete and ordered by id");
    }
  }

  const std::size_t n_agents = agents.size();
  std::vector<AgentState> states(n_agents);
  NegotiationOutcome out;
  out.record.time_step = time_step;
  if (comm) comm->record_negotiation();

  // Initial knowledge from directly observed neighbor states.
  for (std::size_t i = 0; i < n_agents; ++i) {
    AgentContext& ctx = agents[i];
    AgentState& st = states[i];
    st.partition = n_agents > 1 ? partition_neighborhood(topology, ctx.id, cfg.partition) : SubgroupPartition{ctx.id, {}};
    for (const auto& [id, state] : ctx.model->observed_neighbor_states(ctx.observation)) {
      if (!topology.contains(id)) continue;
      const auto& nbs = topology.neighbors(ctx.id);
      if (std::find(nbs.begin(), nbs.end(), id) == nbs.end()) continue;
      st.heard[id] = welford_update(MeanFieldStats{}, state, topology.weight(ctx.id, id));
    }
    ctx.strategy.spatial.stats = knowledge_of(st);
  }

  // Round 0: every agent's own verified proposal.
  for_each_agent(n_agents, cfg.parallelism, [&](std::size_t i) {
    AgentContext& ctx = agents[i];
    AgentState& st = states[i];
    ProposalRequest req;
    req.agent = ctx.id;
    req.observation = &ctx.observation;
    req.strategy = &ctx.strategy;
    req.mean_field = &ctx.strategy.spatial.stats;
    req.reasoner = ctx.reasoner;
    req.model = ctx.model;
    req.config = cfg.rollout;
    req.round = 0;
    req.previous_immediate_reward = ctx.previous_immediate_reward;
    st.record = AgentRoundRecord{};
    try {
      auto result = generate_proposal(req);
      st.record.attempts = static_cast<int>(result.attempts.size());
      st.proposal = std::move(result.proposal);
    } catch (const Error& e) {
      spdlog::warn("{}: no initial proposal ({}), using fallback action", to_string(ctx.id), e.what());
      st.record.error = e.what();
      st.proposal = fallback_proposal(ctx, 0);
    }
    fill_record(st.record, ctx.id, *st.proposal);
    st.record.merged = ctx.strategy.spatial.stats.merged();
  });
  for (const auto& st : states) out.record.initial.push_back(st.record);

  std::vector<std::size_t> dimension(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) {
    dimension[i] = agents[i].model->mean_field_state(agents[i].observation).size();
  }

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    if (comm) comm->begin_round();
    RoundRecord rr;
    rr.round = round;

    // Phase 1: per-recipient messages, passed through the wire encoding.
    std::vector<std::vector<NegotiationMessage>> inbox(n_agents);
    for (std::size_t i = 0; i < n_agents; ++i) {
      const AgentContext& ctx = agents[i];
      const AgentState& st = states[i];
      const auto own_state = ctx.model->mean_field_state(ctx.observation);
      for (AgentId to : topology.neighbors(ctx.id)) {
        NegotiationMessage msg;
        msg.sender = ctx.id;
        msg.receiver = to;
        msg.round = static_cast<std::uint32_t>(round);
        msg.urgency = st.proposal->urgency;
        msg.sender_action = st.proposal->self_action;
        msg.proposed_for_receiver = st.proposal->action_for(to);
        msg.rollout_reward = st.proposal->rollout_reward;
        msg.stats = outgoing_stats(st, to, own_state);
        const auto bytes = encode_message(msg, dimension[i]);
        if (comm) comm->record_message(ctx.id, to, bytes.size());
        rr.messages.push_back(
            {msg.sender, msg.receiver, bytes.size(), msg.sender_action, msg.proposed_for_receiver, msg.rollout_reward});
        inbox[to.index].push_back(decode_message(bytes));
      }
    }

    // Phase 2: merge received summaries; rebuild neighbor proposals.
    for (std::size_t i = 0; i < n_agents; ++i) {
      AgentContext& ctx = agents[i];
      AgentState& st = states[i];
      st.received.clear();
      auto& box = inbox[i];
      std::sort(box.begin(), box.end(), [](const auto& a, const auto& b) { return a.sender < b.sender; });
      for (AgentId m : topology.neighbors(ctx.id)) {
        auto it = std::find_if(box.begin(), box.end(), [&](const auto& msg) { return msg.sender == m; });
        if (it == box.end()) continue;
        st.heard[m] = scaled(it->stats, topology.weight(ctx.id, m));
        Proposal p;
        p.proposer = m;
        p.self_action = it->sender_action;
        if (it->proposed_for_receiver) p.neighbor_actions[ctx.id] = *it->proposed_for_receiver;
        p.rollout_reward = it->rollout_reward;
        p.round = round - 1;
        p.urgency = it->urgency;
        st.received.push_back(std::move(p));
      }
      ctx.strategy.spatial.stats = knowledge_of(st);
    }

    // Phase 3: local consensus.
    std::vector<char> consent(n_agents, 0);
    bool all = true;
    for (std::size_t i = 0; i < n_agents; ++i) {
      const double delta = consensus_delta(ConsensusConfig::for_space(agents[i].model->action_space(), cfg.epsilon));
      try {
        consent[i] = check_consensus(*states[i].proposal, states[i].received, delta) ? 1 : 0;
      } catch (const Error& e) {
        spdlog::warn("{}: {}", to_string(agents[i].id), e.what());
        consent[i] = 0;
      }
      all = all && consent[i];
    }

    const bool last = all || round == cfg.max_rounds;

    // Phase 4: conflict-driven regeneration with retention of the previous best.
    for_each_agent(n_agents, cfg.parallelism, [&](std::size_t i) {
      AgentContext& ctx = agents[i];
      AgentState& st = states[i];
      st.record = AgentRoundRecord{};
      st.record.consensus = consent[i];
      st.record.weights = st.weights;
      if (!last && !consent[i]) {
        const ActionSpace space = ctx.model->action_space();
        const double delta = consensus_delta(ConsensusConfig::for_space(space, cfg.epsilon));
        const PartitionedStats knowledge = ctx.strategy.spatial.stats;
        try {
          ConflictAssessment assessment =
              ctx.reasoner->assess_conflict(*st.proposal, st.received, knowledge, ctx.strategy, delta);
          const ConfidenceWeights w = assessment.weights.normalize();
          st.weights = w;
          st.record.weights = w;
          ctx.strategy.spatial = std::move(assessment.updated_spatial);
          ctx.strategy.spatial.stats = knowledge;

          double suggested = 0.0;
          int n_suggested = 0;
          for (const auto& p : st.received) {
            if (auto a = p.action_for(ctx.id)) {
              suggested += *a;
              ++n_suggested;
            }
          }
          const Action neighbor_action = n_suggested ? suggested / n_suggested : st.proposal->self_action;
          const Action trend = ctx.reasoner->unobservable_trend(ctx.observation, knowledge, ctx.strategy);
          const Action blended = space.discrete
                                     ? space.clamp(select_by_weight(w, st.proposal->self_action,
                                                                    space.clamp(neighbor_action), space.clamp(trend)))
                                     : blend_candidate(w, st.proposal->self_action, neighbor_action, trend, space);

          ProposalRequest req;
          req.agent = ctx.id;
          req.observation = &ctx.observation;
          req.strategy = &ctx.strategy;
          req.mean_field = &knowledge;
          req.reasoner = ctx.reasoner;
          req.model = ctx.model;
          req.config = cfg.rollout;
          req.round = round;
          req.initial_action = blended;
          req.previous_immediate_reward = ctx.previous_immediate_reward;
          auto result = generate_proposal(req);
          st.record.attempts = static_cast<int>(result.attempts.size());
          st.record.regenerated = true;
          if (result.proposal.rollout_reward > st.proposal->rollout_reward) st.proposal = std::move(result.proposal);
        } catch (const Error& e) {
          spdlog::warn("{}: round {} regeneration failed ({}), keeping previous proposal", to_string(ctx.id), round,
                       e.what());
          st.record.error = e.what();
        }
      }
      fill_record(st.record, ctx.id, *st.proposal);
      st.record.merged = ctx.strategy.spatial.stats.merged();
    });

    for (const auto& st : states) rr.agents.push_back(st.record);
    rr.global_consensus = all;
    out.record.rounds.push_back(std::move(rr));
    out.record.rounds_used = round;
    if (all) out.record.converged = true;
    if (last) break;
  }

  // Finalization over the proposals exchanged in the last round. Each
  // suggestion a_{m->n} is scored by n's own rollout so that rewards of
  // different proposers, earned in different local situations, are never
  // compared directly.
  out.record.confidences.resize(n_agents);
  std::vector<Action> finals(n_agents, 0.0);
  for_each_agent(n_agents, cfg.parallelism, [&](std::size_t i) {
    AgentContext& ctx = agents[i];
    const AgentState& st = states[i];
    const ActionSpace space = ctx.model->action_space();
    const ConfidenceWeights w = st.weights.value_or(cfg.default_weights).normalize();
    std::vector<Proposal> rescored;
    rescored.reserve(st.received.size());
    for (const auto& p : st.received) {
      Proposal q = p;
      if (auto a = p.action_for(ctx.id)) {
        Proposal candidate = *st.proposal;
        candidate.self_action = space.clamp(*a);
        try {
          const RolloutOutcome r = verify_rollout(candidate, *ctx.model, *ctx.reasoner, ctx.strategy, cfg.rollout);
          q.rollout_reward = r.verdict.passed ? cumulative_reward(r.trajectory, cfg.rollout.discount)
                                              : -std::numeric_limits<double>::infinity();
        } catch (const Error& e) {
          spdlog::warn("{}: scoring suggestion of {} failed ({})", to_string(ctx.id), to_string(p.proposer), e.what());
          q.rollout_reward = -std::numeric_limits<double>::infinity();
        }
      }
      rescored.push_back(std::move(q));
    }
    auto conf = confidence_scores(*st.proposal, rescored, w);
    Action final_action = st.proposal->self_action;
    try {
      final_action = finalize_decision(*st.proposal, rescored, conf, space);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllZeroConfidence) throw;
      conf.assign(conf.size(), 0.0);
      conf[0] = 1.0;
    }
    out.record.confidences[i] = std::move(conf);
    finals[i] = space.clamp(final_action);
  });
  for (std::size_t i = 0; i < n_agents; ++i) {
    out.final_actions[agents[i].id] = finals[i];
    out.proposals.push_back(*states[i].proposal);
  }
  return out;
}

}  // namespace mfn
