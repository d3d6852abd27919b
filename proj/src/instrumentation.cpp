#include "mfn/instrumentation.hpp"

#include <algorithm>
#include <numeric>

#include "mfn/errors.hpp"

namespace mfn {

CommStats::CommStats(std::size_t agent_count)
    : sent_messages_(agent_count, 0),
      sent_bytes_(agent_count, 0),
      received_bytes_(agent_count, 0),
      round_messages_(agent_count, 0) {}

void CommStats::begin_round() {
  ++rounds_;
  std::fill(round_messages_.begin(), round_messages_.end(), 0);
}

void CommStats::record_message(AgentId sender, AgentId receiver, std::size_t bytes) {
  if (sender.index >= agent_count() || receiver.index >= agent_count()) {
    throw Error(ErrorCode::UnknownAgent, "message between unknown agents");
  }
  ++sent_messages_[sender.index];
  sent_bytes_[sender.index] += bytes;
  received_bytes_[receiver.index] += bytes;
  max_round_messages_ = std::max(max_round_messages_, ++round_messages_[sender.index]);
  payload_sizes_.insert(bytes);
}

std::size_t CommStats::total_messages() const noexcept {
  return std::accumulate(sent_messages_.begin(), sent_messages_.end(), std::size_t{0});
}

std::size_t CommStats::total_bytes() const noexcept {
  return std::accumulate(sent_bytes_.begin(), sent_bytes_.end(), std::size_t{0});
}

CommReport summarize(const CommStats& stats, std::size_t agent_count) {
  CommReport r;
  r.agent_count = agent_count;
  r.negotiations = stats.negotiations();
  r.rounds = stats.rounds();
  r.messages = stats.total_messages();
  r.bytes = stats.total_bytes();
  r.reasoner_calls = stats.reasoner_calls();
  r.max_messages_per_agent_round = stats.max_messages_per_agent_round();
  r.payload_constant = stats.payload_sizes().size() <= 1;
  if (stats.payload_sizes().size() == 1) r.payload_bytes = *stats.payload_sizes().begin();
  if (agent_count > 0 && r.rounds > 0) {
    const double agent_rounds = static_cast<double>(agent_count) * static_cast<double>(r.rounds);
    r.mean_bytes_per_agent_round = static_cast<double>(r.bytes) / agent_rounds;
    r.mean_messages_per_agent_round = static_cast<double>(r.messages) / agent_rounds;
  }
  return r;
}

CountingReasoner::CountingReasoner(std::unique_ptr<Reasoner> inner) : inner_(std::move(inner)) {
  if (!inner_) throw Error(ErrorCode::InvalidParams, "null reasoner");
}

Action CountingReasoner::propose_action(const Observation& obs, const Strategy& strategy, const PartitionedStats& mf) {
  ++calls_;
  return inner_->propose_action(obs, strategy, mf);
}

JointAction CountingReasoner::propose_neighbor_actions(const Observation& obs, const Strategy& strategy,
                                                       Action self_action) {
  ++calls_;
  return inner_->propose_neighbor_actions(obs, strategy, self_action);
}

Observation CountingReasoner::predict_next_observation(const Observation& obs, const Strategy& strategy,
                                                       const JointAction& joint) {
  ++calls_;
  return inner_->predict_next_observation(obs, strategy, joint);
}

ConflictAssessment CountingReasoner::assess_conflict(const Proposal& own, std::span<const Proposal> neighbors,
                                                     const PartitionedStats& mf, const Strategy& strategy,
                                                     double delta) {
  ++calls_;
  return inner_->assess_conflict(own, neighbors, mf, strategy, delta);
}

Strategy CountingReasoner::revise_strategy(const Strategy& strategy, const RevisionSignal& signal) {
  ++calls_;
  return inner_->revise_strategy(strategy, signal);
}

Action CountingReasoner::revise_action(const Observation& obs, const Strategy& strategy, Action rejected,
                                       int attempt) {
  ++calls_;
  return inner_->revise_action(obs, strategy, rejected, attempt);
}

Action CountingReasoner::unobservable_trend(const Observation& obs, const PartitionedStats& mf,
                                            const Strategy& strategy) {
  ++calls_;
  return inner_->unobservable_trend(obs, mf, strategy);
}

std::vector<std::string> CountingReasoner::diagnose(const DiagnosisInput& input, const Strategy& strategy) {
  ++calls_;
  return inner_->diagnose(input, strategy);
}

}  // namespace mfn
