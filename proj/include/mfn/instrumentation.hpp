#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "mfn/reasoner.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Message and reasoner-call counters for one episode.
class CommStats {
 public:
  explicit CommStats(std::size_t agent_count = 0);

  std::size_t agent_count() const noexcept { return sent_messages_.size(); }

  // Opens a new negotiation round; per-round maxima are tracked per window.
  void begin_round();
  void record_message(AgentId sender, AgentId receiver, std::size_t bytes);
  void record_negotiation() noexcept { ++negotiations_; }
  void record_reasoner_calls(std::size_t calls) noexcept { reasoner_calls_ += calls; }

  std::size_t rounds() const noexcept { return rounds_; }
  std::size_t negotiations() const noexcept { return negotiations_; }
  std::size_t reasoner_calls() const noexcept { return reasoner_calls_; }
  std::size_t total_messages() const noexcept;
  std::size_t total_bytes() const noexcept;
  const std::vector<std::size_t>& messages_sent() const noexcept { return sent_messages_; }
  const std::vector<std::size_t>& bytes_sent() const noexcept { return sent_bytes_; }
  const std::vector<std::size_t>& bytes_received() const noexcept { return received_bytes_; }
  // Largest number of messages any single agent sent within one round.
  std::size_t max_messages_per_agent_round() const noexcept { return max_round_messages_; }
  const std::set<std::size_t>& payload_sizes() const noexcept { return payload_sizes_; }

 private:
  std::vector<std::size_t> sent_messages_;
  std::vector<std::size_t> sent_bytes_;
  std::vector<std::size_t> received_bytes_;
  std::vector<std::size_t> round_messages_;
  std::set<std::size_t> payload_sizes_;
  std::size_t rounds_ = 0;
  std::size_t negotiations_ = 0;
  std::size_t reasoner_calls_ = 0;
  std::size_t max_round_messages_ = 0;
};

struct CommReport {
  std::size_t agent_count = 0;
  std::size_t negotiations = 0;
  std::size_t rounds = 0;
  std::size_t messages = 0;
  std::size_t bytes = 0;
  std::size_t reasoner_calls = 0;
  double mean_bytes_per_agent_round = 0.0;
  double mean_messages_per_agent_round = 0.0;
  std::size_t max_messages_per_agent_round = 0;
  // Set when every message had the same encoded size.
  std::optional<std::size_t> payload_bytes;
  bool payload_constant = true;
};

CommReport summarize(const CommStats& stats, std::size_t agent_count);

// Forwards to another reasoner and counts calls. The counter is atomic so
// wrappers may be shared by the episode log appender.
class CountingReasoner : public Reasoner {
 public:
  explicit CountingReasoner(std::unique_ptr<Reasoner> inner);

  std::size_t calls() const noexcept { return calls_.load(); }
  Reasoner& inner() noexcept { return *inner_; }

  Action propose_action(const Observation& obs, const Strategy& strategy, const PartitionedStats& mf) override;
  JointAction propose_neighbor_actions(const Observation& obs, const Strategy& strategy, Action self_action) override;
  Observation predict_next_observation(const Observation& obs, const Strategy& strategy,
                                       const JointAction& joint) override;
  ConflictAssessment assess_conflict(const Proposal& own, std::span<const Proposal> neighbors,
                                     const PartitionedStats& mf, const Strategy& strategy, double delta) override;
  Strategy revise_strategy(const Strategy& strategy, const RevisionSignal& signal) override;
  Action revise_action(const Observation& obs, const Strategy& strategy, Action rejected, int attempt) override;
  Action unobservable_trend(const Observation& obs, const PartitionedStats& mf, const Strategy& strategy) override;
  std::vector<std::string> diagnose(const DiagnosisInput& input, const Strategy& strategy) override;

 private:
  std::unique_ptr<Reasoner> inner_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace mfn
