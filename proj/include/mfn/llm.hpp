#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mfn/config.hpp"
#include "mfn/environment.hpp"
#include "mfn/reasoner.hpp"

namespace mfn {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

// One chat-completion round trip. Throws ReasonerFailure when the backend
// cannot be reached or answers with something other than a completion.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

// Caps the number of callers inside a section at once.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int limit);
  void acquire();
  void release();
  int limit() const noexcept { return limit_; }

 private:
  int limit_;
  int in_use_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

// POSTs {model, messages, temperature, top_p} and reads
// choices[0].message.content. The bearer token comes from the environment
// variable named in the config and never appears in transcripts.
class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(LlmEndpointConfig cfg);

  std::string complete(const std::vector<ChatMessage>& messages) override;

  const LlmEndpointConfig& config() const noexcept { return cfg_; }
  // Request headers as they would be logged.
  std::vector<std::pair<std::string, std::string>> redacted_headers() const;

 private:
  void record(const std::string& request, const std::string& response);

  LlmEndpointConfig cfg_;
  std::optional<std::string> api_key_;
  ConcurrencyLimiter limiter_;
  std::mutex transcript_mu_;
};

// Replays scripted replies in order, cycling once exhausted. A responder
// function may be given instead to answer based on the prompt.
class CannedTransport : public ChatTransport {
 public:
  explicit CannedTransport(std::vector<std::string> replies);
  explicit CannedTransport(std::function<std::string(const std::vector<ChatMessage>&)> responder);

  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::size_t calls() const;
  const std::vector<ChatMessage>& last_request() const { return last_; }

 private:
  std::vector<std::string> replies_;
  std::function<std::string(const std::vector<ChatMessage>&)> responder_;
  std::size_t next_ = 0;
  std::vector<ChatMessage> last_;
  mutable std::mutex mu_;
};

// Body of the first <tag>...</tag> section, trimmed.
std::optional<std::string> extract_tag(const std::string& text, const std::string& tag);

// Reasoner backed by a chat model. Every reply must carry the requested
// tagged sections; malformed replies are retried up to `max_retries` times
// with a correction note, then ReasonerFailure is thrown.
class LlmReasoner : public Reasoner {
 public:
  LlmReasoner(EnvironmentSpec spec, AgentId agent, std::shared_ptr<ChatTransport> transport, int max_retries);

  Action propose_action(const Observation& obs, const Strategy& strategy, const PartitionedStats& mf) override;
  JointAction propose_neighbor_actions(const Observation& obs, const Strategy& strategy, Action self_action) override;
  Observation predict_next_observation(const Observation& obs, const Strategy& strategy,
                                       const JointAction& joint) override;
  ConflictAssessment assess_conflict(const Proposal& own, std::span<const Proposal> neighbors,
                                     const PartitionedStats& mf, const Strategy& strategy, double delta) override;
  Strategy revise_strategy(const Strategy& strategy, const RevisionSignal& signal) override;
  Action revise_action(const Observation& obs, const Strategy& strategy, Action rejected, int attempt) override;
  std::vector<std::string> diagnose(const DiagnosisInput& input, const Strategy& strategy) override;

  std::size_t requests() const noexcept { return requests_; }

 private:
  template <typename T>
  T ask(const std::string& task, const std::vector<std::string>& tags,
        const std::function<T(const std::vector<std::string>&)>& parse);

  std::string system_prompt() const;
  Action parse_action(const std::string& text) const;

  EnvironmentSpec spec_;
  AgentId agent_;
  std::shared_ptr<ChatTransport> transport_;
  int max_retries_;
  std::size_t requests_ = 0;
};

std::shared_ptr<ChatTransport> make_http_transport(const LlmEndpointConfig& cfg);

std::unique_ptr<Reasoner> make_llm_reasoner(const LlmEndpointConfig& cfg, const EnvironmentSpec& spec, AgentId agent,
                                            std::shared_ptr<ChatTransport> transport);

}  // namespace mfn
