#include "mfn/llm.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mfn/errors.hpp"

namespace mfn {

using nlohmann::json;

ConcurrencyLimiter::ConcurrencyLimiter(int limit) : limit_(limit) {
  if (limit < 1) throw Error(ErrorCode::InvalidParams, "concurrency limit must be >= 1");
}

void ConcurrencyLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_use_ < limit_; });
  ++in_use_;
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_use_;
  }
  cv_.notify_one();
}

namespace {

struct LimiterGuard {
  explicit LimiterGuard(ConcurrencyLimiter& l) : l_(l) { l_.acquire(); }
  ~LimiterGuard() { l_.release(); }
  ConcurrencyLimiter& l_;
};

json messages_json(const std::vector<ChatMessage>& messages) {
  json arr = json::array();
  for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
  return arr;
}

}  // namespace

HttpChatTransport::HttpChatTransport(LlmEndpointConfig cfg) : cfg_(std::move(cfg)), limiter_(cfg_.max_concurrency) {
  cfg_.validate();
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) api_key_ = key;
}

std::vector<std::pair<std::string, std::string>> HttpChatTransport::redacted_headers() const {
  std::vector<std::pair<std::string, std::string>> h{{"Content-Type", "application/json"}};
  if (api_key_) h.emplace_back("Authorization", "Bearer [REDACTED]");
  return h;
}

void HttpChatTransport::record(const std::string& request, const std::string& response) {
  if (!cfg_.transcript_path) return;
  json headers = json::object();
  for (const auto& [k, v] : redacted_headers()) headers[k] = v;
  json entry = {{"url", cfg_.base_url + cfg_.path}, {"headers", headers}, {"request", json::parse(request, nullptr, false)},
                {"response", response}};
  std::lock_guard lock(transcript_mu_);
  std::ofstream out(*cfg_.transcript_path, std::ios::app);
  out << entry.dump() << '\n';
}

std::string HttpChatTransport::complete(const std::vector<ChatMessage>& messages) {
  const json body = {{"model", cfg_.model_name},
                     {"messages", messages_json(messages)},
                     {"temperature", cfg_.temperature},
                     {"top_p", cfg_.top_p}};
  const std::string request = body.dump();

  httplib::Result res;
  {
    LimiterGuard guard(limiter_);
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    client.set_write_timeout(cfg_.timeout_seconds, 0);
    httplib::Headers headers;
    if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);
    res = client.Post(cfg_.path, headers, request, "application/json");
  }
  if (!res) {
    record(request, "");
    throw Error(ErrorCode::ReasonerFailure, "chat endpoint unreachable: " + httplib::to_string(res.error()));
  }
  record(request, res->body);
  if (res->status != 200) {
    throw Error(ErrorCode::ReasonerFailure, "chat endpoint returned HTTP " + std::to_string(res->status));
  }
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw Error(ErrorCode::ReasonerFailure, "chat endpoint returned invalid JSON");
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ReasonerFailure, "chat reply has no choices[0].message.content");
  }
}

CannedTransport::CannedTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {
  if (replies_.empty()) throw Error(ErrorCode::EmptyInput, "canned transport needs at least one reply");
}

CannedTransport::CannedTransport(std::function<std::string(const std::vector<ChatMessage>&)> responder)
    : responder_(std::move(responder)) {}

std::string CannedTransport::complete(const std::vector<ChatMessage>& messages) {
  std::lock_guard lock(mu_);
  last_ = messages;
  const std::size_t i = next_++;
  if (responder_) return responder_(messages);
  return replies_[i % replies_.size()];
}

std::size_t CannedTransport::calls() const {
  std::lock_guard lock(mu_);
  return next_;
}

std::optional<std::string> extract_tag(const std::string& text, const std::string& tag) {
  const std::string open = "<" + tag + ">", close = "</" + tag + ">";
  const auto b = text.find(open);
  if (b == std::string::npos) return std::nullopt;
  const auto start = b + open.size();
  const auto e = text.find(close, start);
  if (e == std::string::npos) return std::nullopt;
  std::string body = text.substr(start, e - start);
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return std::string();
  const auto last = body.find_last_not_of(" \t\r\n");
  return body.substr(first, last - first + 1);
}

namespace {

// Signals a reply that parsed but failed validation; triggers a retry.
struct MalformedReply {
  std::string reason;
};

json observation_json(const Observation& obs) {
  json nbs = json::array();
  for (const auto& nb : obs.neighbors) nbs.push_back({{"id", nb.id.index}, {"values", nb.values}});
  return {{"agent", obs.agent.index}, {"step", obs.step}, {"own", obs.own}, {"neighbors", nbs}};
}

json strategy_json(const Strategy& s) {
  json params = json::object();
  for (const auto& [k, v] : s.temporal.parameters) params[k] = v;
  json bounds = json::object();
  for (const auto& [k, b] : s.temporal.bounds) bounds[k] = {b.first, b.second};
  return {{"temporal", {{"parameters", params}, {"bounds", bounds}, {"directives", s.temporal.directives}}},
          {"spatial", {{"directives", s.spatial.directives}}}};
}

json stats_json(const PartitionedStats& mf) {
  json groups = json::array();
  for (const auto& g : mf.groups) {
    json mean = json::array(), var = json::array();
    for (double m : g.stats.mean) mean.push_back(std::isfinite(m) ? json(m) : json(nullptr));
    for (double v : g.stats.variance) var.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    groups.push_back({{"size", g.group_size()}, {"mean", mean}, {"variance", var}});
  }
  return groups;
}

json proposal_json(const Proposal& p) {
  json nb = json::object();
  for (const auto& [id, a] : p.neighbor_actions) nb[std::to_string(id.index)] = a;
  return {{"proposer", p.proposer.index},
          {"self_action", p.self_action},
          {"neighbor_actions", nb},
          {"rollout_reward", std::isfinite(p.rollout_reward) ? json(p.rollout_reward) : json(nullptr)}};
}

double parse_number(const std::string& s) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (s.find_first_not_of(" \t\r\n", used) != std::string::npos) throw MalformedReply{"trailing text after number"};
    if (!std::isfinite(x)) throw MalformedReply{"non-finite number"};
    return x;
  } catch (const std::logic_error&) {
    throw MalformedReply{"expected a number, got '" + s + "'"};
  }
}

json parse_json(const std::string& s) {
  json j = json::parse(s, nullptr, false);
  if (j.is_discarded()) throw MalformedReply{"section is not valid JSON"};
  return j;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) {
    const auto f = line.find_first_not_of(" \t-*");
    if (f == std::string::npos) continue;
    out.push_back(line.substr(f));
  }
  return out;
}

}  // namespace

LlmReasoner::LlmReasoner(EnvironmentSpec spec, AgentId agent, std::shared_ptr<ChatTransport> transport,
                         int max_retries)
    : spec_(std::move(spec)), agent_(agent), transport_(std::move(transport)), max_retries_(max_retries) {
  if (!transport_) throw Error(ErrorCode::InvalidParams, "llm reasoner needs a transport");
  if (max_retries_ < 1) throw Error(ErrorCode::InvalidParams, "max_retries must be >= 1");
}

std::string LlmReasoner::system_prompt() const {
  json targets = json::object();
  for (const auto& [k, v] : spec_.targets) targets[k] = v;
  std::ostringstream os;
  os << "You are agent " << agent_.index << " in a decentralized " << spec_.name << " system.\n"
     << "Global objective: " << spec_.objective << "\n"
     << "Targets: " << targets.dump() << "\n"
     << "Action space: [" << spec_.action_space.min << ", " << spec_.action_space.max << "]"
     << (spec_.action_space.discrete ? " (integer levels)" : "") << "\n"
     << "Hard constraints:";
  for (const auto& c : spec_.strict_constraints) os << ' ' << c << ';';
  os << "\nFirst analyse the situation, then answer only inside the requested tags.";
  return os.str();
}

Action LlmReasoner::parse_action(const std::string& text) const {
  double a = parse_number(text);
  if (spec_.action_space.discrete) {
    if (std::abs(a - std::round(a)) > 1e-9) throw MalformedReply{"action must be an integer level"};
    a = std::round(a);
  }
  if (!spec_.action_space.contains(a)) throw MalformedReply{"action outside the action space"};
  return a;
}

template <typename T>
T LlmReasoner::ask(const std::string& task, const std::vector<std::string>& tags,
                   const std::function<T(const std::vector<std::string>&)>& parse) {
  std::vector<ChatMessage> messages{{"system", system_prompt()}, {"user", task}};
  std::string last_reason;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    ++requests_;
    const std::string reply = transport_->complete(messages);
    std::vector<std::string> sections;
    try {
      for (const auto& tag : tags) {
        auto body = extract_tag(reply, tag);
        if (!body) throw MalformedReply{"missing <" + tag + "> section"};
        sections.push_back(std::move(*body));
      }
      return parse(sections);
    } catch (const MalformedReply& m) {
      last_reason = m.reason;
      spdlog::warn("agent {}: malformed reply (attempt {}): {}", agent_.index, attempt + 1, m.reason);
      messages.push_back({"assistant", reply});
      messages.push_back({"user", "Your reply was rejected: " + m.reason + ". Answer again using the required tags."});
    }
  }
  throw Error(ErrorCode::ReasonerFailure, "agent " + std::to_string(agent_.index) + ": no valid reply after " +
                                              std::to_string(max_retries_ + 1) + " attempts (" + last_reason + ")");
}

Action LlmReasoner::propose_action(const Observation& obs, const Strategy& strategy, const PartitionedStats& mf) {
  const json task = {{"task", "propose your own action"},
                     {"observation", observation_json(obs)},
                     {"strategy", strategy_json(strategy)},
                     {"mean_field", stats_json(mf)}};
  return ask<Action>(task.dump() + "\nPut your reasoning in <insights> and the action as a number in <output>.",
                     {"output"}, [&](const std::vector<std::string>& s) { return parse_action(s[0]); });
}

JointAction LlmReasoner::propose_neighbor_actions(const Observation& obs, const Strategy& strategy, Action self_action) {
  const json task = {{"task", "propose a cooperative action for each observable neighbor"},
                     {"observation", observation_json(obs)},
                     {"strategy", strategy_json(strategy)},
                     {"own_action", self_action}};
  return ask<JointAction>(
      task.dump() + "\nAnswer in <output> with a JSON object mapping neighbor id to action.", {"output"},
      [&](const std::vector<std::string>& s) {
        const json j = parse_json(s[0]);
        if (!j.is_object()) throw MalformedReply{"expected a JSON object"};
        JointAction out;
        for (const auto& nb : obs.neighbors) {
          const auto key = std::to_string(nb.id.index);
          if (!j.contains(key) || !j[key].is_number()) throw MalformedReply{"missing action for neighbor " + key};
          out[nb.id] = parse_action(j[key].dump());
        }
        return out;
      });
}

Observation LlmReasoner::predict_next_observation(const Observation& obs, const Strategy& strategy,
                                                  const JointAction& joint) {
  json actions = json::object();
  for (const auto& [id, a] : joint) actions[std::to_string(id.index)] = a;
  const json task = {{"task", "predict your next local observation under the joint action"},
                     {"observation", observation_json(obs)},
                     {"strategy", strategy_json(strategy)},
                     {"joint_action", actions}};
  return ask<Observation>(
      task.dump() + "\nAnswer in <output> with JSON {\"own\": [...], \"neighbors\": [[...], ...]} in the same layout.",
      {"output"}, [&](const std::vector<std::string>& s) {
        const json j = parse_json(s[0]);
        try {
          Observation next = obs;
          next.step = obs.step + 1;
          next.own = j.at("own").get<std::vector<double>>();
          if (next.own.size() != obs.own.size()) throw MalformedReply{"own values have the wrong length"};
          const auto& nbs = j.at("neighbors");
          if (nbs.size() != obs.neighbors.size()) throw MalformedReply{"wrong number of neighbor entries"};
          for (std::size_t i = 0; i < obs.neighbors.size(); ++i) {
            next.neighbors[i].values = nbs[i].get<std::vector<double>>();
            if (next.neighbors[i].values.size() != obs.neighbors[i].values.size()) {
              throw MalformedReply{"neighbor values have the wrong length"};
            }
          }
          for (double x : next.flatten()) {
            if (!std::isfinite(x)) throw MalformedReply{"non-finite prediction"};
          }
          return next;
        } catch (const json::exception&) {
          throw MalformedReply{"prediction does not match the observation layout"};
        }
      });
}

ConflictAssessment LlmReasoner::assess_conflict(const Proposal& own, std::span<const Proposal> neighbors,
                                                const PartitionedStats& mf, const Strategy& strategy, double delta) {
  json nbs = json::array();
  for (const auto& p : neighbors) nbs.push_back(proposal_json(p));
  const json task = {{"task", "decide whether the neighbor proposals agree with yours and weigh the three sources"},
                     {"own_proposal", proposal_json(own)},
                     {"neighbor_proposals", nbs},
                     {"mean_field", stats_json(mf)},
                     {"strategy", strategy_json(strategy)},
                     {"tolerance", delta}};
  return ask<ConflictAssessment>(
      task.dump() +
          "\nAnswer <deal>yes</deal> or <deal>no</deal>, weights [my, neighbor, unobservable] summing to 1 in "
          "<output>, and one spatial directive per line in <spatial-strategy>.",
      {"deal", "output", "spatial-strategy"}, [&](const std::vector<std::string>& s) {
        ConflictAssessment out;
        if (s[0] == "yes") {
          out.deal = true;
        } else if (s[0] == "no") {
          out.deal = false;
        } else {
          throw MalformedReply{"deal must be yes or no"};
        }
        const json w = parse_json(s[1]);
        if (!w.is_array() || w.size() != 3) throw MalformedReply{"weights must be a list of three numbers"};
        for (const auto& x : w) {
          if (!x.is_number() || x.get<double>() < 0.0) throw MalformedReply{"weights must be non-negative numbers"};
        }
        out.weights = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()};
        if (!out.weights.normalized(1e-3)) throw MalformedReply{"weights must sum to 1"};
        out.updated_spatial.directives = lines_of(s[2]);
        out.updated_spatial.stats = mf;
        return out;
      });
}

Strategy LlmReasoner::revise_strategy(const Strategy& strategy, const RevisionSignal& signal) {
  const json task = {{"task", "revise your temporal strategy"},
                     {"strategy", strategy_json(strategy)},
                     {"diagnosis", signal.directives},
                     {"drift", signal.drift}};
  return ask<Strategy>(
      task.dump() +
          "\nExplain in <insights>; give {\"parameters\": {...}, \"directives\": [...]} in <temporal-strategy>.",
      {"insights", "temporal-strategy"}, [&](const std::vector<std::string>& s) {
        const json j = parse_json(s[1]);
        Strategy out = strategy;
        try {
          for (const auto& [k, v] : j.at("parameters").items()) {
            if (!out.temporal.parameters.contains(k)) throw MalformedReply{"unknown parameter '" + k + "'"};
            if (!v.is_number()) throw MalformedReply{"parameter '" + k + "' is not a number"};
            out.temporal.parameters[k] = v.get<double>();
          }
          if (j.contains("directives")) out.temporal.directives = j.at("directives").get<std::vector<std::string>>();
        } catch (const json::exception&) {
          throw MalformedReply{"temporal strategy has the wrong shape"};
        }
        return out;
      });
}

Action LlmReasoner::revise_action(const Observation& obs, const Strategy& strategy, Action rejected, int attempt) {
  const json task = {{"task", "your action failed verification; propose a safer one"},
                     {"observation", observation_json(obs)},
                     {"strategy", strategy_json(strategy)},
                     {"rejected_action", rejected},
                     {"attempt", attempt}};
  return ask<Action>(task.dump() + "\nGive the new action as a number in <output>.", {"output"},
                     [&](const std::vector<std::string>& s) { return parse_action(s[0]); });
}

std::vector<std::string> LlmReasoner::diagnose(const DiagnosisInput& input, const Strategy& strategy) {
  const json task = {{"task", "explain why your reward declined"},
                     {"previous_observation", observation_json(input.previous_observation)},
                     {"current_observation", observation_json(input.current_observation)},
                     {"action", input.previous_action},
                     {"previous_reward", input.previous_reward},
                     {"current_reward", input.current_reward},
                     {"rounds_used", input.rounds_used},
                     {"converged", input.converged},
                     {"strategy", strategy_json(strategy)}};
  return ask<std::vector<std::string>>(task.dump() + "\nList one cause per line in <insights>.", {"insights"},
                                       [](const std::vector<std::string>& s) { return lines_of(s[0]); });
}

std::shared_ptr<ChatTransport> make_http_transport(const LlmEndpointConfig& cfg) {
  return std::make_shared<HttpChatTransport>(cfg);
}

std::unique_ptr<Reasoner> make_llm_reasoner(const LlmEndpointConfig& cfg, const EnvironmentSpec& spec, AgentId agent,
                                            std::shared_ptr<ChatTransport> transport) {
  return std::make_unique<LlmReasoner>(spec, agent, std::move(transport), cfg.max_retries);
}

}  // namespace mfn
