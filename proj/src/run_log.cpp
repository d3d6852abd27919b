#include "mfn/run_log.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mfn/errors.hpp"

namespace mfn {

using nlohmann::json;

void RunLogWriter::write(const json& record) {
  ++records_;
  if (out_) *out_ << record.dump() << '\n';
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const MeanFieldStats& s) {
  json means = json::array(), vars = json::array();
  for (double m : s.mean) means.push_back(number_or_null(m));
  for (double v : s.variance) vars.push_back(number_or_null(v));
  return {{"mean", means}, {"variance", vars}, {"weight", number_or_null(s.total_weight)}, {"count", s.count}};
}

namespace {

json agent_round_json(const AgentRoundRecord& a) {
  json j = {{"agent", a.agent.index},
            {"action", number_or_null(a.action)},
            {"reward", number_or_null(a.rollout_reward)},
            {"verified", a.verified},
            {"attempts", a.attempts},
            {"consensus", a.consensus},
            {"regenerated", a.regenerated},
            {"merged", to_json(a.merged)}};
  if (a.weights) {
    j["weights"] = {a.weights->my_weight, a.weights->neighbor_weight, a.weights->unobservable_weight};
  }
  if (a.error) j["error"] = *a.error;
  return j;
}

}  // namespace

json to_json(const NegotiationRecord& r, const JointAction& final_actions) {
  json j;
  j["type"] = "negotiation";
  j["t"] = r.time_step;
  j["rounds_used"] = r.rounds_used;
  j["converged"] = r.converged;
  json initial = json::array();
  for (const auto& a : r.initial) initial.push_back(agent_round_json(a));
  j["initial"] = initial;
  json rounds = json::array();
  for (const auto& rr : r.rounds) {
    json msgs = json::array();
    for (const auto& m : rr.messages) {
      msgs.push_back({{"from", m.sender.index},
                      {"to", m.receiver.index},
                      {"bytes", m.bytes},
                      {"action", number_or_null(m.sender_action)},
                      {"for_receiver", m.proposed_for_receiver ? number_or_null(*m.proposed_for_receiver) : json()},
                      {"reward", number_or_null(m.rollout_reward)}});
    }
    json agents = json::array();
    for (const auto& a : rr.agents) agents.push_back(agent_round_json(a));
    rounds.push_back({{"round", rr.round}, {"consensus", rr.global_consensus}, {"messages", msgs}, {"agents", agents}});
  }
  j["rounds"] = rounds;
  json conf = json::array();
  for (const auto& c : r.confidences) {
    json row = json::array();
    for (double x : c) row.push_back(number_or_null(x));
    conf.push_back(row);
  }
  j["confidences"] = conf;
  json fin = json::array();
  for (const auto& [id, a] : final_actions) fin.push_back(number_or_null(a));
  j["final_actions"] = fin;
  return j;
}

json to_json(const CommReport& r) {
  json j = {{"agents", r.agent_count},
            {"negotiations", r.negotiations},
            {"rounds", r.rounds},
            {"messages", r.messages},
            {"bytes", r.bytes},
            {"reasoner_calls", r.reasoner_calls},
            {"mean_bytes_per_agent_round", r.mean_bytes_per_agent_round},
            {"mean_messages_per_agent_round", r.mean_messages_per_agent_round},
            {"max_messages_per_agent_round", r.max_messages_per_agent_round},
            {"payload_constant", r.payload_constant}};
  j["payload_bytes"] = r.payload_bytes ? json(*r.payload_bytes) : json(nullptr);
  return j;
}

json to_json(const PlatoonMetrics& m) {
  return {{"rmse_h", m.rmse_h}, {"rmse_v", m.rmse_v}, {"sd_h", m.sd_h}, {"sd_v", m.sd_v}};
}

json to_json(const PandemicMetrics& m) {
  return {{"I_n", m.infection_normalized},
          {"PI_n", m.peak_infection},
          {"D_n", m.deaths_normalized},
          {"PD", m.duration}};
}

namespace {

double sum(const json& arr) {
  double s = 0.0;
  for (const auto& x : arr) s += x.get<double>();
  return s;
}

void add_pandemic_day(PandemicTrace& trace, const json& rec) {
  trace.infected.push_back(sum(rec.at("I")));
  trace.critical.push_back(sum(rec.at("C")));
  trace.deaths.push_back(sum(rec.at("D")));
  trace.new_infections.push_back(sum(rec.at("new_infections")));
}

}  // namespace

ReplayResult replay_metrics_from(std::istream& in) {
  ReplayResult out;
  std::optional<json> header;
  bool finished = false;
  PlatoonTrace platoon;
  PandemicTrace pandemic;
  int step_records = 0;
  bool have_initial = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::IncompleteLog, "line " + std::to_string(line_no) + " is not a complete record");
    }
    const std::string type = rec.value("type", "");
    try {
      if (type == "header") {
        if (rec.value("schema", "") != kRunLogSchema) throw Error(ErrorCode::IncompleteLog, "unknown log schema");
        header = rec;
        out.domain = rec.at("domain") == "platoon" ? Domain::Platoon : Domain::Pandemic;
        out.agents = rec.at("agents").get<std::size_t>();
        out.steps = rec.at("steps").get<int>();
        if (out.domain == Domain::Pandemic) pandemic.population = rec.at("population").get<double>();
      } else if (!header) {
        throw Error(ErrorCode::IncompleteLog, "record before header");
      } else if (type == "initial") {
        if (out.domain == Domain::Pandemic) add_pandemic_day(pandemic, rec);
        have_initial = true;
      } else if (type == "step") {
        ++step_records;
        if (out.domain == Domain::Platoon) {
          const auto pos = rec.at("positions").get<std::vector<double>>();
          const auto vel = rec.at("velocities").get<std::vector<double>>();
          std::vector<double> h, v;
          for (std::size_t n = 1; n < pos.size(); ++n) {
            h.push_back(pos[n - 1] - pos[n]);
            v.push_back(vel[n]);
          }
          platoon.headways.push_back(std::move(h));
          platoon.velocities.push_back(std::move(v));
          platoon.leader_velocity.push_back(vel.at(0));
        } else {
          add_pandemic_day(pandemic, rec);
        }
      } else if (type == "negotiation") {
        ++out.negotiations;
        for (const auto& round : rec.at("rounds")) {
          ++out.rounds;
          for (const auto& m : round.at("messages")) {
            ++out.messages;
            const auto b = m.at("bytes").get<std::size_t>();
            out.message_bytes += b;
            out.payload_sizes.insert(b);
          }
        }
      } else if (type == "summary") {
        finished = rec.value("complete", false);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::IncompleteLog, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) throw Error(ErrorCode::IncompleteLog, "missing header");
  if (!finished) throw Error(ErrorCode::IncompleteLog, "missing or incomplete summary record");
  if (step_records != out.steps) {
    throw Error(ErrorCode::IncompleteLog,
                "expected " + std::to_string(out.steps) + " steps, found " + std::to_string(step_records));
  }
  if (out.domain == Domain::Platoon) {
    out.platoon = compute_platoon_metrics(platoon, header->at("target_headway").get<double>(),
                                          static_cast<std::size_t>(out.steps));
  } else {
    if (!have_initial) throw Error(ErrorCode::IncompleteLog, "missing initial pandemic state");
    out.pandemic = compute_pandemic_metrics(pandemic, static_cast<std::size_t>(out.steps) + 1);
  }
  if (out.agents > 0 && out.rounds > 0) {
    // Rounds are counted once per negotiation, not per agent.
    out.mean_bytes_per_agent_round =
        static_cast<double>(out.message_bytes) / (static_cast<double>(out.agents) * static_cast<double>(out.rounds));
  }
  return out;
}

ReplayResult replay_metrics(const std::string& log_path) {
  std::ifstream in(log_path);
  if (!in) throw Error(ErrorCode::IncompleteLog, "cannot open log '" + log_path + "'");
  return replay_metrics_from(in);
}

}  // namespace mfn
