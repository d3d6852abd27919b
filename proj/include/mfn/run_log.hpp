#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "mfn/config.hpp"
#include "mfn/instrumentation.hpp"
#include "mfn/metrics.hpp"
#include "mfn/negotiation.hpp"

namespace mfn {

inline constexpr const char* kRunLogSchema = "mfnego.runlog/1";

// Serializes records as JSON lines through a single appender. Output is a
// pure function of the records written (no clocks, stable key order).
class RunLogWriter {
 public:
  explicit RunLogWriter(std::ostream* out) : out_(out) {}

  void write(const nlohmann::json& record);
  std::size_t records() const noexcept { return records_; }

 private:
  std::ostream* out_;
  std::size_t records_ = 0;
};

// Finite numbers as-is, non-finite ones as null.
nlohmann::json number_or_null(double x);

nlohmann::json to_json(const MeanFieldStats& s);
nlohmann::json to_json(const NegotiationRecord& r, const JointAction& final_actions);
nlohmann::json to_json(const CommReport& r);
nlohmann::json to_json(const PlatoonMetrics& m);
nlohmann::json to_json(const PandemicMetrics& m);

struct ReplayResult {
  Domain domain = Domain::Platoon;
  std::size_t agents = 0;
  int steps = 0;
  std::optional<PlatoonMetrics> platoon;
  std::optional<PandemicMetrics> pandemic;
  std::size_t negotiations = 0;
  std::size_t messages = 0;
  std::size_t message_bytes = 0;
  std::size_t rounds = 0;
  std::set<std::size_t> payload_sizes;
  double mean_bytes_per_agent_round = 0.0;
};

// Rebuilds metrics from a log. Throws IncompleteLog when the header, any
// step or the closing summary is missing.
ReplayResult replay_metrics(const std::string& log_path);
ReplayResult replay_metrics_from(std::istream& in);

}  // namespace mfn
