#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfn/config.hpp"
#include "mfn/episode.hpp"

namespace mfn {

struct SuiteConfig {
  RunConfig base;
  std::vector<std::string> scenarios;
  std::vector<std::uint64_t> seeds;
  // Per-run logs are written here when set.
  std::optional<std::string> log_dir;
};

struct MetricAggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
};

struct SuiteRow {
  std::string scenario;
  Domain domain = Domain::Platoon;
  std::size_t runs = 0;  // completed runs aggregated
  std::map<std::string, MetricAggregate> metrics;
};

struct FailedRun {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string error;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;
  std::vector<FailedRun> failures;
};

// Metric columns in CSV order. Platoon and pandemic rows leave the other
// domain's columns empty.
const std::vector<std::string>& suite_metric_names();

MetricAggregate aggregate_values(const std::vector<double>& values);

// Runs every (scenario, seed) pair. Run errors become failed rows instead
// of aborting the suite. Throws EmptyInput on an empty scenario or seed set.
SuiteResult run_suite(const SuiteConfig& cfg);

// One aggregate row per scenario with a completed run, then one row per
// failed run.
void write_suite_csv(const SuiteResult& result, std::ostream& out);

}  // namespace mfn
