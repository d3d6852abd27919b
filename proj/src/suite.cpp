#include "mfn/suite.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mfn/errors.hpp"

namespace mfn {

const std::vector<std::string>& suite_metric_names() {
  static const std::vector<std::string> names{"rmse_h", "rmse_v", "sd_h", "sd_v", "I_n",
                                              "PI_n",   "D_n",    "PD",   "collisions", "negotiations"};
  return names;
}

MetricAggregate aggregate_values(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values to aggregate");
  MetricAggregate a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

namespace {

std::map<std::string, double> metric_values(const EpisodeSummary& s) {
  std::map<std::string, double> m{{"collisions", static_cast<double>(s.collisions)},
                                  {"negotiations", static_cast<double>(s.negotiations)}};
  if (s.platoon) {
    m["rmse_h"] = s.platoon->rmse_h;
    m["rmse_v"] = s.platoon->rmse_v;
    m["sd_h"] = s.platoon->sd_h;
    m["sd_v"] = s.platoon->sd_v;
  }
  if (s.pandemic) {
    m["I_n"] = s.pandemic->infection_normalized;
    m["PI_n"] = s.pandemic->peak_infection;
    m["D_n"] = s.pandemic->deaths_normalized;
    m["PD"] = s.pandemic->duration;
  }
  return m;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

SuiteResult run_suite(const SuiteConfig& cfg) {
  if (cfg.scenarios.empty()) throw Error(ErrorCode::EmptyInput, "suite needs at least one scenario");
  if (cfg.seeds.empty()) throw Error(ErrorCode::EmptyInput, "suite needs at least one seed");
  if (cfg.log_dir) std::filesystem::create_directories(*cfg.log_dir);

  SuiteResult result;
  for (const auto& scenario : cfg.scenarios) {
    SuiteRow row;
    row.scenario = scenario;
    std::map<std::string, std::vector<double>> samples;
    for (auto seed : cfg.seeds) {
      RunConfig run = cfg.base;
      run.scenario = scenario;
      run.seed = seed;
      try {
        row.domain = run.scenario_info().domain;
        std::ofstream log;
        if (cfg.log_dir) {
          run.output_dir = *cfg.log_dir;
          log.open(default_log_path(run));
        }
        const EpisodeResult r = run_episode(run, cfg.log_dir ? &log : nullptr);
        if (!r.summary.complete) {
          result.failures.push_back({scenario, seed, r.summary.error.value_or("incomplete run")});
          continue;
        }
        ++row.runs;
        for (const auto& [k, v] : metric_values(r.summary)) samples[k].push_back(v);
      } catch (const Error& e) {
        spdlog::error("suite run {} seed {} failed: {}", scenario, seed, e.what());
        result.failures.push_back({scenario, seed, e.what()});
      }
    }
    for (const auto& [k, v] : samples) row.metrics[k] = aggregate_values(v);
    if (row.runs > 0) result.rows.push_back(std::move(row));
  }
  return result;
}

void write_suite_csv(const SuiteResult& result, std::ostream& out) {
  out << "scenario,domain,status,seed,runs";
  for (const auto& m : suite_metric_names()) out << ',' << m << "_mean," << m << "_std";
  out << ",error\n";
  for (const auto& row : result.rows) {
    out << csv_field(row.scenario) << ',' << (row.domain == Domain::Platoon ? "platoon" : "pandemic") << ",ok,,"
        << row.runs;
    for (const auto& m : suite_metric_names()) {
      if (auto it = row.metrics.find(m); it != row.metrics.end()) {
        out << fmt::format(",{:.10g},{:.10g}", it->second.mean, it->second.std);
      } else {
        out << ",,";
      }
    }
    out << ",\n";
  }
  for (const auto& f : result.failures) {
    out << csv_field(f.scenario) << ",,failed," << f.seed << ",0";
    for (std::size_t i = 0; i < suite_metric_names().size(); ++i) out << ",,";
    out << ',' << csv_field(f.error) << '\n';
  }
}

}  // namespace mfn
