#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpl/engine.hpp"

namespace cpl {

inline constexpr int kReportSchemaVersion = 1;

// One run (one strategy, one seed). Holds no wall-clock data so that equal
// configs give byte-identical files; timings go to a separate sidecar.
struct RunReport {
  int schema_version = kReportSchemaVersion;
  nlohmann::json config;
  Task task = Task::node_classification;
  Strategy strategy = Strategy::cautious;
  std::uint64_t seed = 0;
  std::size_t candidate_pool_size = 0;
  std::size_t initial_observed = 0;
  std::size_t pseudo_labeled = 0;
  double pretrain_final_loss = 0.0;
  EvalMetrics raw_metrics;
  EvalMetrics final_metrics;
  double initial_inconsistency = 0.0;
  double inconsistency = 0.0;
  std::optional<double> q;
  std::optional<ErrorBound> bound;
  double experimental_error = 0.0;
  std::vector<IterationRecord> records;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

RunReport make_run_report(const nlohmann::json& config_echo, Task task,
                          std::size_t candidate_pool_size, std::size_t initial_observed,
                          const RunResult& result);

nlohmann::json to_json(const RunReport& report);
RunReport run_report_from_json(const nlohmann::json& j);

// Stable text form: two-space indent, trailing newline.
std::string emit_report(const RunReport& report);
RunReport parse_report(const std::string& text);
RunReport load_report(const std::filesystem::path& path);

// Flat per-iteration series; empty cells for undefined values.
std::string series_csv(const RunReport& report);

struct MetricSummary {
  std::vector<double> per_seed;
  double mean = 0.0;
  std::optional<double> std;  // sample std, only with two or more seeds

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

// Aggregate over the seeds of one strategy.
struct EvalReport {
  int schema_version = kReportSchemaVersion;
  Task task = Task::node_classification;
  Strategy strategy = Strategy::cautious;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, MetricSummary> metrics;
  std::vector<std::optional<double>> q;
  std::vector<double> inconsistency;
  std::vector<std::optional<double>> bound;
  std::vector<double> experimental_error;
  std::vector<std::vector<std::optional<double>>> pl_error_rate;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

MetricSummary summarize(std::vector<double> values);
EvalReport summarize_runs(const std::vector<RunReport>& runs);
nlohmann::json to_json(const EvalReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace cpl
