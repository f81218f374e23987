#include "cpl/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cpl/errors.hpp"

namespace cpl {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json metrics_json(const EvalMetrics& m) {
  return {{"values", m.values},
          {"test_metric", m.test_metric},
          {"val_metric", m.val_metric},
          {"zero_one_error", m.zero_one_error}};
}

EvalMetrics metrics_from(const json& j) {
  EvalMetrics m;
  m.values = j.at("values").get<std::map<std::string, double>>();
  m.test_metric = j.at("test_metric").get<double>();
  m.val_metric = j.at("val_metric").get<double>();
  m.zero_one_error = j.at("zero_one_error").get<double>();
  return m;
}

json record_json(const IterationRecord& r) {
  return {{"iteration", r.iteration},
          {"observed_size", r.observed_size},
          {"unobserved_size", r.unobserved_size},
          {"selected", r.selected},
          {"c_min", opt(r.c_min)},
          {"threshold_confidence", opt(r.threshold_confidence)},
          {"q", opt(r.q)},
          {"loss_previous", r.loss_previous},
          {"loss_before", r.loss_before},
          {"loss_after", r.loss_after},
          {"loss_old_set", r.loss_old_set},
          {"beta", r.beta},
          {"covariance", opt(r.covariance)},
          {"covariance_pseudo", r.covariance_pseudo},
          {"pool_mean_ce", r.pool_mean_ce},
          {"mean_indicator", r.mean_indicator},
          {"expected_indicator", r.expected_indicator},
          {"pl_error_rate", opt(r.pl_error_rate)},
          {"inconsistency", r.inconsistency},
          {"val_metric", r.val_metric},
          {"test_metric", r.test_metric},
          {"view_epsilons", r.view_epsilons}};
}

IterationRecord record_from(const json& j) {
  IterationRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.observed_size = j.at("observed_size").get<std::size_t>();
  r.unobserved_size = j.at("unobserved_size").get<std::size_t>();
  r.selected = j.at("selected").get<std::size_t>();
  r.c_min = opt_from(j.at("c_min"));
  r.threshold_confidence = opt_from(j.at("threshold_confidence"));
  r.q = opt_from(j.at("q"));
  r.loss_previous = j.at("loss_previous").get<double>();
  r.loss_before = j.at("loss_before").get<double>();
  r.loss_after = j.at("loss_after").get<double>();
  r.loss_old_set = j.at("loss_old_set").get<double>();
  r.beta = j.at("beta").get<double>();
  r.covariance = opt_from(j.at("covariance"));
  r.covariance_pseudo = j.at("covariance_pseudo").get<double>();
  r.pool_mean_ce = j.at("pool_mean_ce").get<double>();
  r.mean_indicator = j.at("mean_indicator").get<double>();
  r.expected_indicator = j.at("expected_indicator").get<double>();
  r.pl_error_rate = opt_from(j.at("pl_error_rate"));
  r.inconsistency = j.at("inconsistency").get<double>();
  r.val_metric = j.at("val_metric").get<double>();
  r.test_metric = j.at("test_metric").get<double>();
  r.view_epsilons = j.at("view_epsilons").get<std::vector<double>>();
  return r;
}

// Shortest text that parses back to the same double.
std::string cell(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string cell(const std::optional<double>& v) { return v ? cell(*v) : std::string(); }

}  // namespace

RunReport make_run_report(const json& config_echo, Task task, std::size_t candidate_pool_size,
                          std::size_t initial_observed, const RunResult& result) {
  RunReport r;
  r.config = config_echo;
  r.task = task;
  r.strategy = result.strategy;
  r.seed = result.seed;
  r.candidate_pool_size = candidate_pool_size;
  r.initial_observed = initial_observed;
  r.pseudo_labeled = result.pseudo_labels.size();
  r.pretrain_final_loss = result.pretrain_losses.empty() ? 0.0 : result.pretrain_losses.back();
  r.raw_metrics = result.raw_metrics;
  r.final_metrics = result.final_metrics;
  r.initial_inconsistency = result.initial_inconsistency;
  r.inconsistency = result.inconsistency;
  r.q = result.q;
  r.bound = result.bound;
  r.experimental_error = result.final_metrics.zero_one_error;
  r.records = result.records;
  return r;
}

json to_json(const RunReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["config"] = r.config;
  j["task"] = to_string(r.task);
  j["strategy"] = to_string(r.strategy);
  j["seed"] = r.seed;
  j["candidate_pool_size"] = r.candidate_pool_size;
  j["initial_observed"] = r.initial_observed;
  j["pseudo_labeled"] = r.pseudo_labeled;
  j["pretrain_final_loss"] = r.pretrain_final_loss;
  j["raw_metrics"] = metrics_json(r.raw_metrics);
  j["final_metrics"] = metrics_json(r.final_metrics);
  j["initial_inconsistency"] = r.initial_inconsistency;
  j["inconsistency"] = r.inconsistency;
  j["q"] = opt(r.q);
  if (r.bound) {
    j["bound"] = {{"value", r.bound->value}, {"vacuous", r.bound->vacuous}};
  } else {
    j["bound"] = nullptr;
  }
  j["experimental_error"] = r.experimental_error;
  json records = json::array();
  for (const auto& rec : r.records) records.push_back(record_json(rec));
  j["records"] = std::move(records);
  return j;
}

RunReport run_report_from_json(const json& j) {
  try {
    RunReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw DataError("unsupported report schema_version " + std::to_string(r.schema_version));
    }
    r.config = j.at("config");
    r.task = parse_task(j.at("task").get<std::string>());
    r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.candidate_pool_size = j.at("candidate_pool_size").get<std::size_t>();
    r.initial_observed = j.at("initial_observed").get<std::size_t>();
    r.pseudo_labeled = j.at("pseudo_labeled").get<std::size_t>();
    r.pretrain_final_loss = j.at("pretrain_final_loss").get<double>();
    r.raw_metrics = metrics_from(j.at("raw_metrics"));
    r.final_metrics = metrics_from(j.at("final_metrics"));
    r.initial_inconsistency = j.at("initial_inconsistency").get<double>();
    r.inconsistency = j.at("inconsistency").get<double>();
    r.q = opt_from(j.at("q"));
    if (!j.at("bound").is_null()) {
      r.bound = ErrorBound{j["bound"].at("value").get<double>(), j["bound"].at("vacuous").get<bool>()};
    }
    r.experimental_error = j.at("experimental_error").get<double>();
    for (const auto& rec : j.at("records")) r.records.push_back(record_from(rec));
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string emit_report(const RunReport& report) { return to_json(report).dump(2) + "\n"; }

RunReport parse_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("report is not valid JSON: ") + e.what());
  }
  return run_report_from_json(j);
}

RunReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_report(buffer.str());
}

std::string series_csv(const RunReport& report) {
  std::ostringstream out;
  out << "iteration,observed_size,unobserved_size,selected,c_min,threshold_confidence,q,"
         "loss_previous,loss_before,loss_after,loss_old_set,beta,covariance,covariance_pseudo,"
         "pool_mean_ce,mean_indicator,expected_indicator,pl_error_rate,inconsistency,"
         "val_metric,test_metric\n";
  for (const auto& r : report.records) {
    out << r.iteration << ',' << r.observed_size << ',' << r.unobserved_size << ',' << r.selected
        << ',' << cell(r.c_min) << ',' << cell(r.threshold_confidence) << ',' << cell(r.q) << ','
        << cell(r.loss_previous) << ',' << cell(r.loss_before) << ',' << cell(r.loss_after) << ','
        << cell(r.loss_old_set) << ',' << cell(r.beta) << ',' << cell(r.covariance) << ','
        << cell(r.covariance_pseudo)
        << ',' << cell(r.pool_mean_ce) << ',' << cell(r.mean_indicator) << ','
        << cell(r.expected_indicator) << ',' << cell(r.pl_error_rate) << ','
        << cell(r.inconsistency) << ',' << cell(r.val_metric) << ',' << cell(r.test_metric)
        << '\n';
  }
  return out.str();
}

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.per_seed = std::move(values);
  if (s.per_seed.empty()) return s;
  const double n = static_cast<double>(s.per_seed.size());
  s.mean = std::accumulate(s.per_seed.begin(), s.per_seed.end(), 0.0) / n;
  if (s.per_seed.size() >= 2) {
    double ss = 0.0;
    for (double v : s.per_seed) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

EvalReport summarize_runs(const std::vector<RunReport>& runs) {
  EvalReport e;
  if (runs.empty()) return e;
  e.task = runs.front().task;
  e.strategy = runs.front().strategy;
  std::map<std::string, std::vector<double>> columns;
  for (const auto& r : runs) {
    e.seeds.push_back(r.seed);
    for (const auto& [name, value] : r.final_metrics.values) columns[name].push_back(value);
    for (const auto& [name, value] : r.raw_metrics.values) columns["raw_" + name].push_back(value);
    e.q.push_back(r.q);
    e.inconsistency.push_back(r.inconsistency);
    e.bound.push_back(r.bound ? std::optional<double>(r.bound->value) : std::nullopt);
    e.experimental_error.push_back(r.experimental_error);
    std::vector<std::optional<double>> series;
    for (const auto& rec : r.records) series.push_back(rec.pl_error_rate);
    e.pl_error_rate.push_back(std::move(series));
  }
  for (auto& [name, values] : columns) e.metrics[name] = summarize(std::move(values));
  return e;
}

json to_json(const EvalReport& e) {
  json j;
  j["schema_version"] = e.schema_version;
  j["task"] = to_string(e.task);
  j["strategy"] = to_string(e.strategy);
  j["seeds"] = e.seeds;
  json metrics = json::object();
  for (const auto& [name, s] : e.metrics) {
    metrics[name] = {{"mean", s.mean}, {"std", opt(s.std)}, {"per_seed", s.per_seed}};
  }
  j["metrics"] = std::move(metrics);
  json q = json::array(), bound = json::array(), pl = json::array();
  for (const auto& v : e.q) q.push_back(opt(v));
  for (const auto& v : e.bound) bound.push_back(opt(v));
  for (const auto& series : e.pl_error_rate) {
    json s = json::array();
    for (const auto& v : series) s.push_back(opt(v));
    pl.push_back(std::move(s));
  }
  j["q"] = std::move(q);
  j["inconsistency"] = e.inconsistency;
  j["bound"] = std::move(bound);
  j["experimental_error"] = e.experimental_error;
  j["pl_error_rate"] = std::move(pl);
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace cpl
