// cpl: command-line driver for cautious pseudo-labeling experiments.
//
//   cpl gen      --config c.json [--out DIR]
//   cpl train    --config c.json [--seed S] [--checkpoint FILE]
//   cpl cpl      --config c.json [--strategy cautious|random|none] [--output-dir DIR]
//   cpl eval     --config c.json --checkpoint FILE [--seed S]
//   cpl diagnose REPORT.json [--tolerance T]
//
// Exit codes: 0 ok, 1 configuration or usage error, 2 data error, 3 numerical
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cpl/config.hpp"
#include "cpl/engine.hpp"
#include "cpl/errors.hpp"
#include "cpl/report.hpp"
#include "cpl/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kData = 2, kNumerical = 3 };

std::string file_stem(std::string_view kind, cpl::Strategy strategy, std::uint64_t seed) {
  return std::string(kind) + "_" + std::string(cpl::to_string(strategy)) + "_seed" + std::to_string(seed);
}

std::uint64_t pick_seed(const cpl::ExperimentConfig& config, const std::optional<std::uint64_t>& seed) {
  return seed ? *seed : config.seeds.front();
}

int cmd_gen(const fs::path& config_path, std::optional<fs::path> out_dir) {
  const auto config = cpl::load_config(config_path);
  if (!config.dataset.sbm) throw cpl::ConfigError("gen needs dataset.sbm in the config");
  const fs::path dir = out_dir ? *out_dir : config.output_dir / "data";
  const cpl::Dataset data = cpl::load_dataset(config);
  fs::create_directories(dir);
  cpl::write_edge_list(dir / "edges.txt", data.graph);
  cpl::write_features(dir / "features.csv", data.features);
  cpl::write_labels(dir / "labels.csv", *data.labels);
  std::cout << "wrote " << data.graph.node_count() << " nodes, " << data.graph.edge_count()
            << " edges to " << dir.generic_string() << "\n";
  return kOk;
}

void print_metrics(const cpl::EvalMetrics& m) {
  for (const auto& [name, value] : m.values) std::printf("  %-16s %8.4f%%\n", name.c_str(), 100.0 * value);
}

int cmd_train(const fs::path& config_path, std::optional<std::uint64_t> seed_flag,
              std::optional<fs::path> checkpoint_path) {
  const auto config = cpl::load_config(config_path);
  const std::uint64_t seed = pick_seed(config, seed_flag);
  const cpl::Dataset data = cpl::load_dataset(config);
  const auto problem = cpl::make_problem(config, data, seed);
  const cpl::RunConfig run = cpl::run_config_for(config, seed);
  const cpl::Pretrained teacher = cpl::pretrain_teacher(*problem, run);
  const cpl::EvalMetrics metrics = problem->evaluate(teacher.model, problem->message_graph({}));
  const fs::path path = checkpoint_path ? *checkpoint_path
                                        : config.output_dir / ("pretrained_seed" + std::to_string(seed) + ".json");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cpl::save_checkpoint(path, cpl::Checkpoint{teacher.model, {}});
  std::cout << "pretrained " << teacher.losses.size() << " epochs, final loss "
            << (teacher.losses.empty() ? 0.0 : teacher.losses.back()) << "\n";
  print_metrics(metrics);
  std::cout << "checkpoint: " << path.generic_string() << "\n";
  return kOk;
}

int cmd_cpl(const fs::path& config_path, std::optional<std::string> strategy_flag,
            std::optional<fs::path> out_flag) {
  auto config = cpl::load_config(config_path);
  if (strategy_flag) {
    try {
      config.run.pl.strategy = cpl::parse_strategy(*strategy_flag);
    } catch (const cpl::ConfigError& e) {
      throw cpl::ConfigError(std::string("--strategy: ") + e.what());
    }
  }
  if (out_flag) config.output_dir = *out_flag;
  const json echo = cpl::config_to_json(config);
  const cpl::Dataset data = cpl::load_dataset(config);
  const cpl::Strategy strategy = config.run.pl.strategy;

  std::vector<cpl::RunReport> reports;
  json timing = json::object();
  for (std::uint64_t seed : config.seeds) {
    const auto start = std::chrono::steady_clock::now();
    const auto problem = cpl::make_problem(config, data, seed);
    const cpl::RunResult result = cpl::run_pseudo_labeling(*problem, cpl::run_config_for(config, seed));
    cpl::RunReport report = cpl::make_run_report(echo, config.task, problem->candidate_count(),
                                                 problem->initial_observed_count(), result);
    cpl::write_text(config.output_dir / (file_stem("report", strategy, seed) + ".json"),
                    cpl::emit_report(report));
    cpl::write_text(config.output_dir / (file_stem("series", strategy, seed) + ".csv"),
                    cpl::series_csv(report));
    cpl::save_checkpoint(config.output_dir / (file_stem("checkpoint", strategy, seed) + ".json"),
                         cpl::Checkpoint{result.model, result.extra_edges});
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    timing[std::to_string(seed)] = seconds;

    std::printf("seed %llu: %zu iterations, %zu pseudo labels, test %.4f (raw %.4f), A %.4f",
                static_cast<unsigned long long>(seed), report.records.size(), report.pseudo_labeled,
                report.final_metrics.test_metric, report.raw_metrics.test_metric, report.inconsistency);
    if (report.bound) std::printf(", bound %.4f%s", report.bound->value, report.bound->vacuous ? " (vacuous)" : "");
    std::printf(", %.1fs\n", seconds);
    reports.push_back(std::move(report));
  }
  const std::string name = std::string(cpl::to_string(strategy));
  cpl::write_text(config.output_dir / ("summary_" + name + ".json"),
                  cpl::to_json(cpl::summarize_runs(reports)).dump(2) + "\n");
  cpl::write_text(config.output_dir / ("timing_" + name + ".json"), timing.dump(2) + "\n");
  std::cout << "reports in " << config.output_dir.generic_string() << "\n";
  return kOk;
}

int cmd_eval(const fs::path& config_path, const fs::path& checkpoint_path,
             std::optional<std::uint64_t> seed_flag) {
  const auto config = cpl::load_config(config_path);
  const std::uint64_t seed = pick_seed(config, seed_flag);
  const cpl::Checkpoint ck = cpl::load_checkpoint(checkpoint_path);
  if (ck.model.task != config.task) throw cpl::ConfigError("checkpoint task does not match config");
  const cpl::Dataset data = cpl::load_dataset(config);
  const auto problem = cpl::make_problem(config, data, seed);
  if (ck.model.params.w1.rows() != problem->features().cols()) {
    throw cpl::DataError("checkpoint input width does not match the features");
  }
  cpl::SparseGraph graph = problem->message_graph({});
  if (!ck.extra_edges.empty()) {
    std::vector<cpl::Edge> edges = graph.edges();
    edges.insert(edges.end(), ck.extra_edges.begin(), ck.extra_edges.end());
    graph = cpl::SparseGraph::from_edges(graph.node_count(), edges);
  }
  const cpl::EvalMetrics m = problem->evaluate(ck.model, graph);
  json j = {{"seed", seed}, {"metrics", m.values}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_diagnose(const fs::path& report_path, double tolerance) {
  const cpl::RunReport r = cpl::load_report(report_path);
  const auto check = cpl::loss_trajectory_check(r.records, tolerance);
  std::printf("%4s %6s %6s %10s %10s %10s %11s %10s %8s %8s\n", "t", "|Yo|", "sel", "L(t)", "L(t+1)",
              "beta", "cov", "slack", "q", "A");
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& rec = r.records[i];
    std::printf("%4d %6zu %6zu %10.5f %10.5f %10.4f %11.3e %10.3e %8.4f %8.4f%s\n", rec.iteration,
                rec.observed_size, rec.selected, rec.loss_previous, rec.loss_before, rec.beta,
                rec.covariance.value_or(std::nan("")), check.slack[i].value_or(std::nan("")),
                rec.q.value_or(std::nan("")), rec.inconsistency,
                check.slack[i].value_or(0.0) > tolerance ? "  !" : "");
  }
  std::printf("loss inequality: %zu violation(s), max slack %.3e; fine-tune did not reduce loss in %zu iteration(s)\n",
              check.violations.size(), check.max_slack, check.assumption_violations.size());
  if (!check.skipped.empty()) {
    std::printf("no held-out truth for %zu iteration(s); covariance skipped there\n", check.skipped.size());
  }
  std::size_t negative = 0;
  for (const auto& rec : r.records) negative += rec.covariance.value_or(0.0) < 0 ? 1 : 0;
  std::printf("covariance < 0 in %zu of %zu iterations\n", negative, r.records.size());
  double residual = 0.0;
  for (const auto& rec : r.records) residual = std::max(residual, cpl::decomposition_residual(rec));
  std::printf("enlarged-set loss decomposition residual %.1e\n", residual);
  if (residual > 1e-9) {
    std::fprintf(stderr, "error: stored losses do not satisfy the covariance decomposition\n");
    return kNumerical;
  }

  if (!r.q) {
    std::printf("q undefined (nothing pseudo-labeled); no bound\n");
    return r.bound ? kNumerical : kOk;
  }
  const cpl::ErrorBound again = cpl::error_bound(*r.q, r.inconsistency);
  std::printf("q %.4f%%  A %.4f%%  bound 2(q+A) %.4f%%  stored %.4f%%  experimental error %.4f%%%s\n",
              100 * *r.q, 100 * r.inconsistency, 100 * again.value,
              r.bound ? 100 * r.bound->value : std::nan(""), 100 * r.experimental_error,
              again.vacuous ? "  (vacuous)" : "");
  if (!r.bound || again != *r.bound) {
    std::fprintf(stderr, "error: stored bound does not match 2(q+A)\n");
    return kNumerical;
  }
  std::printf("bound recomputation matches\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cautious pseudo-labeling for GCN node classification and link prediction"};
  app.require_subcommand(1);

  fs::path config_path;
  std::optional<fs::path> out_dir;
  std::optional<fs::path> checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  fs::path report_path;
  double tolerance = cpl::LossTrajectoryReport::kTolerance;

  auto* gen = app.add_subcommand("gen", "Write an SBM dataset (edges, features, labels) from a config");
  gen->add_option("--config", config_path, "Experiment config JSON")->required();
  gen->add_option("--out", out_dir, "Output directory (default <output_dir>/data)");

  auto* train = app.add_subcommand("train", "Pretrain the teacher only and save a checkpoint");
  train->add_option("--config", config_path, "Experiment config JSON")->required();
  train->add_option("--seed", seed, "Run seed (default: first seed in config)");
  train->add_option("--checkpoint", checkpoint, "Checkpoint output path");

  auto* run = app.add_subcommand("cpl", "Run pseudo-labeling for every seed in the config");
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  run->add_option("--strategy", strategy, "cautious, random or none (overrides config)");
  run->add_option("--output-dir", out_dir, "Report directory (overrides config)");

  auto* eval = app.add_subcommand("eval", "Recompute metrics from a checkpoint");
  eval->add_option("--config", config_path, "Experiment config JSON")->required();
  eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  eval->add_option("--seed", seed, "Run seed used for the split (default: first seed)");

  auto* diagnose = app.add_subcommand("diagnose", "Replay bound and loss checks from a report");
  diagnose->add_option("report", report_path, "Report JSON")->required();
  diagnose->add_option("--tolerance", tolerance, "Slack tolerance for the loss inequality");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kConfig;
  }

  try {
    if (*gen) return cmd_gen(config_path, out_dir);
    if (*train) return cmd_train(config_path, seed, checkpoint);
    if (*run) return cmd_cpl(config_path, strategy, out_dir);
    if (*eval) return cmd_eval(config_path, *checkpoint, seed);
    if (*diagnose) return cmd_diagnose(report_path, tolerance);
  } catch (const cpl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const cpl::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const cpl::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kConfig;
}
