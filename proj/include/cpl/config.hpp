#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpl/engine.hpp"
#include "cpl/graph.hpp"
#include "cpl/problem.hpp"

namespace cpl {

inline constexpr int kConfigSchemaVersion = 1;

struct SbmSpec {
  std::vector<Index> block_sizes{200, 200};
  double p_in = 0.05;
  double p_out = 0.005;
  Index feature_dim = 16;
  double feature_signal = 1.0;
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
};

// Either an SBM spec or three file paths. Relative paths resolve against the
// config file's directory.
struct DatasetSpec {
  std::optional<SbmSpec> sbm;
  std::filesystem::path edge_list;
  std::filesystem::path features;
  std::filesystem::path labels;
};

struct SplitSpec {
  SplitRatios ratios{0.05, 0.05, 0.9};
  std::uint64_t seed = 0;
  bool per_seed = false;  // re-split for each run seed
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  Task task = Task::node_classification;
  DatasetSpec dataset;
  SplitSpec split;
  RunConfig run;  // run.seed is overwritten from `seeds`
  LinkPoolOptions pool;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "out";
};

// Unknown keys, wrong types, and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct Dataset {
  SparseGraph graph;
  FeatureMatrix features;
  std::optional<NodeLabels> labels;
};

Dataset load_dataset(const ExperimentConfig& config);

// Splits the dataset for one run seed and wraps it as a pseudo-labeling problem.
std::unique_ptr<PlProblem> make_problem(const ExperimentConfig& config, const Dataset& data,
                                        std::uint64_t run_seed);

RunConfig run_config_for(const ExperimentConfig& config, std::uint64_t run_seed);

}  // namespace cpl
