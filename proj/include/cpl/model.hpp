#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cpl/gcn.hpp"
#include "cpl/graph.hpp"

namespace cpl {

enum class Task { node_classification, link_prediction };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

// Teacher and student are two roles of this one type.
struct GcnModel {
  Task task = Task::node_classification;
  GcnParams<double> params;

  friend bool operator==(const GcnModel&, const GcnModel&) = default;
};

// What to score: nodes for classification, node pairs for link prediction.
struct QuerySet {
  std::vector<Index> nodes;
  std::vector<Edge> pairs;

  std::size_t size(Task task) const {
    return task == Task::node_classification ? nodes.size() : pairs.size();
  }
};

// One row per query: class distribution (node task) or a single edge score.
using Predictions = Matrix<double>;

Predictions predict(const GcnModel& model, const SparseGraph& graph, const FeatureMatrix& x,
                    const QuerySet& queries);
Predictions predict_normalized(const GcnModel& model, const SparseMatrix<double>& adj,
                               const FeatureMatrix& x, const QuerySet& queries);

// argmax for class rows, score >= 0.5 for edge scores.
int hard_decision(const Predictions& predictions, Index row);

// Probability assigned to `label` in a prediction row (edge scores: label 1 => p, 0 => 1-p).
double probability_of(const Predictions& predictions, Index row, int label);

// Versioned JSON checkpoint: shapes, row-major values and seeds, plus any
// pseudo edges that were added to the message-passing graph.
struct Checkpoint {
  static constexpr int kVersion = 1;

  GcnModel model;
  std::vector<Edge> extra_edges;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_string(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_string(const std::string& text);

}  // namespace cpl
