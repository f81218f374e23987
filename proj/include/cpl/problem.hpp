#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpl/gcn.hpp"
#include "cpl/graph.hpp"
#include "cpl/model.hpp"
#include "cpl/pl_state.hpp"

namespace cpl {

struct EvalMetrics {
  std::map<std::string, double> values;
  double test_metric = 0.0;  // accuracy (node) or AUC (link)
  double val_metric = 0.0;
  double zero_one_error = 0.0;

  friend bool operator==(const EvalMetrics&, const EvalMetrics&) = default;
};

// Task-specific side of the pseudo-labeling loop: what the candidates are, how
// committed pseudo labels change the training set and the message-passing
// graph, and how a model is scored.
class PlProblem {
 public:
  virtual ~PlProblem() = default;

  virtual Task task() const = 0;
  virtual Index output_dim(Index embedding_dim) const = 0;
  virtual const FeatureMatrix& features() const = 0;

  virtual std::size_t candidate_count() const = 0;
  virtual std::size_t initial_observed_count() const = 0;
  virtual QuerySet candidate_queries(std::span<const std::size_t> candidates) const = 0;
  // Held-out truth for a candidate; benchmark instrumentation only.
  virtual std::optional<int> ground_truth(std::size_t candidate) const = 0;

  // Confidence of a prediction row and the pseudo label it would receive.
  virtual double confidence(const Predictions& p, Index row) const = 0;
  virtual int pseudo_label(const Predictions& p, Index row) const = 0;

  virtual SparseGraph message_graph(std::span<const PseudoLabel> pseudo) const = 0;
  virtual std::vector<Edge> extra_edges(std::span<const PseudoLabel> pseudo) const = 0;

  // One training objective evaluation on the observed set (initial + pseudo).
  virtual LossAndGradient<double> training_loss(const Matrix<double>& out,
                                                std::span<const PseudoLabel> pseudo,
                                                const SparseGraph& message_graph,
                                                Rng& rng) const = 0;

  // Per-sample cross-entropy over the observed set: initial samples first, then
  // pseudo labels in commit order.
  virtual std::vector<double> observed_cross_entropy(const GcnModel& model,
                                                     const SparseGraph& message_graph,
                                                     std::span<const PseudoLabel> pseudo) const = 0;

  virtual QuerySet test_queries() const = 0;
  virtual bool has_validation() const = 0;
  // Mean cross-entropy on the validation split; the model-selection signal.
  virtual double validation_loss(const GcnModel& model, const SparseGraph& message_graph) const = 0;
  virtual EvalMetrics evaluate(const GcnModel& model, const SparseGraph& message_graph) const = 0;
};

// Candidate pool: labeled-or-not nodes outside the train and validation splits.
std::unique_ptr<PlProblem> make_node_problem(SparseGraph graph, FeatureMatrix features,
                                             NodeLabels labels, NodeSplit split);

struct LinkPoolOptions {
  Index exhaustive_node_limit = 3000;
  std::size_t sampled_pool_size = 1'000'000;
  std::uint64_t seed = 0;
};

// Candidate pool: every unordered pair outside the training edges when
// N <= exhaustive_node_limit, otherwise a fixed uniform sample of such pairs.
std::unique_ptr<PlProblem> make_link_problem(SparseGraph full_graph, FeatureMatrix features,
                                             EdgeSplit split, LinkPoolOptions pool = {});

}  // namespace cpl
