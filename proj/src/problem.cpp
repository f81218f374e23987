#include "cpl/problem.hpp"

#include <algorithm>
#include <unordered_set>

#include "cpl/errors.hpp"
#include "cpl/metrics.hpp"

namespace cpl {

namespace {

class NodeProblem final : public PlProblem {
 public:
  NodeProblem(SparseGraph graph, FeatureMatrix features, NodeLabels labels, NodeSplit split)
      : graph_(std::move(graph)),
        features_(std::move(features)),
        labels_(std::move(labels)),
        split_(std::move(split)) {
    if (features_.rows() != graph_.node_count() || labels_.size() != graph_.node_count()) {
      throw DataError("features and labels must cover every node");
    }
    if (split_.train_idx.empty()) throw DataError("empty training set");
    std::vector<std::uint8_t> excluded(static_cast<std::size_t>(graph_.node_count()), 0);
    for (Index i : split_.train_idx) {
      if (!labels_.is_labeled(i)) throw DataError("training node without a label");
      excluded[i] = 1;
      train_labels_.push_back(labels_.labels[i]);
    }
    for (Index i : split_.val_idx) excluded[i] = 1;
    for (Index i = 0; i < graph_.node_count(); ++i)
      if (!excluded[i]) candidates_.push_back(i);
  }

  Task task() const override { return Task::node_classification; }
  Index output_dim(Index) const override { return labels_.class_count; }
  const FeatureMatrix& features() const override { return features_; }
  std::size_t candidate_count() const override { return candidates_.size(); }
  std::size_t initial_observed_count() const override { return split_.train_idx.size(); }

  QuerySet candidate_queries(std::span<const std::size_t> ids) const override {
    QuerySet q;
    q.nodes.reserve(ids.size());
    for (std::size_t c : ids) q.nodes.push_back(candidates_[c]);
    return q;
  }

  std::optional<int> ground_truth(std::size_t candidate) const override {
    const Index node = candidates_[candidate];
    if (!labels_.is_labeled(node)) return std::nullopt;
    return labels_.labels[node];
  }

  double confidence(const Predictions& p, Index row) const override { return p.row(row).maxCoeff(); }
  int pseudo_label(const Predictions& p, Index row) const override { return hard_decision(p, row); }

  SparseGraph message_graph(std::span<const PseudoLabel>) const override { return graph_; }
  std::vector<Edge> extra_edges(std::span<const PseudoLabel>) const override { return {}; }

  LossAndGradient<double> training_loss(const Matrix<double>& out,
                                        std::span<const PseudoLabel> pseudo, const SparseGraph&,
                                        Rng&) const override {
    auto [index, targets] = observed(pseudo);
    return softmax_cross_entropy<double>(out, targets, index);
  }

  std::vector<double> observed_cross_entropy(const GcnModel& model, const SparseGraph& graph,
                                             std::span<const PseudoLabel> pseudo) const override {
    auto [index, targets] = observed(pseudo);
    const auto cache = gcn_forward(normalize_adjacency<double>(graph), features_, model.params);
    const Matrix<double> probs = classify(cache.out);
    std::vector<double> ce(index.size());
    for (std::size_t k = 0; k < index.size(); ++k) ce[k] = sample_cross_entropy(probs(index[k], targets[k]));
    return ce;
  }

  QuerySet test_queries() const override { return {split_.test_idx, {}}; }
  bool has_validation() const override { return !split_.val_idx.empty(); }

  double validation_loss(const GcnModel& model, const SparseGraph& graph) const override {
    const Predictions p = predict(model, graph, features_, QuerySet{split_.val_idx, {}});
    std::vector<Index> rows(split_.val_idx.size());
    std::vector<int> truth(split_.val_idx.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      rows[k] = static_cast<Index>(k);
      truth[k] = labels_.labels[split_.val_idx[k]];
    }
    return class_cross_entropy<double>(p, truth, rows);
  }

  EvalMetrics evaluate(const GcnModel& model, const SparseGraph& graph) const override {
    QuerySet all;
    all.nodes.resize(static_cast<std::size_t>(graph_.node_count()));
    for (Index i = 0; i < graph_.node_count(); ++i) all.nodes[i] = i;
    const Predictions p = predict(model, graph, features_, all);
    std::vector<int> predicted(all.nodes.size());
    for (Index i = 0; i < p.rows(); ++i) predicted[i] = hard_decision(p, i);
    EvalMetrics m;
    const auto test = accuracy_and_error(predicted, labels_.labels, split_.test_idx);
    m.test_metric = test.accuracy;
    m.zero_one_error = test.error;
    m.values["test_accuracy"] = test.accuracy;
    m.values["test_error"] = test.error;
    if (!split_.val_idx.empty()) {
      m.val_metric = accuracy_and_error(predicted, labels_.labels, split_.val_idx).accuracy;
      m.values["val_accuracy"] = m.val_metric;
    }
    return m;
  }

 private:
  std::pair<std::vector<Index>, std::vector<int>> observed(std::span<const PseudoLabel> pseudo) const {
    std::vector<Index> index = split_.train_idx;
    std::vector<int> targets = train_labels_;
    for (const auto& p : pseudo) {
      index.push_back(candidates_[p.candidate]);
      targets.push_back(p.label);
    }
    return {std::move(index), std::move(targets)};
  }

  SparseGraph graph_;
  FeatureMatrix features_;
  NodeLabels labels_;
  NodeSplit split_;
  std::vector<int> train_labels_;
  std::vector<Index> candidates_;
};

class LinkProblem final : public PlProblem {
 public:
  LinkProblem(SparseGraph full, FeatureMatrix features, EdgeSplit split, LinkPoolOptions pool)
      : full_(std::move(full)), features_(std::move(features)), split_(std::move(split)) {
    if (features_.rows() != full_.node_count()) throw DataError("features must cover every node");
    if (split_.train_pos.empty()) throw DataError("empty training edge set");
    const Index n = full_.node_count();
    train_graph_ = SparseGraph::from_edges(n, split_.train_pos);
    if (n <= pool.exhaustive_node_limit) {
      for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
          if (!train_graph_.has_edge(i, j)) candidates_.push_back({i, j});
    } else {
      const std::size_t available =
          static_cast<std::size_t>(n) * (n - 1) / 2 - train_graph_.edge_count();
      const std::size_t target = std::min(pool.sampled_pool_size, available);
      Rng rng(pool.seed);
      std::unordered_set<std::uint64_t> taken;
      while (candidates_.size() < target) {
        const Index a = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
        const Index b = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
        if (a == b || train_graph_.has_edge(a, b)) continue;
        const Edge e = Edge::make(a, b);
        if (taken.insert(static_cast<std::uint64_t>(e.u) * n + e.v).second) candidates_.push_back(e);
      }
      std::sort(candidates_.begin(), candidates_.end());
    }
    for (const auto& e : split_.test_pos) test_pairs_.push_back(e);
    for (const auto& e : split_.test_neg) test_pairs_.push_back(e);
  }

  Task task() const override { return Task::link_prediction; }
  Index output_dim(Index embedding_dim) const override { return embedding_dim; }
  const FeatureMatrix& features() const override { return features_; }
  std::size_t candidate_count() const override { return candidates_.size(); }
  std::size_t initial_observed_count() const override { return split_.train_pos.size(); }

  QuerySet candidate_queries(std::span<const std::size_t> ids) const override {
    QuerySet q;
    q.pairs.reserve(ids.size());
    for (std::size_t c : ids) q.pairs.push_back(candidates_[c]);
    return q;
  }

  std::optional<int> ground_truth(std::size_t candidate) const override {
    const Edge& e = candidates_[candidate];
    return full_.has_edge(e.u, e.v) ? 1 : 0;
  }

  double confidence(const Predictions& p, Index row) const override { return p(row, 0); }
  // Pseudo links only: a committed candidate is always an edge.
  int pseudo_label(const Predictions&, Index) const override { return 1; }

  SparseGraph message_graph(std::span<const PseudoLabel> pseudo) const override {
    if (pseudo.empty()) return train_graph_;
    std::vector<Edge> edges = split_.train_pos;
    for (const Edge& e : extra_edges(pseudo)) edges.push_back(e);
    return SparseGraph::from_edges(full_.node_count(), edges);
  }

  std::vector<Edge> extra_edges(std::span<const PseudoLabel> pseudo) const override {
    std::vector<Edge> out;
    out.reserve(pseudo.size());
    for (const auto& p : pseudo) out.push_back(candidates_[p.candidate]);
    return out;
  }

  LossAndGradient<double> training_loss(const Matrix<double>& out,
                                        std::span<const PseudoLabel> pseudo,
                                        const SparseGraph& message_graph, Rng& rng) const override {
    const std::vector<Edge> positives = observed(pseudo);
    const Index n = full_.node_count();
    std::vector<Edge> negatives;
    negatives.reserve(positives.size());
    while (negatives.size() < positives.size()) {
      const Index a = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
      const Index b = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
      if (a == b || message_graph.has_edge(a, b)) continue;
      negatives.push_back(Edge::make(a, b));
    }
    return link_cross_entropy<double>(out, positives, negatives);
  }

  std::vector<double> observed_cross_entropy(const GcnModel& model, const SparseGraph& graph,
                                             std::span<const PseudoLabel> pseudo) const override {
    const std::vector<Edge> positives = observed(pseudo);
    const Predictions scores = predict(model, graph, features_, QuerySet{{}, positives});
    std::vector<double> ce(positives.size());
    for (std::size_t k = 0; k < ce.size(); ++k) ce[k] = sample_cross_entropy(scores(static_cast<Index>(k), 0));
    return ce;
  }

  QuerySet test_queries() const override { return {{}, test_pairs_}; }
  bool has_validation() const override { return !split_.val_pos.empty() && !split_.val_neg.empty(); }

  double validation_loss(const GcnModel& model, const SparseGraph& graph) const override {
    QuerySet q;
    q.pairs.assign(split_.val_pos.begin(), split_.val_pos.end());
    q.pairs.insert(q.pairs.end(), split_.val_neg.begin(), split_.val_neg.end());
    const Predictions p = predict(model, graph, features_, q);
    std::vector<int> targets(q.pairs.size(), 0);
    std::fill(targets.begin(), targets.begin() + static_cast<std::ptrdiff_t>(split_.val_pos.size()), 1);
    return binary_cross_entropy<double>(p.col(0), targets);
  }

  EvalMetrics evaluate(const GcnModel& model, const SparseGraph& graph) const override {
    const auto adj = normalize_adjacency<double>(graph);
    EvalMetrics m;
    const auto test = score(model, adj, split_.test_pos, split_.test_neg);
    m.test_metric = test.auc;
    m.zero_one_error = test.error;
    m.values["test_auc"] = test.auc;
    m.values["test_ap"] = test.ap;
    m.values["test_error"] = test.error;
    if (!split_.val_pos.empty() && !split_.val_neg.empty()) {
      const auto val = score(model, adj, split_.val_pos, split_.val_neg);
      m.val_metric = val.auc;
      m.values["val_auc"] = val.auc;
      m.values["val_ap"] = val.ap;
    }
    return m;
  }

 private:
  struct Scored {
    double auc = 0.0;
    double ap = 0.0;
    double error = 0.0;
  };

  Scored score(const GcnModel& model, const SparseMatrix<double>& adj, std::span<const Edge> pos,
               std::span<const Edge> neg) const {
    QuerySet q;
    q.pairs.assign(pos.begin(), pos.end());
    q.pairs.insert(q.pairs.end(), neg.begin(), neg.end());
    const Predictions p = predict_normalized(model, adj, features_, q);
    std::vector<double> scores(q.pairs.size());
    std::vector<int> labels(q.pairs.size(), 0);
    std::size_t wrong = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      scores[k] = p(static_cast<Index>(k), 0);
      labels[k] = k < pos.size() ? 1 : 0;
      wrong += hard_decision(p, static_cast<Index>(k)) != labels[k] ? 1 : 0;
    }
    return {auc(scores, labels), average_precision(scores, labels),
            static_cast<double>(wrong) / static_cast<double>(scores.size())};
  }

  std::vector<Edge> observed(std::span<const PseudoLabel> pseudo) const {
    std::vector<Edge> positives = split_.train_pos;
    for (const auto& p : pseudo) positives.push_back(candidates_[p.candidate]);
    return positives;
  }

  SparseGraph full_;
  FeatureMatrix features_;
  EdgeSplit split_;
  SparseGraph train_graph_;
  std::vector<Edge> candidates_;
  std::vector<Edge> test_pairs_;
};

}  // namespace

std::unique_ptr<PlProblem> make_node_problem(SparseGraph graph, FeatureMatrix features,
                                             NodeLabels labels, NodeSplit split) {
  return std::make_unique<NodeProblem>(std::move(graph), std::move(features), std::move(labels),
                                       std::move(split));
}

std::unique_ptr<PlProblem> make_link_problem(SparseGraph full_graph, FeatureMatrix features,
                                             EdgeSplit split, LinkPoolOptions pool) {
  return std::make_unique<LinkProblem>(std::move(full_graph), std::move(features), std::move(split),
                                       pool);
}

}  // namespace cpl
