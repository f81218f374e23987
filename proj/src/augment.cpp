#include "cpl/augment.hpp"

#include <algorithm>

#include "cpl/errors.hpp"
#include "cpl/random.hpp"

namespace cpl {

namespace {

bool valid_rate(double r) { return r >= 0.0 && r < 1.0; }

std::size_t count_zeros(const std::vector<std::uint8_t>& keep) {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{0}));
}

}  // namespace

void AugmentationPlan::validate() const {
  if (view_count < 1) throw ConfigError("augmentation needs at least one view");
  if (!valid_rate(feature_drop_rate) || !valid_rate(edge_drop_rate) ||
      !valid_rate(node_drop_rate)) {
    throw ConfigError("augmentation drop rates must lie in [0,1)");
  }
}

std::size_t MaskPair::dropped_features() const { return count_zeros(feature_keep); }
std::size_t MaskPair::dropped_edges() const { return count_zeros(edge_keep); }

MaskPair sample_masks(const AugmentationPlan& plan, const SparseGraph& graph, Index feature_dim,
                      int view) {
  plan.validate();
  if (view < 0 || view >= plan.view_count) throw std::out_of_range("sample_masks: view out of range");
  const Index n = graph.node_count();
  MaskPair m;
  m.rows = n;
  m.cols = feature_dim;
  m.seed = derive_seed(plan.base_seed, stream::kAugment, static_cast<std::uint64_t>(view));
  m.feature_keep.assign(static_cast<std::size_t>(n * feature_dim), 1);
  const auto edges = graph.edges();
  m.edge_keep.assign(edges.size(), 1);

  Rng rng(m.seed);
  if (plan.feature_drop_rate > 0.0) {
    for (auto& keep : m.feature_keep) keep = uniform01(rng) < plan.feature_drop_rate ? 0 : 1;
  }
  if (plan.edge_drop_rate > 0.0) {
    for (auto& keep : m.edge_keep) keep = uniform01(rng) < plan.edge_drop_rate ? 0 : 1;
  }
  if (plan.node_drop_rate > 0.0) {
    std::vector<std::uint8_t> node_dropped(static_cast<std::size_t>(n), 0);
    for (Index i = 0; i < n; ++i) {
      if (uniform01(rng) >= plan.node_drop_rate) continue;
      node_dropped[i] = 1;
      std::fill_n(m.feature_keep.begin() + i * feature_dim, feature_dim, std::uint8_t{0});
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (node_dropped[edges[e].u] || node_dropped[edges[e].v]) m.edge_keep[e] = 0;
    }
  }
  return m;
}

double perturbation_magnitude(const MaskPair& mask, Index n, Index f) {
  if (mask.rows != n || mask.cols != f) throw std::invalid_argument("mask dimensions do not match");
  if (n == 0) return 0.0;
  double eps = 0.0;
  if (f > 0) eps += static_cast<double>(mask.dropped_features()) / static_cast<double>(n * f);
  eps += static_cast<double>(2 * mask.dropped_edges()) / static_cast<double>(n * n);
  return eps;
}

AugmentedInput apply_augmentation(const SparseGraph& graph, const FeatureMatrix& x,
                                  const MaskPair& mask) {
  if (mask.rows != graph.node_count() || mask.rows != x.rows() || mask.cols != x.cols()) {
    throw std::invalid_argument("apply_augmentation: shape mismatch");
  }
  const auto edges = graph.edges();
  if (mask.edge_keep.size() != edges.size()) {
    throw std::invalid_argument("apply_augmentation: edge mask does not match graph");
  }
  AugmentedInput out;
  if (mask.dropped_edges() == 0) {
    out.graph = graph;
  } else {
    std::vector<Edge> kept;
    kept.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (mask.edge_keep[e]) kept.push_back(edges[e]);
    out.graph = SparseGraph::from_edges(graph.node_count(), kept);
  }
  out.features = x;
  if (mask.dropped_features() > 0) {
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j)
        if (!mask.feature_keep[static_cast<std::size_t>(i * x.cols() + j)]) out.features(i, j) = 0.0;
  }
  return out;
}

MultiViewConfidence multi_view_confidence(const GcnModel& model, const SparseGraph& graph,
                                          const FeatureMatrix& x, const AugmentationPlan& plan,
                                          const QuerySet& queries) {
  plan.validate();
  MultiViewConfidence result;
  for (int v = 0; v < plan.view_count; ++v) {
    const MaskPair mask = sample_masks(plan, graph, x.cols(), v);
    result.epsilons.push_back(perturbation_magnitude(mask, graph.node_count(), x.cols()));
    const AugmentedInput view = apply_augmentation(graph, x, mask);
    result.views.push_back(predict(model, view.graph, view.features, queries));
  }
  result.mean = result.views.front();
  for (std::size_t v = 1; v < result.views.size(); ++v) result.mean += result.views[v];
  result.mean /= static_cast<double>(plan.view_count);
  return result;
}

double estimate_inconsistency(const GcnModel& model, const SparseGraph& graph,
                              const FeatureMatrix& x, const AugmentationPlan& plan,
                              const QuerySet& test_set) {
  const std::size_t n = test_set.size(model.task);
  if (n == 0) throw std::invalid_argument("estimate_inconsistency: empty test set");
  if (plan.is_identity()) return 0.0;
  const Predictions base = predict(model, graph, x, test_set);
  std::vector<std::uint8_t> flipped(n, 0);
  for (int v = 0; v < plan.view_count; ++v) {
    const MaskPair mask = sample_masks(plan, graph, x.cols(), v);
    const AugmentedInput view = apply_augmentation(graph, x, mask);
    const Predictions p = predict(model, view.graph, view.features, test_set);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Index>(i);
      if (hard_decision(p, row) != hard_decision(base, row)) flipped[i] = 1;
    }
  }
  const auto count = std::count(flipped.begin(), flipped.end(), std::uint8_t{1});
  return static_cast<double>(count) / static_cast<double>(n);
}

GpiEstimate estimate_gpi_constant(const GcnModel& model, const SparseGraph& graph,
                                  const FeatureMatrix& x, const AugmentationPlan& plan,
                                  int trials, const QuerySet& probe) {
  if (trials < 1) throw std::invalid_argument("estimate_gpi_constant: trials must be >= 1");
  AugmentationPlan stream_plan = plan;
  stream_plan.view_count = trials;
  stream_plan.validate();
  const Predictions base = predict(model, graph, x, probe);
  GpiEstimate est;
  for (int t = 0; t < trials; ++t) {
    const MaskPair mask = sample_masks(stream_plan, graph, x.cols(), t);
    const double eps = perturbation_magnitude(mask, graph.node_count(), x.cols());
    est.epsilons.push_back(eps);
    if (eps == 0.0) {
      ++est.skipped;
    } else {
      const AugmentedInput view = apply_augmentation(graph, x, mask);
      const Predictions p = predict(model, view.graph, view.features, probe);
      est.constant = std::max(est.constant, (p - base).squaredNorm() / eps);
    }
    est.running.push_back(est.constant);
  }
  return est;
}

}  // namespace cpl
