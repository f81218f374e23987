#pragma once

#include <cstdint>
#include <vector>

#include "cpl/graph.hpp"
#include "cpl/model.hpp"

namespace cpl {

// V views of random feature masking and symmetric edge dropping. Setting a rate
// to zero disables that perturbation, so the single-augmentation variants
// (feature view, structure view, node view) are special cases of one plan.
struct AugmentationPlan {
  int view_count = 5;
  double feature_drop_rate = 0.05;
  double edge_drop_rate = 0.05;
  // Dropping a node zeroes its feature row and removes its incident edges.
  double node_drop_rate = 0.0;
  std::uint64_t base_seed = 0;

  void validate() const;
  bool is_identity() const {
    return feature_drop_rate == 0.0 && edge_drop_rate == 0.0 && node_drop_rate == 0.0;
  }
};

// M_x as N x F keep flags (row-major) and M_a as keep flags over the stored
// undirected edges of the source graph (SparseGraph::edges() order).
struct MaskPair {
  Index rows = 0;
  Index cols = 0;
  std::vector<std::uint8_t> feature_keep;
  std::vector<std::uint8_t> edge_keep;
  std::uint64_t seed = 0;

  std::size_t dropped_features() const;
  std::size_t dropped_edges() const;
};

struct AugmentedInput {
  SparseGraph graph;
  FeatureMatrix features;
};

MaskPair sample_masks(const AugmentationPlan& plan, const SparseGraph& graph, Index feature_dim,
                      int view);

// |1 - M_x|^2 / (N F) + |1 - M_a|^2 / N^2; a dropped undirected edge counts as
// two adjacency entries and entries over non-edges are never dropped.
double perturbation_magnitude(const MaskPair& mask, Index n, Index f);

AugmentedInput apply_augmentation(const SparseGraph& graph, const FeatureMatrix& x,
                                  const MaskPair& mask);

struct MultiViewConfidence {
  Predictions mean;
  std::vector<Predictions> views;
  std::vector<double> epsilons;
};

// Mean over views, accumulated in view order.
MultiViewConfidence multi_view_confidence(const GcnModel& model, const SparseGraph& graph,
                                          const FeatureMatrix& x, const AugmentationPlan& plan,
                                          const QuerySet& queries);

// Fraction of queries whose hard decision flips under at least one view.
double estimate_inconsistency(const GcnModel& model, const SparseGraph& graph,
                              const FeatureMatrix& x, const AugmentationPlan& plan,
                              const QuerySet& test_set);

struct GpiEstimate {
  double constant = 0.0;        // running max of |g(G^) - g(G)|^2 / eps
  std::vector<double> running;  // value after each trial
  std::vector<double> epsilons;
  std::size_t skipped = 0;      // trials with eps == 0
};

GpiEstimate estimate_gpi_constant(const GcnModel& model, const SparseGraph& graph,
                                  const FeatureMatrix& x, const AugmentationPlan& plan,
                                  int trials, const QuerySet& probe);

}  // namespace cpl
