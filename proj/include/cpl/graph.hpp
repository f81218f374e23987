#pragma once

#include <array>
#include <compare>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace cpl {

using Index = std::int64_t;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

// Dense N x F node features.
using FeatureMatrix = Matrix<double>;

// Undirected edge, normalized so that u < v.
struct Edge {
  Index u = 0;
  Index v = 0;

  static Edge make(Index a, Index b) { return a < b ? Edge{a, b} : Edge{b, a}; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Symmetric CSR adjacency without self-loops.
class SparseGraph {
 public:
  SparseGraph() = default;
  explicit SparseGraph(Index node_count);

  // Symmetrizes, deduplicates and drops self-loops. Throws DataError on ids
  // outside [0, node_count).
  static SparseGraph from_edges(Index node_count, std::span<const Edge> edges);

  Index node_count() const { return node_count_; }
  std::size_t edge_count() const { return col_indices_.size() / 2; }
  Index degree(Index i) const { return row_offsets_[i + 1] - row_offsets_[i]; }
  std::span<const Index> neighbors(Index i) const {
    return {col_indices_.data() + row_offsets_[i],
            static_cast<std::size_t>(degree(i))};
  }
  bool has_edge(Index i, Index j) const;

  // Each undirected edge once, u < v, in CSR order.
  std::vector<Edge> edges() const;

  const std::vector<Index>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_indices() const { return col_indices_; }
  static constexpr bool directed() { return false; }

  friend bool operator==(const SparseGraph&, const SparseGraph&) = default;

 private:
  Index node_count_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
};

struct NodeLabels {
  static constexpr int kUnlabeled = -1;

  std::vector<int> labels;
  int class_count = 0;

  bool is_labeled(Index i) const { return labels[i] != kUnlabeled; }
  Index size() const { return static_cast<Index>(labels.size()); }
};

struct EdgeSplit {
  std::vector<Edge> train_pos;
  std::vector<Edge> val_pos;
  std::vector<Edge> test_pos;
  std::vector<Edge> val_neg;
  std::vector<Edge> test_neg;
  std::uint64_t split_seed = 0;
  std::vector<std::string> warnings;
};

struct NodeSplit {
  std::vector<Index> train_idx;
  std::vector<Index> val_idx;
  std::vector<Index> test_idx;
};

using SplitRatios = std::array<double, 3>;

struct EdgeListFile {
  SparseGraph graph;
  std::size_t self_loops_dropped = 0;
};

struct SbmGraph {
  SparseGraph graph;
  NodeLabels labels;
};

// Text edge list: optional "N <int>" header, "#" comments, one "src dst" per line.
EdgeListFile load_edge_list(const std::filesystem::path& path);
void write_edge_list(const std::filesystem::path& path, const SparseGraph& graph);

// Headerless CSV of floats, n rows.
FeatureMatrix load_features(const std::filesystem::path& path, Index n);
void write_features(const std::filesystem::path& path, const FeatureMatrix& x);

// CSV "node_id,label"; nodes missing from the file stay unlabeled.
NodeLabels load_labels(const std::filesystem::path& path, Index n);
void write_labels(const std::filesystem::path& path, const NodeLabels& labels);

SbmGraph generate_sbm(std::span<const Index> block_sizes, double p_in, double p_out,
                      std::uint64_t seed);

// Gaussian class-mean features: x_i = signal * mu_{y_i} + noise * N(0, I), with
// mu_c drawn from N(0, I / dim).
FeatureMatrix class_gaussian_features(const NodeLabels& labels, Index dim, double signal,
                                      double noise, std::uint64_t seed);

EdgeSplit split_edges(const SparseGraph& graph, const SplitRatios& ratios,
                      std::uint64_t seed);
NodeSplit split_nodes(const NodeLabels& labels, const SplitRatios& ratios,
                      std::uint64_t seed);

// D~^{-1/2} (A + I) D~^{-1/2} with d~ = degree + 1.
template <typename Scalar = double>
SparseMatrix<Scalar> normalize_adjacency(const SparseGraph& g) {
  const Index n = g.node_count();
  const auto weight = [&](Index i, Index j) {
    return Scalar(1) / std::sqrt(static_cast<Scalar>(g.degree(i) + 1) * static_cast<Scalar>(g.degree(j) + 1));
  };

  SparseMatrix<Scalar> a(n, n);
  Eigen::VectorXi row_nnz(n);
  for (Index i = 0; i < n; ++i) row_nnz[i] = static_cast<int>(g.degree(i) + 1);
  a.reserve(row_nnz);
  for (Index i = 0; i < n; ++i) {
    bool diagonal_done = false;
    for (Index j : g.neighbors(i)) {
      if (!diagonal_done && j > i) {
        a.insert(i, i) = weight(i, i);
        diagonal_done = true;
      }
      a.insert(i, j) = weight(i, j);
    }
    if (!diagonal_done) a.insert(i, i) = weight(i, i);
  }
  a.makeCompressed();
  return a;
}

}  // namespace cpl
