#include "cpl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "cpl/errors.hpp"
#include "cpl/random.hpp"

namespace cpl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return value;
}

// from_chars for double is available in GCC 11 but rejects a leading '+'.
std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  return parse_number<double>(s);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::size_t round_count(double ratio, std::size_t total) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));
}

void check_ratios(const SplitRatios& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("split ratios must lie in [0,1]");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
}

}  // namespace

SparseGraph::SparseGraph(Index node_count)
    : node_count_(node_count), row_offsets_(static_cast<std::size_t>(node_count) + 1, 0) {}

SparseGraph SparseGraph::from_edges(Index node_count, std::span<const Edge> edges) {
  if (node_count < 0) throw DataError("negative node count");
  std::vector<std::pair<Index, Index>> arcs;
  arcs.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= node_count || e.v >= node_count) {
      throw DataError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                      ") outside [0," + std::to_string(node_count) + ")");
    }
    if (e.u == e.v) continue;
    arcs.emplace_back(e.u, e.v);
    arcs.emplace_back(e.v, e.u);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  SparseGraph g(node_count);
  g.col_indices_.reserve(arcs.size());
  for (const auto& [src, dst] : arcs) {
    ++g.row_offsets_[src + 1];
    g.col_indices_.push_back(dst);
  }
  std::partial_sum(g.row_offsets_.begin(), g.row_offsets_.end(), g.row_offsets_.begin());
  return g;
}

bool SparseGraph::has_edge(Index i, Index j) const {
  const auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), j);
}

std::vector<Edge> SparseGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (Index i = 0; i < node_count_; ++i) {
    for (Index j : neighbors(i)) {
      if (i < j) out.push_back({i, j});
    }
  }
  return out;
}

EdgeListFile load_edge_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::optional<Index> declared_n;
  std::vector<Edge> edges;
  std::size_t self_loops = 0;
  Index max_id = -1;
  bool seen_content = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto tokens = split_ws(view);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!seen_content && tokens.size() == 2 && tokens[0] == "N") {
      auto n = parse_number<Index>(tokens[1]);
      if (!n || *n < 0) throw DataError(where + ": bad node-count header");
      declared_n = *n;
      seen_content = true;
      continue;
    }
    seen_content = true;
    if (tokens.size() != 2) throw DataError(where + ": expected two node ids");
    auto a = parse_number<Index>(tokens[0]);
    auto b = parse_number<Index>(tokens[1]);
    if (!a || !b || *a < 0 || *b < 0) throw DataError(where + ": node ids must be non-negative integers");
    if (declared_n && (*a >= *declared_n || *b >= *declared_n)) {
      throw DataError(where + ": node id exceeds declared N=" + std::to_string(*declared_n));
    }
    if (*a == *b) {
      ++self_loops;
      continue;
    }
    max_id = std::max({max_id, *a, *b});
    edges.push_back(Edge::make(*a, *b));
  }
  const Index n = declared_n.value_or(max_id + 1);
  return {SparseGraph::from_edges(n, edges), self_loops};
}

void write_edge_list(const std::filesystem::path& path, const SparseGraph& graph) {
  auto out = open_output(path);
  out << "N " << graph.node_count() << '\n';
  for (const Edge& e : graph.edges()) out << e.u << ' ' << e.v << '\n';
}

FeatureMatrix load_features(const std::filesystem::path& path, Index n) {
  auto in = open_input(path);
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++rows;
    Index count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const auto cell = rest.substr(0, comma);
      auto v = parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        throw DataError(path.string() + ": row " + std::to_string(rows) +
                        ": non-numeric cell '" + std::string(trim(cell)) + "'");
      }
      values.push_back(*v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (cols < 0) cols = count;
    if (count != cols) {
      throw DataError(path.string() + ": row " + std::to_string(rows) + " has " +
                      std::to_string(count) + " columns, expected " + std::to_string(cols));
    }
  }
  if (rows != n) {
    throw DataError(path.string() + ": " + std::to_string(rows) + " rows, expected " +
                    std::to_string(n));
  }
  if (rows == 0) return FeatureMatrix(0, 0);
  using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return FeatureMatrix(Eigen::Map<const RowMajorMatrix>(values.data(), rows, cols));
}

void write_features(const std::filesystem::path& path, const FeatureMatrix& x) {
  auto out = open_output(path);
  out.precision(17);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      out << x(i, j);
    }
    out << '\n';
  }
}

NodeLabels load_labels(const std::filesystem::path& path, Index n) {
  auto in = open_input(path);
  NodeLabels result;
  result.labels.assign(static_cast<std::size_t>(n), NodeLabels::kUnlabeled);
  std::string line;
  std::size_t line_no = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto comma = view.find(',');
    if (comma == std::string_view::npos) throw DataError(where + ": expected node_id,label");
    auto node = parse_number<Index>(view.substr(0, comma));
    auto label = parse_number<int>(view.substr(comma + 1));
    if (!node || !label) {
      if (line_no == 1) continue;  // header row
      throw DataError(where + ": expected integer node_id,label");
    }
    if (*node < 0 || *node >= n) throw DataError(where + ": node id out of range");
    if (*label < 0) throw DataError(where + ": negative label");
    result.labels[*node] = *label;
    max_label = std::max(max_label, *label);
  }
  result.class_count = max_label + 1;
  return result;
}

void write_labels(const std::filesystem::path& path, const NodeLabels& labels) {
  auto out = open_output(path);
  out << "node_id,label\n";
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels.is_labeled(i)) out << i << ',' << labels.labels[i] << '\n';
  }
}

SbmGraph generate_sbm(std::span<const Index> block_sizes, double p_in, double p_out,
                      std::uint64_t seed) {
  if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
    throw ConfigError("SBM probabilities must lie in [0,1]");
  }
  if (block_sizes.empty()) throw ConfigError("SBM needs at least one block");
  NodeLabels labels;
  labels.class_count = static_cast<int>(block_sizes.size());
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    if (block_sizes[b] <= 0) throw ConfigError("SBM block sizes must be positive");
    labels.labels.insert(labels.labels.end(), static_cast<std::size_t>(block_sizes[b]),
                         static_cast<int>(b));
  }
  const Index n = labels.size();
  Rng rng(seed);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double p = labels.labels[i] == labels.labels[j] ? p_in : p_out;
      if (uniform01(rng) < p) edges.push_back({i, j});
    }
  }
  return {SparseGraph::from_edges(n, edges), std::move(labels)};
}

FeatureMatrix class_gaussian_features(const NodeLabels& labels, Index dim, double signal,
                                      double noise, std::uint64_t seed) {
  if (dim <= 0) throw ConfigError("feature dimension must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int classes = std::max(labels.class_count, 1);
  Matrix<double> means(classes, dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Index c = 0; c < classes; ++c)
    for (Index j = 0; j < dim; ++j) means(c, j) = normal(rng) * scale;

  FeatureMatrix x(labels.size(), dim);
  for (Index i = 0; i < labels.size(); ++i) {
    for (Index j = 0; j < dim; ++j) {
      const double mean = labels.is_labeled(i) ? means(labels.labels[i], j) : 0.0;
      x(i, j) = signal * mean + noise * normal(rng) * scale;
    }
  }
  return x;
}

EdgeSplit split_edges(const SparseGraph& graph, const SplitRatios& ratios,
                      std::uint64_t seed) {
  check_ratios(ratios);
  EdgeSplit split;
  split.split_seed = seed;
  auto edges = graph.edges();
  const std::size_t m = edges.size();
  const std::size_t n_train = round_count(ratios[0], m);
  const std::size_t n_val = std::min(round_count(ratios[1], m), m - std::min(n_train, m));
  if (n_train > m) throw DataError("graph too small for requested edge split");
  const std::size_t n_test = m - n_train - n_val;
  const std::array<std::size_t, 3> sizes{n_train, n_val, n_test};
  constexpr std::array<const char*, 3> names{"train", "validation", "test"};
  for (std::size_t p = 0; p < 3; ++p) {
    if (sizes[p] > 0) continue;
    if (ratios[p] > 0.0) {
      throw DataError(std::string("graph too small for requested edge split: empty ") +
                      names[p] + " part");
    }
    split.warnings.push_back(std::string("empty ") + names[p] + " edge set");
  }

  Rng rng(seed);
  std::shuffle(edges.begin(), edges.end(), rng);
  split.train_pos.assign(edges.begin(), edges.begin() + n_train);
  split.val_pos.assign(edges.begin() + n_train, edges.begin() + n_train + n_val);
  split.test_pos.assign(edges.begin() + n_train + n_val, edges.end());

  const Index n = graph.node_count();
  const std::size_t total_pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
  const std::size_t non_edges = total_pairs - m;
  const std::size_t needed = n_val + n_test;
  if (needed > non_edges) throw DataError("not enough non-edges for negative sampling");

  std::vector<Edge> negatives;
  negatives.reserve(needed);
  if (needed * 2 > non_edges) {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (!graph.has_edge(i, j)) negatives.push_back({i, j});
    std::shuffle(negatives.begin(), negatives.end(), rng);
    negatives.resize(needed);
  } else {
    std::unordered_set<std::uint64_t> taken;
    while (negatives.size() < needed) {
      const Index a = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
      const Index b = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
      if (a == b || graph.has_edge(a, b)) continue;
      const Edge e = Edge::make(a, b);
      if (!taken.insert(static_cast<std::uint64_t>(e.u) * n + e.v).second) continue;
      negatives.push_back(e);
    }
  }
  split.val_neg.assign(negatives.begin(), negatives.begin() + n_val);
  split.test_neg.assign(negatives.begin() + n_val, negatives.end());
  return split;
}

NodeSplit split_nodes(const NodeLabels& labels, const SplitRatios& ratios,
                      std::uint64_t seed) {
  check_ratios(ratios);
  if (ratios[0] <= 0.0) throw DataError("node split has an empty training set");
  const int classes = labels.class_count;
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(classes));
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels.is_labeled(i)) members[labels.labels[i]].push_back(i);
  }
  std::size_t labeled = 0;
  std::size_t active_parts = 0;
  for (double r : ratios) active_parts += r > 0.0 ? 1 : 0;
  for (int c = 0; c < classes; ++c) {
    if (members[c].size() < active_parts) {
      throw DataError("class " + std::to_string(c) + " has fewer nodes than split parts");
    }
    labeled += members[c].size();
  }

  // Global part sizes, apportioned to classes by largest remainder (ties to the
  // lower class id).
  std::array<std::vector<std::size_t>, 3> per_class;
  for (std::size_t p = 0; p < 2; ++p) {
    const std::size_t total = round_count(ratios[p], labeled);
    auto& alloc = per_class[p];
    alloc.assign(static_cast<std::size_t>(classes), 0);
    std::vector<std::pair<double, int>> remainders;
    std::size_t assigned = 0;
    for (int c = 0; c < classes; ++c) {
      const double quota = ratios[p] * static_cast<double>(members[c].size());
      alloc[c] = static_cast<std::size_t>(std::floor(quota));
      assigned += alloc[c];
      remainders.emplace_back(-(quota - std::floor(quota)), c);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r, ++assigned) {
      ++alloc[remainders[r].second];
    }
  }

  NodeSplit split;
  Rng rng(seed);
  for (int c = 0; c < classes; ++c) {
    auto nodes = members[c];
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const std::size_t n_train = per_class[0][c];
    const std::size_t n_val = std::min(per_class[1][c], nodes.size() - n_train);
    if (n_train == 0) {
      throw DataError("class " + std::to_string(c) + " receives no training nodes");
    }
    split.train_idx.insert(split.train_idx.end(), nodes.begin(), nodes.begin() + n_train);
    split.val_idx.insert(split.val_idx.end(), nodes.begin() + n_train,
                         nodes.begin() + n_train + n_val);
    split.test_idx.insert(split.test_idx.end(), nodes.begin() + n_train + n_val, nodes.end());
  }
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.val_idx.begin(), split.val_idx.end());
  std::sort(split.test_idx.begin(), split.test_idx.end());
  return split;
}

}  // namespace cpl
