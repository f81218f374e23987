#include "cpl/model.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cpl/errors.hpp"

namespace cpl {

using nlohmann::json;

std::string_view to_string(Task task) {
  return task == Task::node_classification ? "node_classification" : "link_prediction";
}

Task parse_task(std::string_view name) {
  if (name == "node_classification" || name == "node") return Task::node_classification;
  if (name == "link_prediction" || name == "link") return Task::link_prediction;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

Predictions predict_normalized(const GcnModel& model, const SparseMatrix<double>& adj,
                               const FeatureMatrix& x, const QuerySet& queries) {
  const auto cache = gcn_forward(adj, x, model.params);
  if (model.task == Task::node_classification) {
    const Matrix<double> probs = classify(cache.out);
    Predictions out(static_cast<Index>(queries.nodes.size()), probs.cols());
    for (std::size_t k = 0; k < queries.nodes.size(); ++k) {
      out.row(static_cast<Index>(k)) = probs.row(queries.nodes[k]);
    }
    return out;
  }
  return decode_links(cache.out, std::span<const Edge>(queries.pairs));
}

Predictions predict(const GcnModel& model, const SparseGraph& graph, const FeatureMatrix& x,
                    const QuerySet& queries) {
  return predict_normalized(model, normalize_adjacency<double>(graph), x, queries);
}

int hard_decision(const Predictions& predictions, Index row) {
  if (predictions.cols() == 1) return predictions(row, 0) >= 0.5 ? 1 : 0;
  Index best = 0;
  predictions.row(row).maxCoeff(&best);
  return static_cast<int>(best);
}

double probability_of(const Predictions& predictions, Index row, int label) {
  if (predictions.cols() == 1) return label ? predictions(row, 0) : 1.0 - predictions(row, 0);
  return predictions(row, label);
}

namespace {

json matrix_to_json(const Matrix<double>& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix<double> matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
    throw DataError("checkpoint matrix has inconsistent shape");
  }
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[static_cast<std::size_t>(i * cols + j2)];
  return m;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& checkpoint) {
  const auto& p = checkpoint.model.params;
  json edges = json::array();
  for (const Edge& e : checkpoint.extra_edges) edges.push_back({e.u, e.v});
  json j = {{"format", "cpl-gcn-checkpoint"},
            {"version", Checkpoint::kVersion},
            {"task", to_string(checkpoint.model.task)},
            {"init_seed", p.init_seed},
            {"w1", matrix_to_json(p.w1)},
            {"w2", matrix_to_json(p.w2)},
            {"extra_edges", edges}};
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "cpl-gcn-checkpoint") throw DataError("not a GCN checkpoint");
    if (j.at("version").get<int>() != Checkpoint::kVersion) {
      throw DataError("unsupported checkpoint version");
    }
    Checkpoint c;
    c.model.task = parse_task(j.at("task").get<std::string>());
    c.model.params.init_seed = j.at("init_seed").get<std::uint64_t>();
    c.model.params.w1 = matrix_from_json(j.at("w1"));
    c.model.params.w2 = matrix_from_json(j.at("w2"));
    if (c.model.params.w1.cols() != c.model.params.w2.rows()) {
      throw DataError("checkpoint layer shapes do not chain");
    }
    for (const auto& e : j.at("extra_edges")) {
      c.extra_edges.push_back(Edge::make(e.at(0).get<Index>(), e.at(1).get<Index>()));
    }
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << checkpoint_to_string(checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_string(buffer.str());
}

}  // namespace cpl
