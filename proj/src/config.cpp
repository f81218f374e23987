#include "cpl/config.hpp"

#include <fstream>
#include <set>

#include "cpl/errors.hpp"

namespace cpl {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were read so that typos in a
// config surface as errors instead of silently falling back to defaults.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), where_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key \"" + key + "\"");
    }
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return base / path;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  Section top(j, "config");
  top.read("schema_version", c.schema_version);
  require(c.schema_version == kConfigSchemaVersion,
          "config: unsupported schema_version " + std::to_string(c.schema_version));

  std::string task = "node_classification";
  top.read("task", task);
  try {
    c.task = parse_task(task);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config.task: ") + e.what());
  }

  require(top.has("dataset"), "config: missing dataset");
  {
    Section d = top.child("dataset");
    if (d.has("sbm")) {
      SbmSpec s;
      Section sb = d.child("sbm");
      sb.read("block_sizes", s.block_sizes);
      sb.read("p_in", s.p_in);
      sb.read("p_out", s.p_out);
      sb.read("feature_dim", s.feature_dim);
      sb.read("feature_signal", s.feature_signal);
      sb.read("feature_noise", s.feature_noise);
      sb.read("seed", s.seed);
      sb.finish();
      require(!s.block_sizes.empty(), "config.dataset.sbm: no blocks");
      for (Index b : s.block_sizes) require(b > 0, "config.dataset.sbm: block sizes must be positive");
      require(s.p_in >= 0 && s.p_in <= 1 && s.p_out >= 0 && s.p_out <= 1,
              "config.dataset.sbm: probabilities must lie in [0,1]");
      require(s.feature_dim > 0, "config.dataset.sbm: feature_dim must be positive");
      c.dataset.sbm = s;
    } else {
      std::string edges, features, labels;
      d.read("edge_list", edges);
      d.read("features", features);
      d.read("labels", labels);
      require(!edges.empty() && !features.empty(),
              "config.dataset: needs either sbm or edge_list + features");
      c.dataset.edge_list = resolve(base_dir, edges);
      c.dataset.features = resolve(base_dir, features);
      if (!labels.empty()) c.dataset.labels = resolve(base_dir, labels);
    }
    d.finish();
  }

  if (top.has("split")) {
    Section s = top.child("split");
    s.read("ratios", c.split.ratios);
    s.read("seed", c.split.seed);
    s.read("per_seed", c.split.per_seed);
    s.finish();
  }
  if (top.has("model")) {
    Section m = top.child("model");
    m.read("hidden_dim", c.run.model.hidden_dim);
    m.read("embedding_dim", c.run.model.embedding_dim);
    m.finish();
    require(c.run.model.hidden_dim > 0 && c.run.model.embedding_dim > 0,
            "config.model: dimensions must be positive");
  }
  if (top.has("training")) {
    Section t = top.child("training");
    t.read("pretrain_epochs", c.run.training.pretrain_epochs);
    t.read("finetune_epochs", c.run.training.finetune_epochs);
    t.read("learning_rate", c.run.training.adam.learning_rate);
    t.read("beta1", c.run.training.adam.beta1);
    t.read("beta2", c.run.training.adam.beta2);
    t.read("retrain_from_scratch", c.run.training.retrain_from_scratch);
    t.read("select_on_validation", c.run.training.select_on_validation);
    t.finish();
    require(c.run.training.pretrain_epochs >= 0 && c.run.training.finetune_epochs >= 0,
            "config.training: epochs must be non-negative");
    require(c.run.training.adam.learning_rate > 0, "config.training: learning_rate must be positive");
  }
  if (top.has("augmentation")) {
    Section a = top.child("augmentation");
    auto& plan = c.run.augmentation;
    a.read("view_count", plan.view_count);
    a.read("feature_drop_rate", plan.feature_drop_rate);
    a.read("edge_drop_rate", plan.edge_drop_rate);
    a.read("node_drop_rate", plan.node_drop_rate);
    a.read("base_seed", plan.base_seed);
    a.finish();
    plan.validate();
  }
  if (top.has("pl")) {
    Section p = top.child("pl");
    std::string strategy = std::string(to_string(c.run.pl.strategy));
    p.read("strategy", strategy);
    try {
      c.run.pl.strategy = parse_strategy(strategy);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.pl.strategy: ") + e.what());
    }
    p.read("k", c.run.pl.k);
    p.read("cap", c.run.pl.cap);
    p.read("max_iterations", c.run.pl.max_iterations);
    p.read("track_inconsistency", c.run.pl.track_inconsistency);
    p.read("candidate_pool_size", c.pool.sampled_pool_size);
    p.read("exhaustive_node_limit", c.pool.exhaustive_node_limit);
    p.read("pool_seed", c.pool.seed);
    p.finish();
    require(c.run.pl.max_iterations >= 0, "config.pl.max_iterations must be non-negative");
  }
  top.read("seeds", c.seeds);
  require(!c.seeds.empty(), "config.seeds: at least one seed");
  std::string out = c.output_dir.string();
  top.read("output_dir", out);
  c.output_dir = resolve(base_dir, out);
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["task"] = to_string(c.task);
  if (c.dataset.sbm) {
    const SbmSpec& s = *c.dataset.sbm;
    j["dataset"]["sbm"] = {{"block_sizes", s.block_sizes},
                           {"p_in", s.p_in},
                           {"p_out", s.p_out},
                           {"feature_dim", s.feature_dim},
                           {"feature_signal", s.feature_signal},
                           {"feature_noise", s.feature_noise},
                           {"seed", s.seed}};
  } else {
    j["dataset"] = {{"edge_list", c.dataset.edge_list.generic_string()},
                    {"features", c.dataset.features.generic_string()}};
    if (!c.dataset.labels.empty()) j["dataset"]["labels"] = c.dataset.labels.generic_string();
  }
  j["split"] = {{"ratios", c.split.ratios}, {"seed", c.split.seed}, {"per_seed", c.split.per_seed}};
  j["model"] = {{"hidden_dim", c.run.model.hidden_dim}, {"embedding_dim", c.run.model.embedding_dim}};
  j["training"] = {{"pretrain_epochs", c.run.training.pretrain_epochs},
                   {"finetune_epochs", c.run.training.finetune_epochs},
                   {"learning_rate", c.run.training.adam.learning_rate},
                   {"beta1", c.run.training.adam.beta1},
                   {"beta2", c.run.training.adam.beta2},
                   {"retrain_from_scratch", c.run.training.retrain_from_scratch},
                   {"select_on_validation", c.run.training.select_on_validation}};
  const auto& plan = c.run.augmentation;
  j["augmentation"] = {{"view_count", plan.view_count},
                       {"feature_drop_rate", plan.feature_drop_rate},
                       {"edge_drop_rate", plan.edge_drop_rate},
                       {"node_drop_rate", plan.node_drop_rate},
                       {"base_seed", plan.base_seed}};
  j["pl"] = {{"strategy", to_string(c.run.pl.strategy)},
             {"k", c.run.pl.k},
             {"cap", c.run.pl.cap},
             {"max_iterations", c.run.pl.max_iterations},
             {"track_inconsistency", c.run.pl.track_inconsistency},
             {"candidate_pool_size", c.pool.sampled_pool_size},
             {"exhaustive_node_limit", c.pool.exhaustive_node_limit},
             {"pool_seed", c.pool.seed}};
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir.generic_string();
  return j;
}

Dataset load_dataset(const ExperimentConfig& config) {
  Dataset d;
  if (config.dataset.sbm) {
    const SbmSpec& s = *config.dataset.sbm;
    SbmGraph sbm = generate_sbm(s.block_sizes, s.p_in, s.p_out, derive_seed(s.seed, stream::kDataset));
    d.features = class_gaussian_features(sbm.labels, s.feature_dim, s.feature_signal, s.feature_noise,
                                         derive_seed(s.seed, stream::kFeatures));
    d.graph = std::move(sbm.graph);
    d.labels = std::move(sbm.labels);
    return d;
  }
  d.graph = load_edge_list(config.dataset.edge_list).graph;
  d.features = load_features(config.dataset.features, d.graph.node_count());
  if (!config.dataset.labels.empty()) d.labels = load_labels(config.dataset.labels, d.graph.node_count());
  return d;
}

std::unique_ptr<PlProblem> make_problem(const ExperimentConfig& config, const Dataset& data,
                                        std::uint64_t run_seed) {
  const std::uint64_t split_seed = config.split.per_seed
                                       ? derive_seed(config.split.seed, stream::kSplit, run_seed)
                                       : derive_seed(config.split.seed, stream::kSplit);
  if (config.task == Task::node_classification) {
    if (!data.labels) throw DataError("node classification needs a labels file");
    return make_node_problem(data.graph, data.features, *data.labels,
                             split_nodes(*data.labels, config.split.ratios, split_seed));
  }
  LinkPoolOptions pool = config.pool;
  pool.seed = derive_seed(config.pool.seed, stream::kPool);
  return make_link_problem(data.graph, data.features,
                           split_edges(data.graph, config.split.ratios, split_seed), pool);
}

RunConfig run_config_for(const ExperimentConfig& config, std::uint64_t run_seed) {
  RunConfig r = config.run;
  r.seed = run_seed;
  return r;
}

}  // namespace cpl
