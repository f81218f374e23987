#include "cpl/engine.hpp"

#include <cmath>
#include <numeric>

#include "cpl/errors.hpp"

namespace cpl {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

AugmentationPlan selection_plan(const RunConfig& config, int iteration) {
  AugmentationPlan plan = config.augmentation;
  plan.base_seed = derive_seed(config.seed, stream::kAugment,
                               derive_seed(config.augmentation.base_seed, static_cast<std::uint64_t>(iteration)));
  return plan;
}

// Fixed masks for A so that values are comparable across iterations.
AugmentationPlan inconsistency_plan(const RunConfig& config) {
  AugmentationPlan plan = config.augmentation;
  plan.base_seed = derive_seed(config.seed, stream::kInconsistency, config.augmentation.base_seed);
  return plan;
}

}  // namespace

GcnModel init_model(const PlProblem& problem, const ModelConfig& config, std::uint64_t seed) {
  GcnModel model;
  model.task = problem.task();
  model.params = init_gcn<double>(problem.features().cols(), config.hidden_dim,
                                  problem.output_dim(config.embedding_dim),
                                  derive_seed(seed, stream::kModelInit));
  return model;
}

std::vector<double> train_epochs(const PlProblem& problem, GcnModel& model,
                                 const SparseGraph& message_graph,
                                 std::span<const PseudoLabel> pseudo, int epochs,
                                 const TrainingConfig& training, Rng& rng) {
  std::vector<double> losses;
  if (epochs <= 0) return losses;
  const auto adj = normalize_adjacency<double>(message_graph);
  auto state = AdamState<double>::fresh(model.params);
  losses.reserve(static_cast<std::size_t>(epochs));

  const bool select = training.select_on_validation && problem.has_validation();
  GcnParams<double> best = model.params;
  double best_val = select ? problem.validation_loss(model, message_graph) : 0.0;

  for (int e = 0; e < epochs; ++e) {
    const auto cache = gcn_forward(adj, problem.features(), model.params);
    const auto objective = problem.training_loss(cache.out, pseudo, message_graph, rng);
    if (!std::isfinite(objective.loss)) {
      throw NumericalError("training diverged at epoch " + std::to_string(e) +
                           " (non-finite loss)");
    }
    losses.push_back(objective.loss);
    adam_step(model.params, gcn_backward(cache, adj, model.params, objective.grad_out), state,
              training.adam);
    if (select) {
      const double val = problem.validation_loss(model, message_graph);
      if (val < best_val) {
        best_val = val;
        best = model.params;
      }
    }
  }
  if (select) model.params = std::move(best);
  return losses;
}

Pretrained pretrain_teacher(const PlProblem& problem, const RunConfig& config) {
  if (problem.initial_observed_count() == 0) throw DataError("pretraining needs observed labels");
  Pretrained out{init_model(problem, config.model, config.seed), {}};
  Rng rng(derive_seed(config.seed, stream::kNegatives));
  out.losses = train_epochs(problem, out.model, problem.message_graph({}), {},
                            config.training.pretrain_epochs, config.training, rng);
  return out;
}

double observed_loss(const PlProblem& problem, const GcnModel& model,
                     const SparseGraph& message_graph, std::span<const PseudoLabel> pseudo) {
  return mean_of(problem.observed_cross_entropy(model, message_graph, pseudo));
}

IterationRecord pl_iteration(const PlProblem& problem, PlState& state, GcnModel& model,
                             const RunConfig& config, double previous_loss, Rng& selection_rng,
                             Rng& train_rng) {
  if (state.unobserved.empty()) throw std::logic_error("pl_iteration: no candidates left");
  const FeatureMatrix& x = problem.features();
  IterationRecord rec;
  rec.iteration = state.iteration;
  rec.observed_size = state.observed_size();
  rec.unobserved_size = state.unobserved.size();
  rec.loss_previous = previous_loss;

  // Teacher: averaged multi-view confidence over the unobserved set.
  const SparseGraph graph_now = problem.message_graph(state.pseudo);
  const QuerySet queries = problem.candidate_queries(state.unobserved);
  const auto views = multi_view_confidence(model, graph_now, x, selection_plan(config, state.iteration), queries);
  rec.view_epsilons = views.epsilons;
  const std::size_t pool = state.unobserved.size();
  std::vector<double> confidence(pool);
  std::vector<int> labels(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    confidence[i] = problem.confidence(views.mean, static_cast<Index>(i));
    labels[i] = problem.pseudo_label(views.mean, static_cast<Index>(i));
  }

  const StrategySelection selection =
      config.pl.strategy == Strategy::random
          ? select_random_k(confidence, config.pl.k, selection_rng)
          : select_top_k(confidence, config.pl.k);
  rec.selected = selection.selected.size();

  std::vector<PseudoLabel> enlarged = state.pseudo;
  std::size_t wrong = 0;
  std::size_t judged = 0;
  for (std::size_t pos : selection.selected) {
    const std::size_t candidate = state.unobserved[pos];
    enlarged.push_back({candidate, labels[pos], state.iteration, confidence[pos]});
    if (auto truth = problem.ground_truth(candidate)) {
      ++judged;
      wrong += *truth != labels[pos] ? 1 : 0;
    }
  }
  if (judged > 0) rec.pl_error_rate = static_cast<double>(wrong) / static_cast<double>(judged);

  if (!selection.selected.empty()) {
    rec.c_min = selection.c_min;
    state.record_c_min(selection.c_min);
  }
  rec.threshold_confidence = state.threshold_confidence;
  rec.q = state.q();

  // Current student (still equal to the teacher) on the enlarged label set,
  // scored on the graph the teacher selected from.
  const Predictions student = predict(model, graph_now, x, queries);
  std::vector<double> ce(pool);
  std::vector<double> ce_truth;
  bool truth_complete = true;
  for (std::size_t i = 0; i < pool; ++i) {
    const auto row = static_cast<Index>(i);
    ce[i] = sample_cross_entropy(probability_of(student, row, labels[i]));
    if (!truth_complete) continue;
    if (auto truth = problem.ground_truth(state.unobserved[i])) {
      ce_truth.push_back(sample_cross_entropy(probability_of(student, row, *truth)));
    } else {
      truth_complete = false;
    }
  }
  const auto diag = covariance_diagnostic(ce, selection.indicator, rec.observed_size, previous_loss);
  rec.beta = diag.beta;
  rec.covariance_pseudo = diag.covariance;
  rec.mean_indicator = diag.mean_indicator;
  rec.expected_indicator = diag.expected_indicator;
  rec.pool_mean_ce = mean_of(ce);
  if (truth_complete) {
    rec.covariance =
        covariance_diagnostic(ce_truth, selection.indicator, rec.observed_size, previous_loss).covariance;
  }
  const std::vector<double> ce_next = problem.observed_cross_entropy(model, graph_now, enlarged);
  rec.loss_before = mean_of(ce_next);
  rec.loss_old_set = std::accumulate(ce_next.begin(), ce_next.begin() + static_cast<std::ptrdiff_t>(rec.observed_size), 0.0) /
                     static_cast<double>(rec.observed_size);

  // Commit the set update.
  std::vector<std::uint8_t> taken(pool, 0);
  for (std::size_t pos : selection.selected) taken[pos] = 1;
  std::vector<std::size_t> remaining;
  remaining.reserve(pool - selection.selected.size());
  for (std::size_t i = 0; i < pool; ++i)
    if (!taken[i]) remaining.push_back(state.unobserved[i]);
  state.unobserved = std::move(remaining);
  state.pseudo = std::move(enlarged);

  // Fine-tune the student, which then becomes the next teacher. For links the
  // new pseudo edges join the message-passing input from here on.
  const SparseGraph graph_next = problem.message_graph(state.pseudo);
  if (config.training.retrain_from_scratch) model = init_model(problem, config.model, config.seed);
  train_epochs(problem, model, graph_next, state.pseudo, config.training.finetune_epochs,
               config.training, train_rng);
  rec.loss_after = observed_loss(problem, model, graph_next, state.pseudo);

  const EvalMetrics metrics = problem.evaluate(model, graph_next);
  rec.val_metric = metrics.val_metric;
  rec.test_metric = metrics.test_metric;
  if (config.pl.track_inconsistency) {
    rec.inconsistency =
        estimate_inconsistency(model, graph_next, x, inconsistency_plan(config), problem.test_queries());
  }
  ++state.iteration;
  return rec;
}

RunResult run_pseudo_labeling(const PlProblem& problem, const RunConfig& config) {
  config.augmentation.validate();
  if (config.pl.cap < problem.initial_observed_count() && config.pl.strategy != Strategy::none) {
    throw ConfigError("cap K is smaller than the observed set");
  }
  RunResult result;
  result.strategy = config.pl.strategy;
  result.seed = config.seed;

  Pretrained teacher = pretrain_teacher(problem, config);
  result.pretrain_losses = std::move(teacher.losses);
  GcnModel model = std::move(teacher.model);
  const FeatureMatrix& x = problem.features();

  PlState state;
  state.initial_observed = problem.initial_observed_count();
  state.unobserved.resize(problem.candidate_count());
  std::iota(state.unobserved.begin(), state.unobserved.end(), std::size_t{0});

  const SparseGraph graph0 = problem.message_graph({});
  result.raw_metrics = problem.evaluate(model, graph0);
  result.initial_inconsistency =
      estimate_inconsistency(model, graph0, x, inconsistency_plan(config), problem.test_queries());

  Rng selection_rng(derive_seed(config.seed, stream::kSelection));
  Rng train_rng(derive_seed(config.seed, stream::kNegatives, 1));
  double previous_loss = observed_loss(problem, model, graph0, {});
  while (config.pl.strategy != Strategy::none && !state.unobserved.empty() &&
         state.observed_size() + config.pl.k <= config.pl.cap &&
         state.iteration < config.pl.max_iterations) {
    result.records.push_back(
        pl_iteration(problem, state, model, config, previous_loss, selection_rng, train_rng));
    previous_loss = result.records.back().loss_after;
  }

  const SparseGraph final_graph = problem.message_graph(state.pseudo);
  result.final_metrics = problem.evaluate(model, final_graph);
  result.inconsistency =
      estimate_inconsistency(model, final_graph, x, inconsistency_plan(config), problem.test_queries());
  result.q = state.q();
  if (result.q) result.bound = error_bound(*result.q, result.inconsistency);
  result.extra_edges = problem.extra_edges(state.pseudo);
  result.pseudo_labels = std::move(state.pseudo);
  result.model = std::move(model);
  return result;
}

RunResult run_cpl(const PlProblem& problem, RunConfig config) {
  config.pl.strategy = Strategy::cautious;
  return run_pseudo_labeling(problem, config);
}

RunResult run_random_pl(const PlProblem& problem, RunConfig config) {
  config.pl.strategy = Strategy::random;
  return run_pseudo_labeling(problem, config);
}

}  // namespace cpl
