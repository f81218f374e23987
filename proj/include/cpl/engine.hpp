#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpl/adam.hpp"
#include "cpl/augment.hpp"
#include "cpl/model.hpp"
#include "cpl/pl_state.hpp"
#include "cpl/problem.hpp"
#include "cpl/theory.hpp"

namespace cpl {

struct ModelConfig {
  Index hidden_dim = 32;
  Index embedding_dim = 16;  // link head only; the class head uses M outputs
};

struct TrainingConfig {
  int pretrain_epochs = 200;
  int finetune_epochs = 50;
  AdamConfig adam;
  bool retrain_from_scratch = false;
  // Keep the parameters with the lowest validation cross-entropy seen during
  // each training phase (pretraining and every fine-tune), the phase's
  // starting point included. Ignored without a validation split.
  bool select_on_validation = true;
};

struct PlConfig {
  Strategy strategy = Strategy::cautious;
  std::size_t k = 20;          // per-iteration budget
  std::size_t cap = 200;       // K: |Y_o| never exceeds this
  int max_iterations = 100;
  bool track_inconsistency = true;  // per-iteration A on the test set
};

struct RunConfig {
  ModelConfig model;
  TrainingConfig training;
  AugmentationPlan augmentation;
  PlConfig pl;
  std::uint64_t seed = 0;
};

struct RunResult {
  Strategy strategy = Strategy::cautious;
  std::uint64_t seed = 0;
  GcnModel model;
  std::vector<Edge> extra_edges;
  std::vector<double> pretrain_losses;
  double initial_inconsistency = 0.0;  // pretrained teacher, before any PL
  EvalMetrics raw_metrics;             // pretrained teacher
  std::vector<IterationRecord> records;
  std::vector<PseudoLabel> pseudo_labels;
  EvalMetrics final_metrics;
  std::optional<double> q;  // undefined until something is pseudo-labeled
  double inconsistency = 0.0;
  std::optional<ErrorBound> bound;
};

GcnModel init_model(const PlProblem& problem, const ModelConfig& config, std::uint64_t seed);

// Full-graph Adam training on the observed set; returns the loss per epoch.
// Throws NumericalError on a non-finite loss.
std::vector<double> train_epochs(const PlProblem& problem, GcnModel& model,
                                 const SparseGraph& message_graph,
                                 std::span<const PseudoLabel> pseudo, int epochs,
                                 const TrainingConfig& training, Rng& rng);

struct Pretrained {
  GcnModel model;
  std::vector<double> losses;
};

Pretrained pretrain_teacher(const PlProblem& problem, const RunConfig& config);

// Mean observed-set cross-entropy, the loss tracked across iterations.
double observed_loss(const PlProblem& problem, const GcnModel& model,
                     const SparseGraph& message_graph, std::span<const PseudoLabel> pseudo);

// One pass of the loop: multi-view teacher confidence over Y_u, selection,
// set update, q update, fine-tuning. `model` is the teacher on entry and the
// fine-tuned student (next teacher) on exit.
IterationRecord pl_iteration(const PlProblem& problem, PlState& state, GcnModel& model,
                             const RunConfig& config, double previous_loss, Rng& selection_rng,
                             Rng& train_rng);

RunResult run_pseudo_labeling(const PlProblem& problem, const RunConfig& config);
RunResult run_cpl(const PlProblem& problem, RunConfig config);
RunResult run_random_pl(const PlProblem& problem, RunConfig config);

}  // namespace cpl
