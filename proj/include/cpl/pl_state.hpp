#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cpl/random.hpp"

namespace cpl {

enum class Strategy { cautious, random, none };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view name);

// A committed pseudo label. `candidate` indexes the problem's candidate pool.
struct PseudoLabel {
  std::size_t candidate = 0;
  int label = 0;
  int iteration = 0;
  double confidence = 0.0;

  friend bool operator==(const PseudoLabel&, const PseudoLabel&) = default;
};

struct PlState {
  std::size_t initial_observed = 0;
  std::vector<PseudoLabel> pseudo;       // never relabeled or removed
  std::vector<std::size_t> unobserved;   // ascending candidate ids
  std::optional<double> threshold_confidence;  // running min of c_min
  int iteration = 0;

  std::size_t observed_size() const { return initial_observed + pseudo.size(); }
  void record_c_min(double c_min) {
    threshold_confidence = threshold_confidence ? std::min(*threshold_confidence, c_min) : c_min;
  }
  std::optional<double> q() const {
    if (!threshold_confidence) return std::nullopt;
    return 1.0 - *threshold_confidence;
  }
};

struct StrategySelection {
  std::vector<std::uint8_t> indicator;  // over the candidate list passed in
  std::vector<std::size_t> selected;    // positions in that list
  double c_min = 1.0;
  bool exhausted = false;               // k exceeded the list; everything selected
};

// k largest confidences, ties to the lower position. O(n log k).
StrategySelection select_top_k(std::span<const double> confidence, std::size_t k);

// k positions uniformly without replacement; c_min still tracks the lowest
// confidence among them.
StrategySelection select_random_k(std::span<const double> confidence, std::size_t k, Rng& rng);

struct IterationRecord {
  int iteration = 0;
  std::size_t observed_size = 0;    // |Y_o| before the update
  std::size_t unobserved_size = 0;  // |Y_u| before the update
  std::size_t selected = 0;
  std::optional<double> c_min;  // empty when nothing was selected
  std::optional<double> threshold_confidence;
  std::optional<double> q;
  double loss_previous = 0.0;  // L(t): teacher on Y_o(t)
  double loss_before = 0.0;    // L(t+1): same model on Y_o(t+1), before fine-tuning
  double loss_after = 0.0;     // after fine-tuning on Y_o(t+1)
  double loss_old_set = 0.0;   // same model as loss_before, restricted to Y_o(t)
  double beta = 0.0;           // |Y_u| / (|Y_o| + k)
  std::optional<double> covariance;  // Cov[ce(g, Y), T] over Y_u; needs held-out truth
  double covariance_pseudo = 0.0;    // same with the teacher's labels in place of Y
  double pool_mean_ce = 0.0;         // mean ce over Y_u, teacher's labels
  double mean_indicator = 0.0;
  double expected_indicator = 0.0;  // k / |Y_u|
  std::optional<double> pl_error_rate;
  double inconsistency = 0.0;
  double val_metric = 0.0;
  double test_metric = 0.0;
  std::vector<double> view_epsilons;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

}  // namespace cpl
