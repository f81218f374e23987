#include "cpl/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace cpl {

namespace {

std::vector<std::size_t> order_descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void check_sizes(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  const auto order = order_descending(scores);
  const std::size_t n = scores.size();
  // Midranks in ascending order: rank r (1-based) for position from the bottom.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::size_t group_pos = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      group_pos += labels[order[j]] ? 1 : 0;
      ++j;
    }
    // Descending positions i..j-1 map to ascending ranks n-j+1 .. n-i.
    const double midrank = (static_cast<double>(n - j + 1) + static_cast<double>(n - i)) / 2.0;
    positive_rank_sum += midrank * static_cast<double>(group_pos);
    positives += group_pos;
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("auc needs both classes");
  const double np = static_cast<double>(positives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  const std::size_t total_pos =
      static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
  if (total_pos == 0) throw std::invalid_argument("average_precision needs a positive");
  const auto order = order_descending(scores);
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::size_t group_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_pos += labels[order[j]] ? 1 : 0;
      ++j;
    }
    tp += group_pos;
    seen = j;
    if (group_pos > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * static_cast<double>(group_pos) / static_cast<double>(total_pos);
    }
    i = j;
  }
  return ap;
}

AccuracyAndError accuracy_and_error(std::span<const int> predicted, std::span<const int> truth,
                                    std::span<const Index> index) {
  if (index.empty()) throw std::invalid_argument("accuracy_and_error: empty index set");
  std::size_t correct = 0;
  for (Index i : index) correct += predicted[i] == truth[i] ? 1 : 0;
  AccuracyAndError r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(index.size());
  r.error = 1.0 - r.accuracy;
  return r;
}

}  // namespace cpl
