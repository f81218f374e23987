#pragma once

#include <cstdint>
#include <span>

#include "cpl/graph.hpp"

namespace cpl {

// Mann-Whitney AUC: probability that a random positive outranks a random
// negative, ties counted one half. Throws std::invalid_argument unless both
// classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

// Step-wise average precision: sum over distinct score thresholds (descending)
// of precision times the recall increment. Tied scores form one threshold.
double average_precision(std::span<const double> scores, std::span<const int> labels);

struct AccuracyAndError {
  double accuracy = 0.0;
  double error = 0.0;  // 0-1 loss, always 1 - accuracy
};

AccuracyAndError accuracy_and_error(std::span<const int> predicted, std::span<const int> truth,
                                    std::span<const Index> index);

}  // namespace cpl
