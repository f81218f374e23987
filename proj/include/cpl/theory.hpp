#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpl/pl_state.hpp"

namespace cpl {

struct ErrorBound {
  double value = 0.0;    // 2 (q + A), not clamped
  bool vacuous = false;  // value >= 1 carries no information about a 0-1 error

  friend bool operator==(const ErrorBound&, const ErrorBound&) = default;
};

ErrorBound error_bound(double q, double inconsistency);

// (1/n) sum (a - mean a)(b - mean b).
double population_covariance(std::span<const double> a, std::span<const double> b);

struct CovarianceDiagnostic {
  double covariance = 0.0;
  double beta = 0.0;
  double mean_indicator = 0.0;
  double expected_indicator = 0.0;
  double bound_rhs = 0.0;  // beta * cov + previous_loss

  bool indicator_mean_exact() const { return mean_indicator == expected_indicator; }
};

// ce and indicator range over the unobserved set Y_u before the update.
CovarianceDiagnostic covariance_diagnostic(std::span<const double> ce,
                                           std::span<const std::uint8_t> indicator,
                                           std::size_t observed_size, double previous_loss);

enum class CovarianceSource { ground_truth, pseudo_labels };

struct LossTrajectoryReport {
  static constexpr double kTolerance = 1e-6;

  // L(t+1) - (beta cov + L(t)), one entry per record; empty when the record
  // has no covariance of the requested kind.
  std::vector<std::optional<double>> slack;
  std::vector<int> violations;             // iterations where slack > tol
  std::vector<int> assumption_violations;  // fine-tune raised the loss
  std::vector<int> skipped;
  double max_slack = 0.0;

  bool holds() const { return violations.empty(); }
};

LossTrajectoryReport loss_trajectory_check(std::span<const IterationRecord> records,
                                           double tolerance = LossTrajectoryReport::kTolerance,
                                           CovarianceSource source = CovarianceSource::ground_truth);

// Exact split of the enlarged-set loss:
//   L(t+1) = beta Cov + (|Y_o| L_old + k mean_ce) / (|Y_o| + k)
// with Cov and mean_ce taken under the teacher's labels. Returns the absolute
// difference between the two sides.
double decomposition_residual(const IterationRecord& record);

}  // namespace cpl
