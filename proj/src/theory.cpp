#include "cpl/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cpl {

ErrorBound error_bound(double q, double inconsistency) {
  if (!(q >= 0.0 && q <= 1.0) || !(inconsistency >= 0.0 && inconsistency <= 1.0)) {
    throw std::invalid_argument("error_bound: q and A must lie in [0,1]");
  }
  const double value = 2.0 * (q + inconsistency);
  return {value, value >= 1.0};
}

double population_covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("population_covariance: bad sizes");
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - mean_a) * (b[i] - mean_b);
  return total / n;
}

CovarianceDiagnostic covariance_diagnostic(std::span<const double> ce,
                                           std::span<const std::uint8_t> indicator,
                                           std::size_t observed_size, double previous_loss) {
  if (ce.size() != indicator.size() || ce.empty()) {
    throw std::invalid_argument("covariance_diagnostic: bad sizes");
  }
  std::vector<double> t(indicator.begin(), indicator.end());
  const std::size_t k = static_cast<std::size_t>(std::count(indicator.begin(), indicator.end(), 1));
  CovarianceDiagnostic d;
  d.covariance = population_covariance(ce, t);
  d.beta = static_cast<double>(ce.size()) / static_cast<double>(observed_size + k);
  d.mean_indicator = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
  d.expected_indicator = static_cast<double>(k) / static_cast<double>(ce.size());
  d.bound_rhs = d.beta * d.covariance + previous_loss;
  return d;
}

LossTrajectoryReport loss_trajectory_check(std::span<const IterationRecord> records,
                                           double tolerance, CovarianceSource source) {
  LossTrajectoryReport report;
  report.max_slack = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (r.loss_after > r.loss_before + tolerance) report.assumption_violations.push_back(r.iteration);
    const std::optional<double> cov =
        source == CovarianceSource::ground_truth ? r.covariance : std::optional<double>(r.covariance_pseudo);
    if (!cov) {
      report.slack.push_back(std::nullopt);
      report.skipped.push_back(r.iteration);
      continue;
    }
    const double slack = r.loss_before - (r.beta * *cov + r.loss_previous);
    report.slack.push_back(slack);
    report.max_slack = std::max(report.max_slack, slack);
    if (slack > tolerance) report.violations.push_back(r.iteration);
  }
  if (report.skipped.size() == records.size()) report.max_slack = 0.0;
  return report;
}

double decomposition_residual(const IterationRecord& r) {
  const double n_o = static_cast<double>(r.observed_size);
  const double k = static_cast<double>(r.selected);
  const double rhs = r.beta * r.covariance_pseudo + (n_o * r.loss_old_set + k * r.pool_mean_ce) / (n_o + k);
  return std::abs(r.loss_before - rhs);
}

}  // namespace cpl
