#pragma once

#include <cmath>
#include <cstdint>

#include "cpl/errors.hpp"
#include "cpl/gcn.hpp"

namespace cpl {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  GcnGradients<Scalar> m;
  GcnGradients<Scalar> v;
  std::int64_t step = 0;

  static AdamState fresh(const GcnParams<Scalar>& p) {
    return {GcnGradients<Scalar>::zeros_like(p), GcnGradients<Scalar>::zeros_like(p), 0};
  }
};

namespace detail {
template <typename Scalar>
void adam_update(Matrix<Scalar>& x, const Matrix<Scalar>& g, Matrix<Scalar>& m,
                 Matrix<Scalar>& v, Scalar lr, Scalar b1, Scalar b2, Scalar eps,
                 Scalar m_corr, Scalar v_corr) {
  m = b1 * m + (Scalar(1) - b1) * g;
  v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
  x.array() -= lr * (m.array() / m_corr) / ((v.array() / v_corr).sqrt() + eps);
}
}  // namespace detail

// Bias-corrected Adam. Throws NumericalError on non-finite gradients before
// touching the parameters.
template <typename Scalar>
void adam_step(GcnParams<Scalar>& p, const GcnGradients<Scalar>& g, AdamState<Scalar>& s,
               const AdamConfig& config) {
  if (!g.all_finite()) throw NumericalError("non-finite gradient passed to adam_step");
  if (g.w1.rows() != p.w1.rows() || g.w1.cols() != p.w1.cols() ||
      g.w2.rows() != p.w2.rows() || g.w2.cols() != p.w2.cols()) {
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  }
  ++s.step;
  const auto lr = static_cast<Scalar>(config.learning_rate);
  const auto b1 = static_cast<Scalar>(config.beta1);
  const auto b2 = static_cast<Scalar>(config.beta2);
  const auto eps = static_cast<Scalar>(config.epsilon);
  const Scalar m_corr = Scalar(1) - std::pow(b1, static_cast<Scalar>(s.step));
  const Scalar v_corr = Scalar(1) - std::pow(b2, static_cast<Scalar>(s.step));
  detail::adam_update(p.w1, g.w1, s.m.w1, s.v.w1, lr, b1, b2, eps, m_corr, v_corr);
  detail::adam_update(p.w2, g.w2, s.m.w2, s.v.w2, lr, b1, b2, eps, m_corr, v_corr);
}

}  // namespace cpl
