#pragma once

// Two-layer GCN  out = A * relu(A * X * W1) * W2  with hand-derived gradients,
// the two prediction heads (row softmax, inner-product link decoder) and their
// cross-entropy losses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include "cpl/errors.hpp"
#include "cpl/graph.hpp"
#include "cpl/random.hpp"

namespace cpl {

template <typename Scalar>
struct GcnParams {
  Matrix<Scalar> w1;  // F x H
  Matrix<Scalar> w2;  // H x O
  std::uint64_t init_seed = 0;

  Index input_dim() const { return w1.rows(); }
  Index hidden_dim() const { return w1.cols(); }
  Index output_dim() const { return w2.cols(); }

  friend bool operator==(const GcnParams& a, const GcnParams& b) {
    return a.init_seed == b.init_seed && a.w1.rows() == b.w1.rows() &&
           a.w1.cols() == b.w1.cols() && a.w2.rows() == b.w2.rows() &&
           a.w2.cols() == b.w2.cols() && a.w1 == b.w1 && a.w2 == b.w2;
  }
};

template <typename Scalar>
struct GcnGradients {
  Matrix<Scalar> w1;
  Matrix<Scalar> w2;

  static GcnGradients zeros_like(const GcnParams<Scalar>& p) {
    return {Matrix<Scalar>::Zero(p.w1.rows(), p.w1.cols()),
            Matrix<Scalar>::Zero(p.w2.rows(), p.w2.cols())};
  }
  bool all_finite() const { return w1.allFinite() && w2.allFinite(); }
};

template <typename Scalar>
struct ForwardCache {
  Matrix<Scalar> ax;   // A X
  Matrix<Scalar> z1;   // A X W1
  Matrix<Scalar> h1;   // relu(z1)
  Matrix<Scalar> ah1;  // A h1
  Matrix<Scalar> out;  // embeddings (link head) or logits (class head)
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
template <typename Scalar = double>
Matrix<Scalar> glorot_init(Index rows, Index cols, std::uint64_t seed) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("glorot_init: non-positive shape");
  const Scalar bound = std::sqrt(Scalar(6) / static_cast<Scalar>(rows + cols));
  Rng rng(seed);
  Matrix<Scalar> w(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      w(i, j) = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0)) * bound;
  return w;
}

template <typename Scalar = double>
GcnParams<Scalar> init_gcn(Index input_dim, Index hidden_dim, Index output_dim,
                           std::uint64_t seed) {
  return {glorot_init<Scalar>(input_dim, hidden_dim, derive_seed(seed, 1)),
          glorot_init<Scalar>(hidden_dim, output_dim, derive_seed(seed, 2)), seed};
}

namespace detail {
inline void require_finite(bool finite, const char* layer) {
  if (!finite) throw NumericalError(std::string("non-finite values in ") + layer);
}
}  // namespace detail

template <typename Scalar>
ForwardCache<Scalar> gcn_forward(const SparseMatrix<Scalar>& adj, const Matrix<Scalar>& x,
                                 const GcnParams<Scalar>& p) {
  if (adj.rows() != adj.cols() || adj.cols() != x.rows() || x.cols() != p.w1.rows() ||
      p.w1.cols() != p.w2.rows()) {
    throw std::invalid_argument("gcn_forward: shape mismatch");
  }
  ForwardCache<Scalar> c;
  c.ax = adj * x;
  c.z1.noalias() = c.ax * p.w1;
  detail::require_finite(c.z1.allFinite(), "layer 1 pre-activation");
  c.h1 = c.z1.cwiseMax(Scalar(0));
  c.ah1 = adj * c.h1;
  c.out.noalias() = c.ah1 * p.w2;
  detail::require_finite(c.out.allFinite(), "layer 2 output");
  return c;
}

// Gradients of <grad_out, out> w.r.t. W1 and W2; A is symmetric so A^T = A.
template <typename Scalar>
GcnGradients<Scalar> gcn_backward(const ForwardCache<Scalar>& c, const SparseMatrix<Scalar>& adj,
                                  const GcnParams<Scalar>& p, const Matrix<Scalar>& grad_out) {
  if (grad_out.rows() != c.out.rows() || grad_out.cols() != c.out.cols()) {
    throw std::invalid_argument("gcn_backward: grad_out shape mismatch");
  }
  GcnGradients<Scalar> g;
  g.w2.noalias() = c.ah1.transpose() * grad_out;
  Matrix<Scalar> grad_ah1 = grad_out * p.w2.transpose();
  Matrix<Scalar> grad_z1 = adj * grad_ah1;
  grad_z1.array() *= (c.z1.array() > Scalar(0)).template cast<Scalar>();
  g.w1.noalias() = c.ax.transpose() * grad_z1;
  return g;
}

template <typename Scalar>
Scalar sigmoid(Scalar s) {
  if (s >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-s));
  const Scalar e = std::exp(s);
  return e / (Scalar(1) + e);
}

// log(1 + exp(s)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar s) {
  return std::max(s, Scalar(0)) + std::log1p(std::exp(-std::abs(s)));
}

// Row-wise softmax with max subtraction.
template <typename Scalar>
Matrix<Scalar> classify(const Matrix<Scalar>& logits) {
  Matrix<Scalar> probs(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const Scalar top = logits.row(i).maxCoeff();
    probs.row(i) = (logits.row(i).array() - top).exp().matrix();
    probs.row(i) /= probs.row(i).sum();
  }
  return probs;
}

// Logit e_i . e_j for each requested pair; never materializes N x N.
template <typename Scalar>
Vector<Scalar> link_logits(const Matrix<Scalar>& embeddings, std::span<const Edge> pairs) {
  Vector<Scalar> s(static_cast<Index>(pairs.size()));
  const Index n = embeddings.rows();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    if (i < 0 || j < 0 || i >= n || j >= n) throw std::out_of_range("decode_links: pair index out of range");
    s[static_cast<Index>(k)] = embeddings.row(i).dot(embeddings.row(j));
  }
  return s;
}

// sigma(e_i . e_j) per pair.
template <typename Scalar>
Vector<Scalar> decode_links(const Matrix<Scalar>& embeddings, std::span<const Edge> pairs) {
  Vector<Scalar> s = link_logits(embeddings, pairs);
  for (Index k = 0; k < s.size(); ++k) s[k] = sigmoid(s[k]);
  return s;
}

template <typename Scalar>
struct LossAndGradient {
  Scalar loss = 0;
  Matrix<Scalar> grad_out;  // w.r.t. the GCN output (logits or embeddings)
};

// Mean softmax cross-entropy over `index`, gradient w.r.t. the logits.
template <typename Scalar>
LossAndGradient<Scalar> softmax_cross_entropy(const Matrix<Scalar>& logits,
                                              std::span<const int> labels,
                                              std::span<const Index> index) {
  if (index.empty()) throw std::invalid_argument("softmax_cross_entropy: empty index set");
  LossAndGradient<Scalar> r;
  r.grad_out = Matrix<Scalar>::Zero(logits.rows(), logits.cols());
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    const Index i = index[k];
    const int y = labels[k];
    const Scalar top = logits.row(i).maxCoeff();
    const Scalar log_z = top + std::log((logits.row(i).array() - top).exp().sum());
    r.loss += (log_z - logits(i, y)) * inv_n;
    r.grad_out.row(i) += ((logits.row(i).array() - log_z).exp() * inv_n).matrix();
    r.grad_out(i, y) -= inv_n;
  }
  return r;
}

// Mean binary cross-entropy over positive and negative pairs, gradient w.r.t.
// the embeddings (chained through the inner-product decoder).
template <typename Scalar>
LossAndGradient<Scalar> link_cross_entropy(const Matrix<Scalar>& embeddings,
                                           std::span<const Edge> positives,
                                           std::span<const Edge> negatives) {
  const std::size_t total = positives.size() + negatives.size();
  if (total == 0) throw std::invalid_argument("link_cross_entropy: no pairs");
  LossAndGradient<Scalar> r;
  r.grad_out = Matrix<Scalar>::Zero(embeddings.rows(), embeddings.cols());
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(total);
  auto accumulate = [&](std::span<const Edge> pairs, Scalar target) {
    for (const Edge& e : pairs) {
      const Scalar s = embeddings.row(e.u).dot(embeddings.row(e.v));
      r.loss += (softplus(s) - target * s) * inv_n;
      const Scalar ds = (sigmoid(s) - target) * inv_n;
      r.grad_out.row(e.u) += ds * embeddings.row(e.v);
      r.grad_out.row(e.v) += ds * embeddings.row(e.u);
    }
  };
  accumulate(positives, Scalar(1));
  accumulate(negatives, Scalar(0));
  return r;
}

inline constexpr double kProbabilityClamp = 1e-12;

// -log p with p clamped to [1e-12, 1 - 1e-12].
template <typename Scalar>
Scalar sample_cross_entropy(Scalar probability_of_target) {
  const Scalar lo = static_cast<Scalar>(kProbabilityClamp);
  return -std::log(std::clamp(probability_of_target, lo, Scalar(1) - lo));
}

// Mean cross-entropy of class-distribution rows against labels on `index`.
template <typename Scalar>
Scalar class_cross_entropy(const Matrix<Scalar>& probs, std::span<const int> labels,
                           std::span<const Index> index) {
  if (index.empty()) throw std::invalid_argument("class_cross_entropy: empty index set");
  Scalar total = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    total += sample_cross_entropy(probs(index[k], labels[k]));
  }
  return total / static_cast<Scalar>(index.size());
}

// Mean binary cross-entropy of edge scores against 0/1 targets.
template <typename Scalar>
Scalar binary_cross_entropy(const Vector<Scalar>& scores, std::span<const int> targets) {
  if (targets.empty()) throw std::invalid_argument("binary_cross_entropy: empty index set");
  Scalar total = 0;
  for (Index k = 0; k < scores.size(); ++k) {
    total += sample_cross_entropy(targets[k] ? scores[k] : Scalar(1) - scores[k]);
  }
  return total / static_cast<Scalar>(targets.size());
}

}  // namespace cpl
