#include "doctest.h"

#include <cmath>

#include "cpl/augment.hpp"
#include "cpl/engine.hpp"
#include "cpl/errors.hpp"
#include "test_support.hpp"

using namespace cpl;

namespace {

// Dense reference: expand both masks to full matrices and take squared
// Frobenius norms of (1 - M).
double dense_magnitude(const MaskPair& m, const SparseGraph& g) {
  const Index n = g.node_count(), f = m.cols;
  Matrix<double> mx = Matrix<double>::Ones(n, f);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < f; ++j) mx(i, j) = m.feature_keep[static_cast<std::size_t>(i * f + j)];
  Matrix<double> ma = Matrix<double>::Ones(n, n);
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!m.edge_keep[e]) ma(edges[e].u, edges[e].v) = ma(edges[e].v, edges[e].u) = 0.0;
  }
  const double nf = static_cast<double>(n * f), nn = static_cast<double>(n * n);
  return (Matrix<double>::Ones(n, f) - mx).squaredNorm() / nf +
         (Matrix<double>::Ones(n, n) - ma).squaredNorm() / nn;
}

GcnModel two_node_model() {
  GcnModel m;
  m.params.w1 = Matrix<double>::Ones(1, 1);
  m.params.w2 = Matrix<double>(1, 2);
  m.params.w2 << 1.0, 0.0;
  return m;
}

}  // namespace

TEST_CASE("perturbation magnitude matches the dense oracle") {
  AugmentationPlan plan;
  plan.view_count = 1000;
  plan.feature_drop_rate = 0.1;
  plan.edge_drop_rate = 0.2;
  plan.node_drop_rate = 0.02;
  const SparseGraph g = test::random_graph(30, 0.2, 8);
  for (int v = 0; v < plan.view_count; ++v) {
    const MaskPair m = sample_masks(plan, g, 7, v);
    CHECK(perturbation_magnitude(m, 30, 7) == doctest::Approx(dense_magnitude(m, g)).epsilon(1e-14));
  }
}

TEST_CASE("perturbation magnitude examples") {
  const SparseGraph g = SparseGraph::from_edges(2, std::vector<Edge>{{0, 1}});
  MaskPair m{2, 3, std::vector<std::uint8_t>(6, 1), {0}, 0};
  CHECK(perturbation_magnitude(m, 2, 3) == 0.5);
  m.feature_keep[4] = 0;
  CHECK(perturbation_magnitude(m, 2, 3) == doctest::Approx(0.5 + 1.0 / 6));
  m.edge_keep[0] = 1;
  CHECK(perturbation_magnitude(m, 2, 3) == doctest::Approx(1.0 / 6));
  CHECK_THROWS_AS(perturbation_magnitude(m, 3, 3), std::invalid_argument);
}

TEST_CASE("masks follow the plan") {
  const SparseGraph g = test::random_graph(40, 0.2, 1);
  AugmentationPlan plan;
  plan.base_seed = 17;

  SUBCASE("deterministic per view, different across views") {
    const MaskPair a = sample_masks(plan, g, 10, 2);
    CHECK(a.feature_keep == sample_masks(plan, g, 10, 2).feature_keep);
    CHECK(a.edge_keep == sample_masks(plan, g, 10, 2).edge_keep);
    CHECK(a.feature_keep != sample_masks(plan, g, 10, 3).feature_keep);
  }
  SUBCASE("zero rates give the identity") {
    plan.feature_drop_rate = plan.edge_drop_rate = 0.0;
    const FeatureMatrix x = test::random_features(40, 10, 2);
    const MaskPair m = sample_masks(plan, g, 10, 0);
    CHECK(perturbation_magnitude(m, 40, 10) == 0.0);
    const AugmentedInput view = apply_augmentation(g, x, m);
    CHECK(view.graph == g);
    CHECK(view.features == x);
  }
  SUBCASE("drop counts near the rate") {
    plan.feature_drop_rate = 0.3;
    plan.edge_drop_rate = 0.0;
    const MaskPair m = sample_masks(plan, g, 50, 0);
    const double frac = static_cast<double>(m.dropped_features()) / 2000.0;
    CHECK(std::abs(frac - 0.3) < 5 * std::sqrt(0.3 * 0.7 / 2000));
    CHECK(m.dropped_edges() == 0);
  }
  SUBCASE("dropped edges disappear in both directions") {
    plan.edge_drop_rate = 0.5;
    const MaskPair m = sample_masks(plan, g, 10, 0);
    const AugmentedInput view = apply_augmentation(g, test::random_features(40, 10, 2), m);
    const auto edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      CHECK(view.graph.has_edge(edges[e].u, edges[e].v) == static_cast<bool>(m.edge_keep[e]));
      CHECK(view.graph.has_edge(edges[e].v, edges[e].u) == static_cast<bool>(m.edge_keep[e]));
    }
  }
  SUBCASE("node dropping removes the row and incident edges") {
    plan.feature_drop_rate = plan.edge_drop_rate = 0.0;
    plan.node_drop_rate = 0.3;
    const FeatureMatrix x = FeatureMatrix::Ones(40, 4);
    const AugmentedInput view = apply_augmentation(g, x, sample_masks(plan, g, 4, 0));
    int dropped = 0;
    for (Index i = 0; i < 40; ++i) {
      if (view.features.row(i).isZero()) {
        ++dropped;
        CHECK(view.graph.degree(i) == 0);
      } else {
        CHECK(view.features.row(i).isOnes());
      }
    }
    CHECK(dropped > 0);
  }
  SUBCASE("validation") {
    plan.view_count = 0;
    CHECK_THROWS_AS(plan.validate(), ConfigError);
    plan.view_count = 2;
    plan.edge_drop_rate = 1.0;
    CHECK_THROWS_AS(plan.validate(), ConfigError);
    plan.edge_drop_rate = -0.1;
    CHECK_THROWS_AS(plan.validate(), ConfigError);
    plan.edge_drop_rate = 0.1;
    CHECK_THROWS_AS(sample_masks(plan, g, 3, 2), std::out_of_range);
  }
}

TEST_CASE("multi-view confidence") {
  const SparseGraph g = test::random_graph(20, 0.2, 4);
  const FeatureMatrix x = test::random_features(20, 6, 4);
  const GcnModel model{Task::node_classification, init_gcn<double>(6, 8, 3, 5)};
  QuerySet q;
  q.nodes = {0, 5, 10, 19};

  AugmentationPlan plan;
  plan.view_count = 4;
  const auto mv = multi_view_confidence(model, g, x, plan, q);
  REQUIRE(mv.views.size() == 4);
  CHECK(mv.epsilons.size() == 4);
  Predictions sum = Predictions::Zero(4, 3);
  for (const auto& v : mv.views) sum += v;
  CHECK((mv.mean - sum / 4.0).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(mv.mean.rowwise().sum().isApprox(Vector<double>::Ones(4)));

  plan.feature_drop_rate = plan.edge_drop_rate = 0.0;
  const auto same = multi_view_confidence(model, g, x, plan, q);
  CHECK(same.mean.isApprox(predict(model, g, x, q), 1e-15));
}

TEST_CASE("inconsistency estimate") {
  SUBCASE("identity plan gives zero") {
    const SparseGraph g = test::random_graph(20, 0.2, 4);
    const GcnModel model{Task::node_classification, init_gcn<double>(6, 8, 3, 5)};
    QuerySet q;
    q.nodes = {1, 2, 3};
    AugmentationPlan plan;
    plan.feature_drop_rate = plan.edge_drop_rate = 0.0;
    CHECK(estimate_inconsistency(model, g, test::random_features(20, 6, 4), plan, q) == 0.0);
    CHECK_THROWS_AS(estimate_inconsistency(model, g, test::random_features(20, 6, 4), plan, QuerySet{}),
                    std::invalid_argument);
  }
  SUBCASE("trained SBM model is mostly stable") {
    const std::vector<Index> blocks{60, 60};
    SbmGraph sbm = generate_sbm(blocks, 0.1, 0.02, 3);
    FeatureMatrix x = class_gaussian_features(sbm.labels, 8, 0.5, 1.0, 4);
    NodeSplit split = split_nodes(sbm.labels, {0.1, 0.1, 0.8}, 5);
    const auto problem = make_node_problem(sbm.graph, x, sbm.labels, split);
    RunConfig config;
    config.training.pretrain_epochs = 100;
    const GcnModel model = pretrain_teacher(*problem, config).model;

    AugmentationPlan plan;
    plan.view_count = 5;
    const double a = estimate_inconsistency(model, sbm.graph, x, plan, problem->test_queries());
    CHECK(a > 0.0);
    CHECK(a < 0.25);
  }
}

TEST_CASE("GPI constant on a two-node graph") {
  // x = (1, 3), one edge. With the edge, A_hat is all 0.5 and both logit rows
  // are (2, 0); without it, A_hat = I and the rows are (1, 0) and (3, 0).
  const SparseGraph g = SparseGraph::from_edges(2, std::vector<Edge>{{0, 1}});
  FeatureMatrix x(2, 1);
  x << 1.0, 3.0;
  QuerySet q;
  q.nodes = {0, 1};
  AugmentationPlan plan;
  plan.feature_drop_rate = 0.0;
  plan.edge_drop_rate = 0.5;
  plan.base_seed = 2;

  const auto est = estimate_gpi_constant(two_node_model(), g, x, plan, 20, q);
  const auto s = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double gap = 2 * std::pow(s(1) - s(2), 2) + 2 * std::pow(s(3) - s(2), 2);
  const double expected = gap / 0.5;

  REQUIRE(est.epsilons.size() == 20);
  REQUIRE(est.skipped < 20);
  REQUIRE(est.skipped > 0);
  for (double eps : est.epsilons) CHECK((eps == 0.0 || eps == 0.5));
  CHECK(est.constant == doctest::Approx(expected).epsilon(1e-12));
  for (std::size_t t = 1; t < est.running.size(); ++t) CHECK(est.running[t] >= est.running[t - 1]);
  CHECK_THROWS_AS(estimate_gpi_constant(two_node_model(), g, x, plan, 0, q), std::invalid_argument);
}
