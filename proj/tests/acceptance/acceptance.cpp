// Acceptance run: one PASS/FAIL line per criterion with the measured numbers.
//
//   acceptance [--config-dir DIR] [--expect-fail N ...]
//
// Exits 0 when the set of failing criteria equals the --expect-fail list, so a
// documented known failure keeps ctest green while any other change (a new
// failure or an unexpected pass) does not.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cpl/augment.hpp"
#include "cpl/config.hpp"
#include "cpl/engine.hpp"
#include "cpl/metrics.hpp"
#include "cpl/report.hpp"
#include "cpl/theory.hpp"

using namespace cpl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

std::set<int> failed;

void verdict(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) failed.insert(id);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Rng& rng() {
  static Rng r(20240601);
  return r;
}

SparseGraph random_graph(Index n, double p, Rng& r) {
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (uniform01(r) < p) edges.push_back({i, j});
  return SparseGraph::from_edges(n, edges);
}

Matrix<double> random_matrix(Index rows, Index cols, Rng& r) {
  Matrix<double> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = 2.0 * uniform01(r) - 1.0;
  return m;
}

// ---------------------------------------------------------------------------

template <class Loss>
double worst_gradient_gap(const SparseMatrix<double>& adj, const Matrix<double>& x,
                          GcnParams<double> p, Loss loss) {
  const auto cache = gcn_forward(adj, x, p);
  const auto g = gcn_backward(cache, adj, p, loss(cache.out).grad_out);
  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](Matrix<double>& w, const Matrix<double>& analytic) {
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) {
        const double saved = w(i, j);
        w(i, j) = saved + h;
        const double up = loss(gcn_forward(adj, x, p).out).loss;
        w(i, j) = saved - h;
        const double down = loss(gcn_forward(adj, x, p).out).loss;
        w(i, j) = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic(i, j)), 1e-7});
        worst = std::max(worst, std::abs(numeric - analytic(i, j)) / scale);
      }
  };
  probe(p.w1, g.w1);
  probe(p.w2, g.w2);
  return worst;
}

void criterion_gradients() {
  const auto start = Clock::now();
  double worst_class = 0.0, worst_link = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 25; ++trial) {
    Rng& r = rng();
    const Index n = 5 + static_cast<Index>(r() % 16);
    const Index f = 2 + static_cast<Index>(r() % 6);
    const Index h = 2 + static_cast<Index>(r() % 7);
    const auto adj = normalize_adjacency<double>(random_graph(n, 0.25, r));
    const Matrix<double> x = random_matrix(n, f, r);

    const Index classes = 2 + static_cast<Index>(r() % 3);
    std::vector<Index> index;
    std::vector<int> labels;
    for (Index i = 0; i < n; ++i)
      if (r() % 2) {
        index.push_back(i);
        labels.push_back(static_cast<int>(r() % static_cast<std::uint64_t>(classes)));
      }
    if (index.empty()) {
      index.push_back(0);
      labels.push_back(0);
    }
    worst_class = std::max(worst_class, worst_gradient_gap(adj, x, init_gcn<double>(f, h, classes, r()),
                                                           [&](const Matrix<double>& out) {
                                                             return softmax_cross_entropy<double>(out, labels, index);
                                                           }));

    std::vector<Edge> pos, neg;
    for (int e = 0; e < 6; ++e) {
      pos.push_back({static_cast<Index>(r() % n), static_cast<Index>(r() % n)});
      neg.push_back({static_cast<Index>(r() % n), static_cast<Index>(r() % n)});
    }
    worst_link = std::max(worst_link, worst_gradient_gap(adj, x, init_gcn<double>(f, h, 1 + r() % 6, r()),
                                                         [&](const Matrix<double>& out) {
                                                           return link_cross_entropy<double>(out, pos, neg);
                                                         }));
    instances += 2;
  }
  const double elapsed = seconds_since(start);
  verdict(1, worst_class < 1e-4 && worst_link < 1e-4 && elapsed < 30.0,
          fmt("%d instances (N<=20, H<=8); worst relative gap class %.2e, link %.2e; %.2fs", instances,
              worst_class, worst_link, elapsed));
}

// ---------------------------------------------------------------------------

void criterion_metrics_and_topk() {
  Rng& r = rng();
  double worst_auc = 0.0, worst_ap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + r() % 999;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 2 ? uniform01(r) : static_cast<double>(r() % 25);
      y[i] = static_cast<int>(r() % 2);
    }
    y[0] = 1;
    y[1] = 0;

    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (y[i] && !y[j]) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    worst_auc = std::max(worst_auc, std::abs(auc(s, y) - wins / pairs));

    std::vector<double> thresholds = s;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    const double total = static_cast<double>(std::count(y.begin(), y.end(), 1));
    double ap = 0.0, prev = 0.0;
    for (double t : thresholds) {
      double tp = 0, seen = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (s[i] >= t) {
          seen += 1;
          tp += y[i];
        }
      ap += tp / seen * (tp / total - prev);
      prev = tp / total;
    }
    worst_ap = std::max(worst_ap, std::abs(average_precision(s, y) - ap));
  }

  int topk_match = 0;
  std::size_t largest = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = trial == 0 ? 100000 : 1 + r() % 100000;
    largest = std::max(largest, n);
    const std::size_t k = r() % (n + 1);
    std::vector<double> conf(n);
    for (auto& c : conf) c = static_cast<double>(r() % 1000) / 1000.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return conf[a] > conf[b]; });
    order.resize(k);
    topk_match += select_top_k(conf, k).selected == order ? 1 : 0;
  }
  verdict(2, worst_auc <= 1e-12 && worst_ap <= 1e-12 && topk_match == 100,
          fmt("AUC max gap %.1e, AP max gap %.1e over 100 instances; top-k equals full sort in %d/100 "
              "(largest pool %zu)",
              worst_auc, worst_ap, topk_match, largest));
}

// ---------------------------------------------------------------------------

void criterion_bound_examples() {
  const double a = error_bound(0.2237, 0.0669).value;
  const double b = error_bound(0.02, 0.0358).value;
  verdict(3, std::abs(a - 0.5812) <= 1e-4 && std::abs(b - 0.1116) <= 1e-4,
          fmt("2(0.2237+0.0669) = %.4f, 2(0.02+0.0358) = %.4f", a, b));
}

// ---------------------------------------------------------------------------

struct SeedRuns {
  std::vector<RunResult> runs;
  double seconds = 0.0;
};

SeedRuns run_seeds(const ExperimentConfig& config, const Dataset& data, Strategy strategy,
                   const std::vector<std::uint64_t>& seeds) {
  SeedRuns out;
  const auto start = Clock::now();
  for (std::uint64_t seed : seeds) {
    const auto problem = make_problem(config, data, seed);
    RunConfig run = run_config_for(config, seed);
    run.pl.strategy = strategy;
    out.runs.push_back(run_pseudo_labeling(*problem, run));
  }
  out.seconds = seconds_since(start);
  return out;
}

SeedRuns criteria_node(const ExperimentConfig& config, const Dataset& data) {
  const SeedRuns cpl = run_seeds(config, data, Strategy::cautious, config.seeds);

  int held = 0;
  std::string detail;
  for (const auto& r : cpl.runs) {
    const double err = r.final_metrics.zero_one_error;
    const bool ok = r.bound && err <= r.bound->value;
    held += ok ? 1 : 0;
    detail += fmt(" [seed %llu err %.4f <= 2(%.4f+%.4f)=%.4f]", static_cast<unsigned long long>(r.seed), err,
                  r.q.value_or(NAN), r.inconsistency, r.bound ? r.bound->value : NAN);
  }
  verdict(4, held == static_cast<int>(cpl.runs.size()) && cpl.seconds < 300.0,
          fmt("bound holds in %d/%zu seeds, %.1fs;", held, cpl.runs.size(), cpl.seconds) + detail);

  std::size_t violations = 0, assumption = 0, checked = 0;
  double max_slack = -INFINITY, max_residual = 0.0, max_dropped = 0.0;
  std::size_t pseudo_violations = 0;
  for (const auto& r : cpl.runs) {
    const auto check = loss_trajectory_check(r.records);
    violations += check.violations.size();
    assumption += check.assumption_violations.size();
    checked += r.records.size() - check.skipped.size();
    max_slack = std::max(max_slack, check.max_slack);
    pseudo_violations += loss_trajectory_check(r.records, LossTrajectoryReport::kTolerance,
                                               CovarianceSource::pseudo_labels)
                             .violations.size();
    for (const auto& rec : r.records) {
      max_residual = std::max(max_residual, decomposition_residual(rec));
      const double n_o = static_cast<double>(rec.observed_size), k = static_cast<double>(rec.selected);
      max_dropped = std::max(max_dropped, k * (rec.pool_mean_ce - rec.loss_old_set) / (n_o + k));
    }
  }
  verdict(5, violations == 0,
          fmt("L(t+1) <= beta*Cov + L(t) + 1e-6 violated in %zu/%zu iterations (max slack %.3e; %zu with "
              "teacher-label Cov); fine-tune raised the loss in %zu; exact decomposition residual %.1e, "
              "largest omitted k(mean ce - L_old)/(|Yo|+k) term %.3e",
              violations, checked, max_slack, pseudo_violations, assumption, max_residual, max_dropped));

  std::size_t exact = 0, total = 0;
  for (const auto& r : cpl.runs)
    for (const auto& rec : r.records) {
      exact += rec.mean_indicator == rec.expected_indicator ? 1 : 0;
      ++total;
    }
  std::vector<double> raw, fin;
  for (const auto& r : cpl.runs) {
    raw.push_back(r.raw_metrics.test_metric);
    fin.push_back(r.final_metrics.test_metric);
  }
  std::printf("  node task: median test accuracy raw %.4f, CPL %.4f; E[T] = k/|Yu| exact in %zu/%zu records\n",
              median(raw), median(fin), exact, total);
  if (exact != total) failed.insert(9);
  return cpl;
}

void criterion_inconsistency(const SeedRuns& cpl) {
  int decreased = 0, below_initial = 0;
  std::string a_detail;
  for (const auto& r : cpl.runs) {
    const double first = r.records.empty() ? r.initial_inconsistency : r.records.front().inconsistency;
    decreased += r.inconsistency <= first ? 1 : 0;
    below_initial += r.inconsistency <= r.initial_inconsistency ? 1 : 0;
    a_detail += fmt(" [%.4f -> %.4f]", first, r.inconsistency);
  }
  verdict(7, decreased >= 4,
          fmt("final A <= first-iteration A in %d/%zu seeds (vs pretrained teacher: %d/%zu);", decreased,
              cpl.runs.size(), below_initial, cpl.runs.size()) +
              a_detail);
}

double mean_covariance(const RunResult& r) {
  std::vector<double> c;
  for (const auto& rec : r.records)
    if (rec.covariance) c.push_back(*rec.covariance);
  return c.empty() ? 0.0 : mean(c);
}

void criterion_link(const ExperimentConfig& config, const Dataset& data) {
  std::vector<std::uint64_t> twenty(20);
  std::iota(twenty.begin(), twenty.end(), std::uint64_t{0});
  const SeedRuns cpl = run_seeds(config, data, Strategy::cautious, config.seeds);
  const SeedRuns random = run_seeds(config, data, Strategy::random, twenty);

  std::vector<double> raw, cpl_auc, random_auc, cautious_cov, random_cov;
  for (const auto& r : cpl.runs) {
    raw.push_back(r.raw_metrics.test_metric);
    cpl_auc.push_back(r.final_metrics.test_metric);
    cautious_cov.push_back(mean_covariance(r));
  }
  for (const auto& r : random.runs) {
    random_cov.push_back(mean_covariance(r));
    if (std::find(config.seeds.begin(), config.seeds.end(), r.seed) != config.seeds.end()) {
      random_auc.push_back(r.final_metrics.test_metric);
    }
  }
  const double m_cpl = median(cpl_auc), m_raw = median(raw), m_random = median(random_auc);
  const double cov_mean = mean(random_cov), cov_se = standard_error(random_cov);
  const double cov_cautious = median(cautious_cov);
  const bool pass = m_cpl >= m_raw && m_cpl >= m_random && std::abs(cov_mean) <= 2 * cov_se && cov_cautious < 0;
  verdict(6, pass,
          fmt("median AUC CPL %.4f, raw %.4f, random-PL %.4f (%zu seeds); random-PL mean Cov %.3e, 2SE %.3e "
              "(%zu seeds); cautious median Cov %.3e; %.1fs",
              m_cpl, m_raw, m_random, cpl_auc.size(), cov_mean, 2 * cov_se, random_cov.size(), cov_cautious,
              cpl.seconds + random.seconds));
}

// ---------------------------------------------------------------------------

std::string run_once(const ExperimentConfig& config, const Dataset& data, std::uint64_t seed) {
  const auto problem = make_problem(config, data, seed);
  const RunResult r = run_pseudo_labeling(*problem, run_config_for(config, seed));
  const RunReport report = make_run_report(config_to_json(config), config.task, problem->candidate_count(),
                                           problem->initial_observed_count(), r);
  return emit_report(report) + series_csv(report);
}

void criterion_determinism(const ExperimentConfig& node, const Dataset& node_data, const ExperimentConfig& link,
                           const Dataset& link_data) {
  const std::string a = run_once(node, node_data, node.seeds.front());
  const std::string b = run_once(node, node_data, node.seeds.front());
  const std::string c = run_once(link, load_dataset(link), link.seeds.front());
  const std::string d = run_once(link, link_data, link.seeds.front());
  verdict(8, a == b && c == d,
          fmt("node report+series %zu bytes %s, link %zu bytes %s", a.size(), a == b ? "identical" : "DIFFER",
              c.size(), c == d ? "identical" : "DIFFER"));
}

void criterion_perturbation() {
  Rng& r = rng();
  const SparseGraph g = random_graph(40, 0.15, r);
  const Index n = g.node_count(), f = 12;
  AugmentationPlan plan;
  plan.view_count = 1000;
  plan.feature_drop_rate = 0.1;
  plan.edge_drop_rate = 0.1;
  plan.node_drop_rate = 0.02;
  plan.base_seed = r();
  const auto edges = g.edges();
  double worst = 0.0;
  for (int v = 0; v < plan.view_count; ++v) {
    const MaskPair m = sample_masks(plan, g, f, v);
    Matrix<double> mx(n, f), ma = Matrix<double>::Ones(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < f; ++j) mx(i, j) = m.feature_keep[static_cast<std::size_t>(i * f + j)];
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (!m.edge_keep[e]) ma(edges[e].u, edges[e].v) = ma(edges[e].v, edges[e].u) = 0.0;
    const double dense = (Matrix<double>::Ones(n, f) - mx).squaredNorm() / static_cast<double>(n * f) +
                         (Matrix<double>::Ones(n, n) - ma).squaredNorm() / static_cast<double>(n * n);
    worst = std::max(worst, std::abs(perturbation_magnitude(m, n, f) - dense));
  }

  int exact = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t pool = 1 + r() % 5000;
    const std::size_t k = r() % (pool + 1);
    std::vector<double> conf(pool);
    for (auto& c : conf) c = uniform01(r);
    const auto s = trial % 2 ? select_top_k(conf, k) : select_random_k(conf, k, r);
    const std::vector<double> ce(pool, 1.0);
    exact += covariance_diagnostic(ce, s.indicator, 1, 0.0).indicator_mean_exact() ? 1 : 0;
  }
  const bool run_records_exact = !failed.count(9);
  verdict(9, worst <= 1e-12 && exact == 1000 && run_records_exact,
          fmt("epsilon max gap to dense oracle %.1e over 1000 masks; E[T] = k/|Yu| exact in %d/1000 selections%s",
              worst, exact, run_records_exact ? " and in every node-run record" : "; node-run records MISMATCH"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-9"};
  fs::path config_dir = CPL_CONFIG_DIR;
  std::vector<int> expect_fail;
  app.add_option("--config-dir", config_dir, "Directory holding node_sbm.json and link_sbm.json");
  app.add_option("--expect-fail", expect_fail, "Criteria documented as failing");
  CLI11_PARSE(app, argc, argv);

  try {
    criterion_gradients();
    criterion_metrics_and_topk();
    criterion_bound_examples();

    const ExperimentConfig node = load_config(config_dir / "node_sbm.json");
    const Dataset node_data = load_dataset(node);
    const SeedRuns node_runs = criteria_node(node, node_data);

    const ExperimentConfig link = load_config(config_dir / "link_sbm.json");
    const Dataset link_data = load_dataset(link);
    criterion_link(link, link_data);
    criterion_inconsistency(node_runs);
    criterion_determinism(node, node_data, link, link_data);
    criterion_perturbation();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }

  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  std::string list;
  for (int id : failed) list += " " + std::to_string(id);
  std::printf("failed:%s\n", list.empty() ? " none" : list.c_str());
  if (failed != expected) {
    std::printf("failures differ from the documented list\n");
    return 1;
  }
  if (!expected.empty()) std::printf("all failures are documented known failures\n");
  return 0;
}
