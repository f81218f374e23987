#include <algorithm>
#include <numeric>

#include "cpl/errors.hpp"
#include "cpl/pl_state.hpp"

namespace cpl {

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::cautious: return "cautious";
    case Strategy::random: return "random";
    case Strategy::none: return "none";
  }
  return "none";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "cautious" || name == "cpl") return Strategy::cautious;
  if (name == "random" || name == "pl") return Strategy::random;
  if (name == "none" || name == "raw") return Strategy::none;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

namespace {

StrategySelection finish(std::span<const double> confidence, std::vector<std::size_t> selected,
                         bool exhausted) {
  StrategySelection s;
  s.indicator.assign(confidence.size(), 0);
  for (std::size_t pos : selected) {
    s.indicator[pos] = 1;
    s.c_min = std::min(s.c_min, confidence[pos]);
  }
  s.selected = std::move(selected);
  s.exhausted = exhausted;
  return s;
}

}  // namespace

StrategySelection select_top_k(std::span<const double> confidence, std::size_t k) {
  const bool exhausted = k >= confidence.size();
  k = std::min(k, confidence.size());
  std::vector<std::size_t> order(confidence.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto more_confident = [&](std::size_t a, std::size_t b) {
    return confidence[a] > confidence[b] || (confidence[a] == confidence[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    more_confident);
  order.resize(k);
  return finish(confidence, std::move(order), exhausted);
}

StrategySelection select_random_k(std::span<const double> confidence, std::size_t k, Rng& rng) {
  const bool exhausted = k >= confidence.size();
  k = std::min(k, confidence.size());
  std::vector<std::size_t> order(confidence.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(k);
  return finish(confidence, std::move(order), exhausted);
}

}  // namespace cpl
