#include "pumpopt/focus_search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pumpopt {

namespace {

bool better(double score, const ControlVector& x, double best_score, const ControlVector& best_x) {
  if (score != best_score) return score > best_score;
  return x < best_x;
}

}  // namespace

ThresholdSpace shrink(const ThresholdSpace& space, const ControlVector& center, std::size_t level) {
  if (center.size() != space.dim()) throw DimensionError("shrink center has the wrong dimension");
  if (level == 0) return space;
  const double scale = std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(level, 1000)));

  std::vector<VariableDomain> domains;
  domains.reserve(space.dim());
  for (std::size_t i = 0; i < space.dim(); ++i) {
    const auto& dom = space.domain(i);
    if (space.discrete()) {
      const std::size_t m = dom.set.size();
      const auto k = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(static_cast<double>(m) * scale)));
      const std::size_t c = dom.set.nearest_index(center[i]);
      std::size_t first = c >= k / 2 ? c - k / 2 : 0;
      first = std::min(first, m - k);
      domains.emplace_back(dom.set.slice(first, first + k));
    } else {
      const double half = 0.5 * (dom.hi - dom.lo) * scale;
      const double c = std::clamp(center[i], dom.lo, dom.hi);
      domains.emplace_back(dom.set, std::max(dom.lo, c - half), std::min(dom.hi, c + half));
    }
  }
  return space.with_domains(std::move(domains));
}

FocusResult maximize(const ScoreFn& score_fn, const ThresholdSpace& space,
                     const FocusConfig& config) {
  if (config.points_per_iter == 0 || config.restarts == 0) {
    throw std::invalid_argument("focus-search budgets must be at least 1");
  }

  std::vector<ScoredPoint> scored;
  auto finish = [&]() {
    std::sort(scored.begin(), scored.end(), [](const ScoredPoint& a, const ScoredPoint& b) {
      return better(a.score, a.x, b.score, b.x);
    });
    scored.erase(std::unique(scored.begin(), scored.end(),
                             [](const ScoredPoint& a, const ScoredPoint& b) { return a.x == b.x; }),
                 scored.end());
    FocusResult result{scored.front().x, scored.front().score, {}};
    result.population = std::move(scored);
    return result;
  };

  if (space.discrete() && count_feasible(space) <= config.points_per_iter) {
    for (auto& x : enumerate_feasible(space)) {
      const double s = score_fn(x);
      scored.push_back({std::move(x), s});
    }
    return finish();
  }

  scored.reserve(config.restarts * (config.shrink_iters + 1) * config.points_per_iter);
  for (std::size_t r = 0; r < config.restarts; ++r) {
    const std::uint64_t restart_seed = mix_seed(config.seed, r);
    ControlVector best_x;
    double best_score = 0.0;
    bool have_best = false;
    for (std::size_t level = 0; level <= config.shrink_iters; ++level) {
      const ThresholdSpace focused = have_best ? shrink(space, best_x, level) : space;
      Rng rng(mix_seed(restart_seed, level));
      for (std::size_t k = 0; k < config.points_per_iter; ++k) {
        ControlVector x = sample_uniform(focused, rng);
        const double s = score_fn(x);
        if (!have_best || better(s, x, best_score, best_x)) {
          best_x = x;
          best_score = s;
          have_best = true;
        }
        scored.push_back({std::move(x), s});
      }
    }
  }
  return finish();
}

}  // namespace pumpopt
