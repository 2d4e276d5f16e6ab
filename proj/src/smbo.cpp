#include "pumpopt/smbo.hpp"

#include <algorithm>
#include <stdexcept>

namespace pumpopt {

namespace {

// Seed streams derived from the run seed.
enum Stream : std::uint64_t { kInitDesign = 1, kModels = 2, kFocus = 3 };

std::uint64_t stream_seed(std::uint64_t seed, Stream stream, std::uint64_t iteration) {
  return mix_seed(mix_seed(seed, stream), iteration);
}

ControlVector random_unevaluated(const std::set<ControlVector>& evaluated,
                                 const ThresholdSpace& space, Rng& rng) {
  constexpr int kAttempts = 1000;
  ControlVector x = sample_uniform(space, rng);
  for (int i = 1; i < kAttempts && evaluated.contains(x); ++i) x = sample_uniform(space, rng);
  return x;
}

}  // namespace

std::string to_string(ConstraintHandling handling) {
  return handling == ConstraintHandling::classifier ? "classifier" : "penalty";
}

ConstraintHandling parse_constraint_handling(const std::string& text) {
  if (text == "classifier") return ConstraintHandling::classifier;
  if (text == "penalty") return ConstraintHandling::penalty;
  throw std::invalid_argument("unknown constraint handling '" + text + "'");
}

void RunConfig::check() const {
  if (init_design_size < 2) throw std::invalid_argument("init_design_size must be at least 2");
  if (acquisition.beta < 0.0) throw std::invalid_argument("beta must be non-negative");
  if (acquisition.sigma_eps < 0.0) throw std::invalid_argument("sigma_eps must be non-negative");
  if (forest.num_trees == 0 || classifier.num_trees == 0) {
    throw std::invalid_argument("forests need at least one tree");
  }
  if (focus.points_per_iter == 0 || focus.restarts == 0) {
    throw std::invalid_argument("focus-search budgets must be at least 1");
  }
  if (!(penalty_factor > 0.0)) throw std::invalid_argument("penalty_factor must be positive");
}

std::string to_string(Proposer proposer) {
  switch (proposer) {
    case Proposer::init: return "init";
    case Proposer::acquisition: return "acquisition";
    case Proposer::random: return "random";
  }
  return "?";
}

Proposer parse_proposer(const std::string& text) {
  if (text == "init") return Proposer::init;
  if (text == "acquisition") return Proposer::acquisition;
  if (text == "random") return Proposer::random;
  throw std::invalid_argument("unknown proposer tag '" + text + "'");
}

std::vector<Observation> RunTrace::observations() const {
  std::vector<Observation> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.observation);
  return out;
}

std::optional<double> best_seen(std::span<const Observation> observations, std::size_t n) {
  std::optional<double> best;
  for (std::size_t i = 0; i < std::min(n, observations.size()); ++i) {
    const auto& y = observations[i].y;
    if (y && (!best || *y < *best)) best = y;
  }
  return best;
}

std::optional<double> best_seen(const RunTrace& trace, std::size_t n) {
  const auto obs = trace.observations();
  return best_seen(obs, n);
}

std::vector<std::optional<double>> best_seen_sequence(std::span<const Observation> observations) {
  std::vector<std::optional<double>> out;
  out.reserve(observations.size());
  std::optional<double> best;
  for (const auto& o : observations) {
    if (o.y && (!best || *o.y < *best)) best = o.y;
    out.push_back(best);
  }
  return out;
}

Models fit_models(std::span<const Observation> history, const RunConfig& config,
                  std::optional<double> penalty, std::uint64_t seed) {
  Models models;
  models.incumbent.y_plus = best_seen(history, history.size());

  TrainingSet regression;
  regression.dim = history.empty() ? 0 : history.front().x.size();
  for (const auto& o : history) {
    if (o.feasible()) {
      regression.add(o.x.values(), *o.y);
    } else if (config.handling == ConstraintHandling::penalty && penalty) {
      regression.add(o.x.values(), *penalty);
    }
  }
  if (!regression.targets.empty()) {
    models.incumbent.y_worst = *std::max_element(regression.targets.begin(), regression.targets.end());
  }
  const bool usable = config.handling == ConstraintHandling::classifier || penalty.has_value();
  if (usable && models.incumbent.y_plus) {
    try {
      models.regressor = RegressionForest::fit(std::move(regression), config.forest, mix_seed(seed, 0));
    } catch (const ModelUnavailable&) {
    }
  }
  if (config.handling == ConstraintHandling::classifier && !history.empty()) {
    models.classifier = fit_classifier(history, config.classifier, mix_seed(seed, 1));
  }
  return models;
}

ControlVector propose_next(const std::set<ControlVector>& evaluated, const Models& models,
                           const ThresholdSpace& space, const RunConfig& config,
                           std::uint64_t seed, Proposer* tag) {
  const FeasibilityForest* classifier = models.classifier ? &*models.classifier : nullptr;
  const bool informative = models.regressor.has_value() ||
                           (classifier != nullptr && !classifier->is_constant());
  Rng rng(mix_seed(seed, 1));
  if (!informative) {
    if (tag) *tag = Proposer::random;
    return random_unevaluated(evaluated, space, rng);
  }

  const RegressionForest* regressor = models.regressor ? &*models.regressor : nullptr;
  const ScoreFn fn = [&](const ControlVector& x) {
    return score(regressor, classifier, x, config.acquisition, models.incumbent);
  };
  FocusConfig focus = config.focus;
  focus.seed = mix_seed(seed, 0);
  FocusResult result = maximize(fn, space, focus);

  if (tag) *tag = Proposer::acquisition;
  if (!evaluated.contains(result.x)) return result.x;
  for (const auto& candidate : result.population) {
    if (!evaluated.contains(candidate.x)) return candidate.x;
  }
  if (tag) *tag = Proposer::random;
  return random_unevaluated(evaluated, space, rng);
}

RunTrace run(const ThresholdSpace& space, const Evaluator& evaluator, const RunConfig& config,
             std::optional<std::vector<ControlVector>> initial_design) {
  config.check();
  std::vector<ControlVector> design =
      initial_design ? std::move(*initial_design)
                     : lhs_sample(space, config.init_design_size, stream_seed(config.seed, kInitDesign, 0));
  if (design.size() != config.init_design_size) {
    throw std::invalid_argument("initial design size does not match init_design_size");
  }

  RunTrace trace;
  std::vector<Observation> history;
  std::set<ControlVector> evaluated;
  std::optional<double> best;
  auto record = [&](const ControlVector& x, Proposer proposer) {
    if (!validate(x, space).admissible()) {
      throw std::logic_error("optimizer produced an inadmissible point");
    }
    Observation obs = evaluator(x);
    obs.x = x;
    if (obs.y && (!best || *obs.y < *best)) best = obs.y;
    history.push_back(obs);
    evaluated.insert(x);
    trace.entries.push_back({std::move(obs), proposer, best});
  };

  for (const auto& x : design) record(x, Proposer::init);

  std::optional<double> penalty = config.penalty_value;
  for (std::size_t n = 0; n < config.budget; ++n) {
    if (config.handling == ConstraintHandling::penalty && !penalty) {
      // First feasible point defines the penalty scale: the initial design
      // when it has feasible runs, otherwise the first feasible evaluation.
      std::optional<double> worst;
      for (const auto& o : history) {
        if (o.y && (!worst || *o.y > *worst)) worst = o.y;
      }
      if (worst) penalty = config.penalty_factor * *worst;
    }
    const Models models = fit_models(history, config, penalty, stream_seed(config.seed, kModels, n));
    Proposer tag = Proposer::acquisition;
    const ControlVector x =
        propose_next(evaluated, models, space, config, stream_seed(config.seed, kFocus, n), &tag);
    record(x, tag);
  }
  return trace;
}

}  // namespace pumpopt
