#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pumpopt/acquisition.hpp"
#include "pumpopt/focus_search.hpp"
#include "pumpopt/space.hpp"
#include "pumpopt/surrogate.hpp"

namespace pumpopt {

enum class ConstraintHandling {
  /// Regression on feasible points, forest classifier for feasibility.
  classifier,
  /// Infeasible points enter the regression with a penalty value.
  penalty,
};

std::string to_string(ConstraintHandling handling);
ConstraintHandling parse_constraint_handling(const std::string& text);

struct RunConfig {
  std::size_t init_design_size = 10;
  /// Evaluations after the initial design.
  std::size_t budget = 200;
  AcqConfig acquisition;
  ForestParams forest;
  ForestParams classifier{.num_trees = 300, .features_per_split = 0, .min_leaf = 1, .bootstrap = true};
  FocusConfig focus;
  std::uint64_t seed = 0;
  ConstraintHandling handling = ConstraintHandling::classifier;
  /// Fixed penalty; when absent, penalty_factor x the worst feasible cost of
  /// the initial design is used.
  std::optional<double> penalty_value;
  double penalty_factor = 2.0;

  void check() const;
};

enum class Proposer { init, acquisition, random };

std::string to_string(Proposer proposer);
Proposer parse_proposer(const std::string& text);

struct TraceEntry {
  Observation observation;
  Proposer proposer;
  /// Best feasible objective among the evaluations up to and including this one.
  std::optional<double> best_seen;
};

struct RunTrace {
  std::vector<TraceEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::vector<Observation> observations() const;
};

using Evaluator = std::function<Observation(const ControlVector&)>;

/// Models fitted on one history snapshot.
struct Models {
  std::optional<RegressionForest> regressor;
  std::optional<FeasibilityForest> classifier;
  IncumbentState incumbent;
};

/// Minimum feasible y among the first n observations; absent if none.
std::optional<double> best_seen(std::span<const Observation> observations, std::size_t n);
std::optional<double> best_seen(const RunTrace& trace, std::size_t n);
/// Running best-seen after each observation.
std::vector<std::optional<double>> best_seen_sequence(std::span<const Observation> observations);

/// Fits the surrogate(s) for the current history. A missing regressor means
/// too few distinct feasible points (or no penalty defined yet).
Models fit_models(std::span<const Observation> history, const RunConfig& config,
                  std::optional<double> penalty, std::uint64_t seed);

/// Maximizes the acquisition with focus-search. Falls back to feasibility
/// probability alone without a regressor, and to uniform sampling without
/// any informative model. A proposal equal to an evaluated point is replaced
/// by the best unevaluated candidate of the focus-search population.
ControlVector propose_next(const std::set<ControlVector>& evaluated, const Models& models,
                           const ThresholdSpace& space, const RunConfig& config,
                           std::uint64_t seed, Proposer* tag = nullptr);

/// Runs initial design + budget evaluations. The initial design is drawn by
/// LHS from the run seed unless one is supplied.
RunTrace run(const ThresholdSpace& space, const Evaluator& evaluator, const RunConfig& config,
             std::optional<std::vector<ControlVector>> initial_design = std::nullopt);

}  // namespace pumpopt
