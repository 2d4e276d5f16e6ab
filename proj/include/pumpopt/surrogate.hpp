#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pumpopt/space.hpp"

namespace pumpopt {

/// One evaluation of the black box. The objective is only defined on
/// feasible points, so y is present iff the run was feasible.
struct Observation {
  ControlVector x;
  std::optional<double> y;

  bool feasible() const { return y.has_value(); }
  bool operator==(const Observation&) const = default;
};

/// Raised when there is not enough data to fit a regression model.
class ModelUnavailable : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ForestParams {
  std::size_t num_trees = 300;
  /// 0 selects ceil(d / 3).
  std::size_t features_per_split = 0;
  std::size_t min_leaf = 5;
  bool bootstrap = true;

  std::size_t resolved_features(std::size_t dim) const;
};

struct Prediction {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Row-major feature matrix with one target per row.
struct TrainingSet {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<double> targets;

  std::size_t rows() const { return targets.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
  void add(std::span<const double> x, double target);
};

enum class SplitCriterion { variance, gini };

/// Axis-aligned binary tree stored as a flat node array. Samples with
/// x[feature] <= threshold go left.
class DecisionTree {
public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;
  };

  static DecisionTree fit(const TrainingSet& data, std::vector<std::size_t> samples,
                          SplitCriterion criterion, std::size_t features_per_split,
                          std::size_t min_leaf, Rng& rng);

  double predict(std::span<const double> x) const { return nodes_[leaf_of(x)].value; }
  /// Index of the leaf node that x falls into.
  std::size_t leaf_of(std::span<const double> x) const;
  std::span<const Node> nodes() const { return nodes_; }
  std::size_t leaf_count() const;

private:
  std::vector<Node> nodes_;
};

/// Bagged regression trees. mu is the mean of the per-tree predictions and
/// sigma their population standard deviation.
class RegressionForest {
public:
  /// Requires at least two distinct feature rows.
  static RegressionForest fit(TrainingSet data, const ForestParams& params, std::uint64_t seed);

  Prediction predict(std::span<const double> x) const;
  std::vector<double> tree_predictions(std::span<const double> x) const;
  std::span<const DecisionTree> trees() const { return trees_; }
  std::size_t dim() const { return dim_; }

  void dump(std::ostream& out) const;

private:
  std::vector<DecisionTree> trees_;
  std::size_t dim_ = 0;
};

/// Bagged classification trees over feasibility labels. A history with a
/// single class yields a constant model.
class FeasibilityForest {
public:
  static FeasibilityForest fit(TrainingSet data, const ForestParams& params, std::uint64_t seed);

  /// Fraction of trees voting feasible; a tied leaf counts as half a vote.
  double probability(std::span<const double> x) const;
  bool is_constant() const { return constant_.has_value(); }
  std::span<const DecisionTree> trees() const { return trees_; }

  void dump(std::ostream& out) const;

private:
  std::vector<DecisionTree> trees_;
  std::optional<double> constant_;
};

/// Fits on the feasible observations only. Throws ModelUnavailable with
/// fewer than two distinct feasible points.
RegressionForest fit_regressor(std::span<const Observation> data, const ForestParams& params,
                               std::uint64_t seed);

/// Fits on every observation using its feasibility label. Throws
/// std::invalid_argument on an empty history.
FeasibilityForest fit_classifier(std::span<const Observation> data, const ForestParams& params,
                                 std::uint64_t seed);

Prediction predict(const RegressionForest& model, const ControlVector& x);
double feasibility_prob(const FeasibilityForest& model, const ControlVector& x);

}  // namespace pumpopt
