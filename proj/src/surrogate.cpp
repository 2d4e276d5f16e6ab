#include "pumpopt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace pumpopt {

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;
};

class TreeBuilder {
public:
  TreeBuilder(const TrainingSet& data, SplitCriterion criterion, std::size_t mtry,
              std::size_t min_leaf, Rng& rng)
      : data_(data), criterion_(criterion), mtry_(std::max<std::size_t>(1, std::min(mtry, data.dim))),
        min_leaf_(std::max<std::size_t>(1, min_leaf)), rng_(rng), features_(data.dim) {}

  std::vector<DecisionTree::Node> build(std::vector<std::size_t> samples) {
    samples_ = std::move(samples);
    struct Pending {
      std::uint32_t node;
      std::size_t begin;
      std::size_t end;
    };
    std::vector<Pending> stack;
    nodes_.emplace_back();
    stack.push_back({0, 0, samples_.size()});
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const SplitChoice split = find_split(p.begin, p.end);
      if (split.feature < 0) {
        nodes_[p.node].value = leaf_value(p.begin, p.end);
        continue;
      }
      const auto f = static_cast<std::size_t>(split.feature);
      auto mid = std::stable_partition(
          samples_.begin() + static_cast<std::ptrdiff_t>(p.begin),
          samples_.begin() + static_cast<std::ptrdiff_t>(p.end),
          [&](std::size_t s) { return data_.row(s)[f] <= split.threshold; });
      const auto cut = static_cast<std::size_t>(mid - samples_.begin());
      const auto left = static_cast<std::uint32_t>(nodes_.size());
      nodes_.emplace_back();
      nodes_.emplace_back();
      auto& node = nodes_[p.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      node.value = leaf_value(p.begin, p.end);
      stack.push_back({left + 1, cut, p.end});
      stack.push_back({left, p.begin, cut});
    }
    return std::move(nodes_);
  }

private:
  double leaf_value(std::size_t begin, std::size_t end) const {
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += data_.targets[samples_[i]];
    return sum / static_cast<double>(end - begin);
  }

  bool is_pure(std::size_t begin, std::size_t end) const {
    const double first = data_.targets[samples_[begin]];
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (data_.targets[samples_[i]] != first) return false;
    }
    return true;
  }

  SplitChoice find_split(std::size_t begin, std::size_t end) {
    SplitChoice best;
    if (end - begin < 2 * min_leaf_ || is_pure(begin, end)) return best;

    std::iota(features_.begin(), features_.end(), std::size_t{0});
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::swap(features_[i], features_[i + rng_.below(features_.size() - i)]);
    }
    std::vector<std::size_t> tried(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(mtry_));
    std::vector<std::size_t> rest(features_.begin() + static_cast<std::ptrdiff_t>(mtry_), features_.end());
    std::sort(tried.begin(), tried.end());
    std::sort(rest.begin(), rest.end());

    for (std::size_t f : tried) consider(f, begin, end, best);
    // Sampled features may all be constant in this node; fall back to the
    // remaining ones so distinct points still separate.
    if (best.feature < 0) {
      for (std::size_t f : rest) {
        consider(f, begin, end, best);
        if (best.feature >= 0) break;
      }
    }
    return best;
  }

  void consider(std::size_t f, std::size_t begin, std::size_t end, SplitChoice& best) {
    const std::size_t n = end - begin;
    column_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = samples_[begin + i];
      column_[i] = {data_.row(s)[f], data_.targets[s]};
    }
    std::sort(column_.begin(), column_.end());

    double total = 0.0;
    for (const auto& [x, y] : column_) total += y;
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += column_[i].second;
      const std::size_t nl = i + 1;
      const std::size_t nr = n - nl;
      if (nl < min_leaf_ || nr < min_leaf_) continue;
      if (!(column_[i].first < column_[i + 1].first)) continue;
      const double right_sum = total - left_sum;
      double score;
      if (criterion_ == SplitCriterion::variance) {
        score = left_sum * left_sum / static_cast<double>(nl) +
                right_sum * right_sum / static_cast<double>(nr);
      } else {
        const double l0 = static_cast<double>(nl) - left_sum;
        const double r0 = static_cast<double>(nr) - right_sum;
        score = (left_sum * left_sum + l0 * l0) / static_cast<double>(nl) +
                (right_sum * right_sum + r0 * r0) / static_cast<double>(nr);
      }
      if (score > best.score) {
        best.score = score;
        best.feature = static_cast<int>(f);
        best.threshold = 0.5 * (column_[i].first + column_[i + 1].first);
      }
    }
  }

  const TrainingSet& data_;
  SplitCriterion criterion_;
  std::size_t mtry_;
  std::size_t min_leaf_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> samples_;
  std::vector<std::pair<double, double>> column_;
  std::vector<DecisionTree::Node> nodes_;
};

// Sorts rows lexicographically so fitted models do not depend on the order
// in which observations were supplied.
TrainingSet canonical(TrainingSet data) {
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ra = data.row(a);
    auto rb = data.row(b);
    const auto cmp = std::lexicographical_compare_three_way(ra.begin(), ra.end(), rb.begin(), rb.end());
    if (cmp != 0) return cmp < 0;
    return data.targets[a] < data.targets[b];
  });
  TrainingSet out;
  out.dim = data.dim;
  out.features.reserve(data.features.size());
  out.targets.reserve(data.targets.size());
  for (std::size_t i : order) out.add(data.row(i), data.targets[i]);
  return out;
}

std::vector<std::size_t> draw_samples(std::size_t n, bool bootstrap, Rng& rng) {
  std::vector<std::size_t> samples(n);
  if (bootstrap) {
    for (auto& s : samples) s = rng.below(n);
  } else {
    std::iota(samples.begin(), samples.end(), std::size_t{0});
  }
  return samples;
}

std::vector<DecisionTree> grow(const TrainingSet& data, const ForestParams& params,
                               SplitCriterion criterion, std::uint64_t seed) {
  if (params.num_trees == 0) throw std::invalid_argument("forest needs at least one tree");
  const std::size_t mtry = params.resolved_features(data.dim);
  std::vector<DecisionTree> trees;
  trees.reserve(params.num_trees);
  for (std::size_t t = 0; t < params.num_trees; ++t) {
    Rng rng(mix_seed(seed, t));
    trees.push_back(DecisionTree::fit(data, draw_samples(data.rows(), params.bootstrap, rng),
                                      criterion, mtry, params.min_leaf, rng));
  }
  return trees;
}

void dump_trees(std::ostream& out, std::span<const DecisionTree> trees) {
  out << "trees " << trees.size() << '\n';
  for (std::size_t t = 0; t < trees.size(); ++t) {
    out << "tree " << t << " nodes " << trees[t].nodes().size() << '\n';
    for (const auto& n : trees[t].nodes()) {
      out << n.feature << ' ' << n.threshold << ' ' << n.left << ' ' << n.right << ' ' << n.value
          << '\n';
    }
  }
}

TrainingSet to_training_set(std::span<const Observation> data, bool feasible_only) {
  TrainingSet set;
  set.dim = data.empty() ? 0 : data.front().x.size();
  for (const auto& obs : data) {
    if (obs.x.size() != set.dim) throw DimensionError("observations have mixed dimensions");
    if (feasible_only) {
      if (obs.feasible()) set.add(obs.x.values(), *obs.y);
    } else {
      set.add(obs.x.values(), obs.feasible() ? 1.0 : 0.0);
    }
  }
  return set;
}

}  // namespace

std::size_t ForestParams::resolved_features(std::size_t dim) const {
  if (features_per_split > 0) return std::min(features_per_split, dim);
  return std::max<std::size_t>(1, (dim + 2) / 3);
}

void TrainingSet::add(std::span<const double> x, double target) {
  if (x.size() != dim) throw DimensionError("training row has the wrong dimension");
  features.insert(features.end(), x.begin(), x.end());
  targets.push_back(target);
}

DecisionTree DecisionTree::fit(const TrainingSet& data, std::vector<std::size_t> samples,
                               SplitCriterion criterion, std::size_t features_per_split,
                               std::size_t min_leaf, Rng& rng) {
  if (samples.empty()) throw std::invalid_argument("tree needs at least one sample");
  DecisionTree tree;
  tree.nodes_ = TreeBuilder(data, criterion, features_per_split, min_leaf, rng).build(std::move(samples));
  return tree;
}

std::size_t DecisionTree::leaf_of(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& node = nodes_[i];
    i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return i;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

RegressionForest RegressionForest::fit(TrainingSet data, const ForestParams& params,
                                       std::uint64_t seed) {
  if (data.rows() < 2) throw ModelUnavailable("regression needs at least two observations");
  data = canonical(std::move(data));
  bool distinct = false;
  for (std::size_t i = 1; i < data.rows() && !distinct; ++i) {
    auto a = data.row(0);
    auto b = data.row(i);
    distinct = !std::equal(a.begin(), a.end(), b.begin());
  }
  if (!distinct) throw ModelUnavailable("regression needs at least two distinct points");

  RegressionForest forest;
  forest.dim_ = data.dim;
  forest.trees_ = grow(data, params, SplitCriterion::variance, seed);
  return forest;
}

std::vector<double> RegressionForest::tree_predictions(std::span<const double> x) const {
  std::vector<double> out(trees_.size());
  for (std::size_t t = 0; t < trees_.size(); ++t) out[t] = trees_[t].predict(x);
  return out;
}

Prediction RegressionForest::predict(std::span<const double> x) const {
  if (x.size() != dim_) throw DimensionError("prediction input has the wrong dimension");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sum = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (const auto& tree : trees_) {
    const double v = tree.predict(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
    ++k;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  if (lo == hi) return {lo, 0.0};
  const double n = static_cast<double>(trees_.size());
  return {std::clamp(sum / n, lo, hi), std::sqrt(std::max(0.0, m2) / n)};
}

void RegressionForest::dump(std::ostream& out) const {
  out << "pumpopt-forest 1\nkind regression\ndim " << dim_ << '\n';
  dump_trees(out, trees_);
}

FeasibilityForest FeasibilityForest::fit(TrainingSet data, const ForestParams& params,
                                         std::uint64_t seed) {
  if (data.rows() == 0) throw std::invalid_argument("classifier needs at least one observation");
  FeasibilityForest forest;
  const auto positives = std::count(data.targets.begin(), data.targets.end(), 1.0);
  const auto n = static_cast<std::ptrdiff_t>(data.rows());
  if (positives == 0 || positives == n) {
    forest.constant_ = positives == n ? 1.0 : 0.0;
    return forest;
  }
  data = canonical(std::move(data));
  forest.trees_ = grow(data, params, SplitCriterion::gini, seed);
  return forest;
}

double FeasibilityForest::probability(std::span<const double> x) const {
  if (constant_) return *constant_;
  double votes = 0.0;
  for (const auto& tree : trees_) {
    const double leaf = tree.predict(x);
    votes += leaf > 0.5 ? 1.0 : (leaf == 0.5 ? 0.5 : 0.0);
  }
  return votes / static_cast<double>(trees_.size());
}

void FeasibilityForest::dump(std::ostream& out) const {
  out << "pumpopt-forest 1\nkind classification\n";
  if (constant_) {
    out << "constant " << *constant_ << '\n';
    return;
  }
  dump_trees(out, trees_);
}

RegressionForest fit_regressor(std::span<const Observation> data, const ForestParams& params,
                               std::uint64_t seed) {
  return RegressionForest::fit(to_training_set(data, true), params, seed);
}

FeasibilityForest fit_classifier(std::span<const Observation> data, const ForestParams& params,
                                 std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("classifier needs at least one observation");
  return FeasibilityForest::fit(to_training_set(data, false), params, seed);
}

Prediction predict(const RegressionForest& model, const ControlVector& x) {
  return model.predict(x.values());
}

double feasibility_prob(const FeasibilityForest& model, const ControlVector& x) {
  return model.probability(x.values());
}

}  // namespace pumpopt
