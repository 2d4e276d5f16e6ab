#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pumpopt/surrogate.hpp"

using namespace pumpopt;

namespace {

ForestParams exact_params() {
  return ForestParams{.num_trees = 20, .features_per_split = 0, .min_leaf = 1, .bootstrap = false};
}

TrainingSet one_dim(const std::vector<double>& xs, const std::vector<double>& ys) {
  TrainingSet set;
  set.dim = 1;
  for (std::size_t i = 0; i < xs.size(); ++i) set.add(std::vector<double>{xs[i]}, ys[i]);
  return set;
}

// 50 points of a noise-free step function on [0, 1).
TrainingSet step_data() {
  std::vector<double> xs;
  std::vector<double> ys;
  for (int i = 0; i < 50; ++i) {
    const double x = (i + 0.5) / 50.0;
    xs.push_back(x);
    ys.push_back(x < 0.3 ? 1.0 : (x < 0.7 ? 4.0 : -2.0) + 0.01 * i);
  }
  return one_dim(xs, ys);
}

TrainingSet make_data(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  TrainingSet set;
  set.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dim);
    double y = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      x[k] = rng.uniform(-1.0, 1.0);
      y += (k + 1.0) * x[k] * x[k];
    }
    set.add(x, y);
  }
  return set;
}

double population_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double a : v) mean += a;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double a : v) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("constant targets give mu = 7 and sigma = 0 everywhere") {
  auto data = make_data(30, 3, 1);
  std::fill(data.targets.begin(), data.targets.end(), 7.0);
  const auto model = RegressionForest::fit(data, ForestParams{}, 5);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const auto p = model.predict(x);
    CHECK(p.mu == 7.0);
    CHECK(p.sigma == 0.0);
  }
}

TEST_CASE("regression needs two distinct points") {
  CHECK_THROWS_AS(RegressionForest::fit(one_dim({1.0}, {2.0}), ForestParams{}, 0), ModelUnavailable);
  CHECK_THROWS_AS(RegressionForest::fit(one_dim({1.0, 1.0, 1.0}, {2.0, 3.0, 4.0}), ForestParams{}, 0),
                  ModelUnavailable);

  std::vector<Observation> obs{{{25.0, 30.0}, 10.0}, {{25.0, 30.0}, 10.0}, {{26.0, 30.0}, std::nullopt}};
  CHECK_THROWS_AS(fit_regressor(obs, ForestParams{}, 0), ModelUnavailable);
}

TEST_CASE("full-depth trees without bootstrap reproduce every training target") {
  const auto data = step_data();
  const auto model = RegressionForest::fit(data, exact_params(), 3);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto p = model.predict(data.row(i));
    CHECK(p.mu == data.targets[i]);
    CHECK(p.sigma == 0.0);
  }

  const auto multi = make_data(50, 4, 8);
  const auto model4 = RegressionForest::fit(multi, exact_params(), 3);
  for (std::size_t i = 0; i < multi.rows(); ++i) CHECK(model4.predict(multi.row(i)).mu == multi.targets[i]);
}

TEST_CASE("prediction statistics match the per-tree predictions") {
  const auto data = make_data(80, 3, 4);
  ForestParams params;
  params.num_trees = 50;
  const auto model = RegressionForest::fit(data, params, 9);
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto per_tree = model.tree_predictions(x);
    const auto p = model.predict(x);
    const auto [lo, hi] = std::minmax_element(per_tree.begin(), per_tree.end());
    CHECK(p.mu >= *lo);
    CHECK(p.mu <= *hi);
    double mean = 0.0;
    for (double v : per_tree) mean += v;
    mean /= static_cast<double>(per_tree.size());
    CHECK(p.mu == doctest::Approx(mean).epsilon(1e-12));
    CHECK(p.sigma >= 0.0);
    CHECK(p.sigma == doctest::Approx(population_std(per_tree)).epsilon(1e-9));

    auto reversed = per_tree;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(population_std(reversed) == doctest::Approx(p.sigma).epsilon(1e-9));
  }
}

TEST_CASE("a one-tree forest has zero spread") {
  ForestParams params;
  params.num_trees = 1;
  const auto model = RegressionForest::fit(make_data(40, 2, 3), params, 1);
  CHECK(model.predict(std::vector<double>{0.1, 0.2}).sigma == 0.0);
}

TEST_CASE("leaves honor the minimum leaf size") {
  const auto data = make_data(120, 3, 12);
  ForestParams params;
  params.num_trees = 10;
  params.bootstrap = false;
  for (std::size_t min_leaf : {1u, 3u, 5u, 10u}) {
    params.min_leaf = min_leaf;
    const auto model = RegressionForest::fit(data, params, 2);
    for (const auto& tree : model.trees()) {
      std::map<std::size_t, std::size_t> counts;
      for (std::size_t i = 0; i < data.rows(); ++i) ++counts[tree.leaf_of(data.row(i))];
      CHECK(counts.size() == tree.leaf_count());
      for (const auto& [leaf, n] : counts) CHECK(n >= min_leaf);
    }
  }
}

TEST_CASE("fitting is deterministic given data, parameters and seed") {
  const auto data = make_data(60, 4, 21);
  ForestParams params;
  params.num_trees = 40;
  const auto a = RegressionForest::fit(data, params, 77);
  const auto b = RegressionForest::fit(data, params, 77);
  const auto c = RegressionForest::fit(data, params, 78);
  Rng rng(1);
  bool differs = false;
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto pa = a.predict(x);
    const auto pb = b.predict(x);
    CHECK(pa.mu == pb.mu);
    CHECK(pa.sigma == pb.sigma);
    differs = differs || c.predict(x).mu != pa.mu;
  }
  CHECK(differs);
}

TEST_CASE("predictions do not depend on training-set order") {
  const auto data = make_data(40, 3, 5);
  TrainingSet shuffled;
  shuffled.dim = data.dim;
  std::vector<std::size_t> order(data.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(17);
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t i : order) shuffled.add(data.row(i), data.targets[i]);

  for (bool bootstrap : {false, true}) {
    ForestParams params;
    params.num_trees = 30;
    params.min_leaf = 2;
    params.bootstrap = bootstrap;
    const auto a = RegressionForest::fit(data, params, 4);
    const auto b = RegressionForest::fit(shuffled, params, 4);
    for (int i = 0; i < 50; ++i) {
      const std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      CHECK(a.predict(x).mu == b.predict(x).mu);
      CHECK(a.predict(x).sigma == b.predict(x).sigma);
    }
  }
}

TEST_CASE("fit_regressor uses only feasible observations") {
  std::vector<Observation> obs;
  for (int i = 0; i < 10; ++i) {
    obs.push_back({{20.0 + i, 40.0}, 100.0 + i});
    obs.push_back({{20.5 + i, 40.0}, std::nullopt});
  }
  ForestParams params{.num_trees = 10, .features_per_split = 0, .min_leaf = 1, .bootstrap = false};
  const auto model = fit_regressor(obs, params, 1);
  for (int i = 0; i < 10; ++i) CHECK(predict(model, ControlVector{20.0 + i, 40.0}).mu == 100.0 + i);
}

TEST_CASE("single-class histories give constant feasibility models") {
  std::vector<Observation> feasible{{{1.0, 2.0}, 3.0}, {{2.0, 3.0}, 4.0}};
  std::vector<Observation> infeasible{{{1.0, 2.0}, std::nullopt}, {{2.0, 3.0}, std::nullopt}};
  const auto all_ok = fit_classifier(feasible, ForestParams{}, 1);
  const auto none_ok = fit_classifier(infeasible, ForestParams{}, 1);
  CHECK(all_ok.is_constant());
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const ControlVector x{rng.uniform(0, 5), rng.uniform(0, 5)};
    CHECK(feasibility_prob(all_ok, x) == 1.0);
    CHECK(feasibility_prob(none_ok, x) == 0.0);
  }
  CHECK_THROWS_AS(fit_classifier(std::vector<Observation>{}, ForestParams{}, 1), std::invalid_argument);
}

TEST_CASE("classifier separates a 1-D threshold and its 0.5 crossing is near the boundary") {
  constexpr double boundary = 0.37;
  std::vector<Observation> obs;
  for (int i = 0; i < 100; ++i) {
    const double x = (i + 0.5) / 100.0;
    obs.push_back({{x}, x < boundary ? std::optional<double>(1.0) : std::nullopt});
  }
  ForestParams params{.num_trees = 100, .features_per_split = 0, .min_leaf = 1, .bootstrap = true};
  const auto model = fit_classifier(obs, params, 11);

  int correct = 0;
  for (const auto& o : obs) {
    const double p = feasibility_prob(model, o.x);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    correct += (p >= 0.5) == o.feasible();
  }
  CHECK(correct >= 95);

  // Bisection on p(x) - 0.5 between a feasible and an infeasible end.
  double lo = 0.0;
  double hi = 1.0;
  REQUIRE(feasibility_prob(model, ControlVector{lo}) > 0.5);
  REQUIRE(feasibility_prob(model, ControlVector{hi}) < 0.5);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasibility_prob(model, ControlVector{mid}) > 0.5 ? lo : hi) = mid;
  }
  CHECK(std::abs(lo - boundary) <= 0.02);
}

TEST_CASE("probability stays within [0, 1] for random inputs") {
  std::vector<Observation> obs;
  Rng rng(44);
  for (int i = 0; i < 60; ++i) {
    const ControlVector x{rng.uniform(0, 1), rng.uniform(0, 1)};
    obs.push_back({x, x[0] + x[1] < 1.0 ? std::optional<double>(0.0) : std::nullopt});
  }
  const auto model = fit_classifier(obs, ForestParams{}, 2);
  for (int i = 0; i < 500; ++i) {
    const double p = feasibility_prob(model, ControlVector{rng.uniform(-1, 2), rng.uniform(-1, 2)});
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("model dump is versioned and lists every node") {
  ForestParams params;
  params.num_trees = 2;
  const auto model = RegressionForest::fit(make_data(20, 2, 1), params, 1);
  std::ostringstream out;
  model.dump(out);
  const auto text = out.str();
  CHECK(text.rfind("pumpopt-forest 1\nkind regression\n", 0) == 0);
  std::size_t lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  CHECK(lines == 4 + 2 + model.trees()[0].nodes().size() + model.trees()[1].nodes().size());
}
