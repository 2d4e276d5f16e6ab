#include "pumpopt/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pumpopt {

namespace {

constexpr double kMemberTolerance = 1e-9;

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

// Admissible (lower, upper) index pairs of one pair slot, lower index major.
std::vector<std::pair<std::size_t, std::size_t>> admissible_pairs(const DiscreteSet& lower,
                                                                  const DiscreteSet& upper) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < lower.size(); ++a) {
    auto first = std::lower_bound(upper.values().begin(), upper.values().end(), lower[a]);
    for (auto it = first; it != upper.values().end(); ++it) {
      out.emplace_back(a, static_cast<std::size_t>(it - upper.values().begin()));
    }
  }
  return out;
}

double draw(const ThresholdSpace& space, std::size_t i, Rng& rng) {
  const auto& dom = space.domain(i);
  if (space.discrete()) return dom.set[rng.below(dom.set.size())];
  return rng.uniform(dom.lo, dom.hi);
}

}  // namespace

EnumerationLimitError::EnumerationLimitError(std::uint64_t count, std::uint64_t ceiling)
    : std::runtime_error("enumeration refused: " + std::to_string(count) +
                         " admissible vectors exceed the ceiling of " + std::to_string(ceiling)),
      count_(count) {}

DiscreteSet::DiscreteSet(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("discrete set must not be empty");
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!(values_[i] > values_[i - 1])) {
      throw std::invalid_argument("discrete set values must be strictly increasing");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("discrete set values must be finite");
  }
}

DiscreteSet DiscreteSet::from_range(double min, double max, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  if (!(max >= min)) throw std::invalid_argument("range max must not be below min");
  const double steps = (max - min) / step;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
    throw std::invalid_argument("range width is not a multiple of the step");
  }
  const auto n = static_cast<std::size_t>(rounded) + 1;
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = min + static_cast<double>(i) * step;
  values.back() = max;
  return DiscreteSet(std::move(values));
}

bool DiscreteSet::contains(double v) const {
  return std::abs(values_[nearest_index(v)] - v) <= kMemberTolerance;
}

std::size_t DiscreteSet::nearest_index(double v) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), v);
  if (it == values_.begin()) return 0;
  if (it == values_.end()) return values_.size() - 1;
  const auto hi = static_cast<std::size_t>(it - values_.begin());
  // Ties go to the lower member.
  return (v - values_[hi - 1] <= values_[hi] - v) ? hi - 1 : hi;
}

DiscreteSet DiscreteSet::slice(std::size_t first, std::size_t last) const {
  return DiscreteSet(std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                         values_.begin() + static_cast<std::ptrdiff_t>(last)));
}

std::string to_string(SpaceMode mode) {
  return mode == SpaceMode::discrete ? "discrete" : "continuous";
}

SpaceMode parse_space_mode(const std::string& text) {
  if (text == "discrete") return SpaceMode::discrete;
  if (text == "continuous" || text == "continuous-relaxed") return SpaceMode::continuous;
  throw std::invalid_argument("unknown space mode '" + text + "'");
}

ThresholdSpace::ThresholdSpace(std::vector<DiscreteSet> lower, std::vector<DiscreteSet> upper,
                               SpaceMode mode)
    : mode_(mode) {
  if (lower.empty()) throw std::invalid_argument("space needs at least one threshold pair");
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("lower and upper set counts differ");
  }
  domains_.reserve(lower.size() * 2);
  for (auto& s : lower) domains_.emplace_back(std::move(s));
  for (auto& s : upper) domains_.emplace_back(std::move(s));
  check_pairs();
}

ThresholdSpace::ThresholdSpace(std::vector<VariableDomain> domains, SpaceMode mode)
    : domains_(std::move(domains)), mode_(mode) {
  check_pairs();
}

ThresholdSpace ThresholdSpace::uniform(std::size_t tau, const DiscreteSet& lower,
                                       const DiscreteSet& upper, SpaceMode mode) {
  return ThresholdSpace(std::vector<DiscreteSet>(tau, lower), std::vector<DiscreteSet>(tau, upper),
                        mode);
}

void ThresholdSpace::check_pairs() const {
  for (std::size_t j = 0; j < tau(); ++j) {
    const auto& lo = domains_[j];
    const auto& up = domains_[j + tau()];
    const double lower_min = discrete() ? lo.set.min() : lo.lo;
    const double upper_max = discrete() ? up.set.max() : up.hi;
    if (lower_min > upper_max) {
      throw std::invalid_argument("threshold pair " + std::to_string(j) +
                                  " admits no lower <= upper combination");
    }
  }
}

ThresholdSpace ThresholdSpace::with_mode(SpaceMode mode) const {
  std::vector<VariableDomain> domains;
  domains.reserve(domains_.size());
  for (const auto& d : domains_) domains.emplace_back(d.set);
  return ThresholdSpace(std::move(domains), mode);
}

ThresholdSpace ThresholdSpace::with_domains(std::vector<VariableDomain> domains) const {
  if (domains.size() != domains_.size()) throw DimensionError("domain count mismatch");
  return ThresholdSpace(std::move(domains), mode_);
}

double ThresholdSpace::snap(std::size_t i, double v) const {
  const auto& dom = domains_[i];
  if (discrete()) return dom.set.nearest(v);
  return std::clamp(v, dom.lo, dom.hi);
}

ValidityReport validate(const ControlVector& x, const ThresholdSpace& space) {
  if (x.size() != space.dim()) {
    throw DimensionError("control vector has " + std::to_string(x.size()) +
                         " coordinates, space expects " + std::to_string(space.dim()));
  }
  ValidityReport report;
  for (std::size_t i = 0; i < space.dim(); ++i) {
    const auto& dom = space.domain(i);
    const bool ok = space.discrete() ? dom.set.contains(x[i])
                                     : (x[i] >= dom.lo && x[i] <= dom.hi);
    if (!ok) report.c1_violations.push_back(i);
  }
  for (std::size_t j = 0; j < space.tau(); ++j) {
    if (x[j] > x[j + space.tau()]) report.c2_violations.push_back(j);
  }
  report.c1_ok = report.c1_violations.empty();
  report.c2_ok = report.c2_violations.empty();
  return report;
}

void repair_pair(const ThresholdSpace& space, ControlVector& x, std::size_t pair, Rng& rng) {
  const std::size_t lo = pair;
  const std::size_t up = pair + space.tau();
  auto fix = [&] {
    if (x[lo] > x[up]) std::swap(x[lo], x[up]);
    x[lo] = space.snap(lo, x[lo]);
    x[up] = space.snap(up, x[up]);
  };
  fix();
  constexpr int kResampleAttempts = 64;
  for (int attempt = 0; attempt < kResampleAttempts && x[lo] > x[up]; ++attempt) {
    x[lo] = draw(space, lo, rng);
    x[up] = draw(space, up, rng);
    fix();
  }
  if (x[lo] <= x[up]) return;

  // Narrow domains where random pairs almost never order: draw directly from
  // the admissible pairs.
  const auto& dl = space.domain(lo);
  const auto& du = space.domain(up);
  if (space.discrete()) {
    const auto pairs = admissible_pairs(dl.set, du.set);
    const auto& [a, b] = pairs[rng.below(pairs.size())];
    x[lo] = dl.set[a];
    x[up] = du.set[b];
  } else {
    x[lo] = rng.uniform(dl.lo, std::min(dl.hi, du.hi));
    x[up] = rng.uniform(std::max(x[lo], du.lo), du.hi);
  }
}

ControlVector sample_uniform(const ThresholdSpace& space, Rng& rng) {
  std::vector<double> values(space.dim());
  for (std::size_t i = 0; i < space.dim(); ++i) values[i] = draw(space, i, rng);
  ControlVector x(std::move(values));
  for (std::size_t j = 0; j < space.tau(); ++j) repair_pair(space, x, j, rng);
  return x;
}

LhsDesign lhs_design(const ThresholdSpace& space, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("LHS sample count must be at least 1");
  Rng rng(seed);
  const std::size_t d = space.dim();
  LhsDesign design;
  design.unit.assign(n, std::vector<double>(d));

  std::vector<std::size_t> strata(n);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t s = 0; s < n; ++s) strata[s] = s;
    rng.shuffle(std::span<std::size_t>(strata));
    for (std::size_t s = 0; s < n; ++s) {
      design.unit[s][k] = (static_cast<double>(strata[s]) + rng.uniform()) / static_cast<double>(n);
    }
  }

  design.points.reserve(n);
  for (const auto& row : design.unit) {
    std::vector<double> values(d);
    for (std::size_t k = 0; k < d; ++k) {
      const auto& dom = space.domain(k);
      const double lo = space.discrete() ? dom.set.min() : dom.lo;
      const double hi = space.discrete() ? dom.set.max() : dom.hi;
      values[k] = space.snap(k, lo + row[k] * (hi - lo));
    }
    ControlVector x(std::move(values));
    for (std::size_t j = 0; j < space.tau(); ++j) repair_pair(space, x, j, rng);
    design.points.push_back(std::move(x));
  }
  return design;
}

std::vector<ControlVector> lhs_sample(const ThresholdSpace& space, std::size_t n,
                                      std::uint64_t seed) {
  return lhs_design(space, n, seed).points;
}

std::uint64_t count_feasible(const ThresholdSpace& space) {
  if (!space.discrete()) throw std::invalid_argument("counting requires a discrete space");
  std::uint64_t total = 1;
  for (std::size_t j = 0; j < space.tau(); ++j) {
    const auto n = admissible_pairs(space.domain(j).set, space.domain(j + space.tau()).set).size();
    total = saturating_mul(total, n);
  }
  return total;
}

std::vector<ControlVector> enumerate_feasible(const ThresholdSpace& space, std::uint64_t ceiling) {
  if (!space.discrete()) throw std::invalid_argument("enumeration requires a discrete space");
  const std::uint64_t count = count_feasible(space);
  if (count > ceiling) throw EnumerationLimitError(count, ceiling);

  const std::size_t tau = space.tau();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> slots(tau);
  for (std::size_t j = 0; j < tau; ++j) {
    slots[j] = admissible_pairs(space.domain(j).set, space.domain(j + tau).set);
  }

  std::vector<ControlVector> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<std::size_t> odometer(tau, 0);
  std::vector<double> values(space.dim());
  while (true) {
    for (std::size_t j = 0; j < tau; ++j) {
      const auto& [a, b] = slots[j][odometer[j]];
      values[j] = space.domain(j).set[a];
      values[j + tau] = space.domain(j + tau).set[b];
    }
    out.emplace_back(values);
    std::size_t j = tau;
    while (j > 0) {
      --j;
      if (++odometer[j] < slots[j].size()) break;
      odometer[j] = 0;
      if (j == 0) return out;
    }
  }
}

std::vector<double> encode(const ControlVector& x) {
  return {x.values().begin(), x.values().end()};
}

ControlVector decode(std::span<const double> features, const ThresholdSpace& space) {
  if (features.size() != space.dim()) throw DimensionError("feature vector length mismatch");
  std::vector<double> values(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) values[i] = space.snap(i, features[i]);
  return ControlVector(std::move(values));
}

}  // namespace pumpopt
