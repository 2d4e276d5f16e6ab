#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pumpopt/random.hpp"

namespace pumpopt {

/// Thrown when a vector's length does not match the space dimension.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown by enumeration when the admissible count exceeds the ceiling.
class EnumerationLimitError : public std::runtime_error {
public:
  EnumerationLimitError(std::uint64_t count, std::uint64_t ceiling);
  std::uint64_t count() const { return count_; }

private:
  std::uint64_t count_;
};

/// Strictly increasing list of threshold levels, in meters of head.
class DiscreteSet {
public:
  explicit DiscreteSet(std::vector<double> values);
  DiscreteSet(std::initializer_list<double> values) : DiscreteSet(std::vector<double>(values)) {}

  /// Uniform grid min, min + step, ..., max. (max - min) must be a multiple of step.
  static DiscreteSet from_range(double min, double max, double step);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

  bool contains(double v) const;
  std::size_t nearest_index(double v) const;
  double nearest(double v) const { return values_[nearest_index(v)]; }

  /// Members with index in [first, last).
  DiscreteSet slice(std::size_t first, std::size_t last) const;

  bool operator==(const DiscreteSet&) const = default;

private:
  std::vector<double> values_;
};

enum class SpaceMode { discrete, continuous };

std::string to_string(SpaceMode mode);
SpaceMode parse_space_mode(const std::string& text);

/// Domain of a single threshold variable. In continuous mode only the
/// interval [lo, hi] matters; in discrete mode the set does and lo/hi mirror
/// its extremes.
struct VariableDomain {
  DiscreteSet set;
  double lo;
  double hi;

  explicit VariableDomain(DiscreteSet s) : set(std::move(s)), lo(set.min()), hi(set.max()) {}
  VariableDomain(DiscreteSet s, double lo_, double hi_) : set(std::move(s)), lo(lo_), hi(hi_) {}
};

/// A candidate control rule: d = 2*tau threshold values.
///
/// Index j in [0, tau) is a lower threshold paired with the upper threshold at
/// j + tau. Comparison is lexicographic, which is the tie-break order used by
/// the acquisition optimizer.
class ControlVector {
public:
  ControlVector() = default;
  explicit ControlVector(std::vector<double> values) : values_(std::move(values)) {}
  ControlVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }

  auto operator<=>(const ControlVector&) const = default;
  bool operator==(const ControlVector&) const = default;

private:
  std::vector<double> values_;
};

class ThresholdSpace {
public:
  /// One lower and one upper set per threshold pair. Every pair must admit at
  /// least one (lower <= upper) combination.
  ThresholdSpace(std::vector<DiscreteSet> lower, std::vector<DiscreteSet> upper,
                 SpaceMode mode = SpaceMode::discrete);

  /// Same lower/upper set for every pair.
  static ThresholdSpace uniform(std::size_t tau, const DiscreteSet& lower, const DiscreteSet& upper,
                                SpaceMode mode = SpaceMode::discrete);

  std::size_t tau() const { return domains_.size() / 2; }
  std::size_t dim() const { return domains_.size(); }
  SpaceMode mode() const { return mode_; }
  bool discrete() const { return mode_ == SpaceMode::discrete; }

  const VariableDomain& domain(std::size_t i) const { return domains_[i]; }
  bool is_lower(std::size_t i) const { return i < tau(); }
  std::size_t pair_of(std::size_t i) const { return i % tau(); }

  ThresholdSpace with_mode(SpaceMode mode) const;
  /// Replaces variable domains; used when focusing the space.
  ThresholdSpace with_domains(std::vector<VariableDomain> domains) const;

  /// Maps a value onto variable i's domain: nearest member (discrete) or
  /// clamp to the interval (continuous).
  double snap(std::size_t i, double v) const;

private:
  ThresholdSpace(std::vector<VariableDomain> domains, SpaceMode mode);
  void check_pairs() const;

  std::vector<VariableDomain> domains_;
  SpaceMode mode_;
};

struct ValidityReport {
  bool c1_ok = true;
  bool c2_ok = true;
  /// Variable indices outside their set (discrete) or interval (continuous).
  std::vector<std::size_t> c1_violations;
  /// Pair indices j with x[j] > x[j + tau].
  std::vector<std::size_t> c2_violations;

  bool admissible() const { return c1_ok && c2_ok; }
};

/// Checks set membership (c1) and pair ordering (c2) independently.
/// Throws DimensionError if x.size() != space.dim().
ValidityReport validate(const ControlVector& x, const ThresholdSpace& space);

/// Brings pair j into order: swap, snap into the domains, and resample the
/// pair if it still violates the ordering.
void repair_pair(const ThresholdSpace& space, ControlVector& x, std::size_t pair, Rng& rng);

/// Independent uniform draw per variable followed by pair repair.
ControlVector sample_uniform(const ThresholdSpace& space, Rng& rng);

struct LhsDesign {
  /// Pre-repair stratified coordinates in [0, 1), one row per sample.
  std::vector<std::vector<double>> unit;
  /// Admissible vectors after mapping and pair repair.
  std::vector<ControlVector> points;
};

LhsDesign lhs_design(const ThresholdSpace& space, std::size_t n, std::uint64_t seed);
std::vector<ControlVector> lhs_sample(const ThresholdSpace& space, std::size_t n, std::uint64_t seed);

inline constexpr std::uint64_t kDefaultEnumerationCeiling = 1'000'000;

/// Number of admissible vectors in discrete mode, saturating at UINT64_MAX.
std::uint64_t count_feasible(const ThresholdSpace& space);

/// Every admissible vector in discrete mode, pair 0 varying slowest.
/// Throws EnumerationLimitError if the count exceeds the ceiling.
std::vector<ControlVector> enumerate_feasible(const ThresholdSpace& space,
                                              std::uint64_t ceiling = kDefaultEnumerationCeiling);

/// Surrogate input features. Thresholds are already numeric, so this is the
/// identity.
std::vector<double> encode(const ControlVector& x);
ControlVector decode(std::span<const double> features, const ThresholdSpace& space);

}  // namespace pumpopt
