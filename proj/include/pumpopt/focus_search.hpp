#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "pumpopt/space.hpp"

namespace pumpopt {

struct FocusConfig {
  std::size_t points_per_iter = 1000;
  std::size_t shrink_iters = 5;
  std::size_t restarts = 3;
  std::uint64_t seed = 0;
};

using ScoreFn = std::function<double(const ControlVector&)>;

struct ScoredPoint {
  ControlVector x;
  double score;
};

struct FocusResult {
  ControlVector x;
  double score;
  /// Every distinct candidate scored, best first (score descending, then
  /// lexicographically smallest x).
  std::vector<ScoredPoint> population;
};

/// Focused space around `center`: each discrete set keeps a window of
/// ceil(N / 2^level) consecutive members containing the center, and each
/// continuous interval keeps width / 2^level around it, clipped to the
/// original bounds. Level 0 returns the original space.
ThresholdSpace shrink(const ThresholdSpace& space, const ControlVector& center, std::size_t level);

/// Maximizes score_fn by random sampling with shrinking and restarts.
///
/// Each restart samples points_per_iter candidates from the full space, then
/// shrink_iters more rounds, each in the space focused around the restart's
/// best point so far. Discrete spaces with no more admissible points than
/// points_per_iter are enumerated instead. Ties go to the lexicographically
/// smallest vector.
FocusResult maximize(const ScoreFn& score_fn, const ThresholdSpace& space,
                     const FocusConfig& config);

}  // namespace pumpopt
