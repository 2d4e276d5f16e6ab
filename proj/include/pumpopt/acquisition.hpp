#pragma once

#include <optional>
#include <string>

#include "pumpopt/space.hpp"
#include "pumpopt/surrogate.hpp"

namespace pumpopt {

enum class AcquisitionKind { lcb, ei, aei };

std::string to_string(AcquisitionKind kind);
/// Accepts "ei", "aei" and "lcb".
AcquisitionKind parse_acquisition(const std::string& name);

struct AcqConfig {
  AcquisitionKind kind = AcquisitionKind::ei;
  /// Exploration weight for LCB.
  double beta = 1.0;
  /// Observation noise standard deviation for AEI, objective units.
  double sigma_eps = 0.0;
  bool feasibility_weighting = true;
};

/// Objective statistics of the current history (minimization).
struct IncumbentState {
  /// Best feasible objective seen so far; absent before the first feasible run.
  std::optional<double> y_plus;
  /// Largest regression target. Upper-bounds every forest mean, so
  /// y_worst - LCB is non-negative and can be scaled by a probability.
  double y_worst = 0.0;
};

double std_normal_pdf(double z);
double std_normal_cdf(double z);

/// mu - beta * sigma. Smaller is more promising.
double lcb(double mu, double sigma, double beta);

/// Expected improvement below y_plus; exactly 0 when sigma is 0.
double ei(double mu, double sigma, double y_plus);

/// EI scaled by 1 - sigma_eps / sqrt(sigma_eps^2 + sigma^2); 0 when sigma is 0.
double aei(double mu, double sigma, double y_plus, double sigma_eps);

/// Promise of x under the configured acquisition, oriented so that larger
/// is better.
///
/// EI and AEI are returned as-is and LCB is negated. With feasibility
/// weighting on, EI/AEI are multiplied by p(x), and LCB becomes
/// p(x) * (y_worst - LCB(x)) so that the weighted quantity is non-negative.
/// Passing no regression model scores by p(x) alone (cold start). Throws
/// ModelUnavailable if the required model is missing.
double score(const RegressionForest* model, const FeasibilityForest* feasibility,
             const ControlVector& x, const AcqConfig& config, const IncumbentState& incumbent);

}  // namespace pumpopt
