#include "pumpopt/acquisition.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pumpopt {

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::lcb: return "lcb";
    case AcquisitionKind::ei: return "ei";
    case AcquisitionKind::aei: return "aei";
  }
  return "?";
}

AcquisitionKind parse_acquisition(const std::string& name) {
  if (name == "ei") return AcquisitionKind::ei;
  if (name == "aei") return AcquisitionKind::aei;
  if (name == "lcb") return AcquisitionKind::lcb;
  throw std::invalid_argument("unknown acquisition '" + name + "' (expected ei, aei or lcb)");
}

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double std_normal_cdf(double z) {
  // erfc keeps full relative precision in the lower tail.
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double lcb(double mu, double sigma, double beta) { return mu - beta * sigma; }

double ei(double mu, double sigma, double y_plus) {
  if (!(sigma > 0.0)) return 0.0;
  const double gap = y_plus - mu;
  const double z = gap / sigma;
  // Clamp guards against tiny negative values from cancellation far above y_plus.
  return std::max(0.0, gap * std_normal_cdf(z) + sigma * std_normal_pdf(z));
}

double aei(double mu, double sigma, double y_plus, double sigma_eps) {
  if (!(sigma > 0.0)) return 0.0;
  if (sigma_eps == 0.0) return ei(mu, sigma, y_plus);
  const double factor = 1.0 - sigma_eps / std::sqrt(sigma_eps * sigma_eps + sigma * sigma);
  return ei(mu, sigma, y_plus) * factor;
}

double score(const RegressionForest* model, const FeasibilityForest* feasibility,
             const ControlVector& x, const AcqConfig& config, const IncumbentState& incumbent) {
  const bool weighted = config.feasibility_weighting && feasibility != nullptr;
  if (model == nullptr) {
    if (feasibility == nullptr) throw ModelUnavailable("no model available for scoring");
    return feasibility_prob(*feasibility, x);
  }
  const Prediction pred = predict(*model, x);
  double raw = 0.0;
  switch (config.kind) {
    case AcquisitionKind::lcb: {
      const double value = lcb(pred.mu, pred.sigma, config.beta);
      if (!weighted) return -value;
      return feasibility_prob(*feasibility, x) * (incumbent.y_worst - value);
    }
    case AcquisitionKind::ei:
    case AcquisitionKind::aei:
      if (!incumbent.y_plus) throw ModelUnavailable("EI needs a feasible incumbent");
      raw = config.kind == AcquisitionKind::ei
                ? ei(pred.mu, pred.sigma, *incumbent.y_plus)
                : aei(pred.mu, pred.sigma, *incumbent.y_plus, config.sigma_eps);
      break;
  }
  if (!weighted || raw == 0.0) return raw;
  return raw * feasibility_prob(*feasibility, x);
}

}  // namespace pumpopt
