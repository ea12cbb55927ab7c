#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pare/error.hpp"
#include "pare/gpd.hpp"

namespace pare {

/// Region-level GPD parameters from one estimator, with standard errors.
struct RegionEstimate {
  std::string region_id;
  double scale = 0.0;
  double scale_se = 0.0;
  double shape = 0.0;
  double shape_se = 0.0;
  double rate = 0.0;
  double rate_se = 0.0;
  double scale_shape_cov = 0.0;
  std::vector<ReturnLevelEstimate> return_levels;

  GpdParameters parameters(double threshold) const {
    GpdParameters p{threshold, scale, shape, rate, Eigen::Matrix3d::Zero()};
    p.cov(0, 0) = scale_se * scale_se;
    p.cov(1, 1) = shape_se * shape_se;
    p.cov(2, 2) = rate_se * rate_se;
    p.cov(0, 1) = p.cov(1, 0) = scale_shape_cov;
    return p;
  }
};

struct RegionEstimates {
  std::string method;  // "pare", "block_kriging" or "regional_max"
  std::vector<RegionEstimate> regions;
};

struct BackTransformed {
  double scale = 0.0;
  double se = 0.0;
};

/// Mean and standard error of exp(Y) for Y with mean `beta_log` and variance
/// `var_log`: second-order Taylor for the mean, first-order for the error.
inline BackTransformed backtransform_logscale(double beta_log, double var_log) {
  if (!(var_log >= 0.0)) throw Error(Errc::InvalidArgument, "log-scale variance must be non-negative");
  const double e = std::exp(beta_log);
  return {e * (1.0 + 0.5 * var_log), e * std::sqrt(var_log)};
}

inline void compute_return_levels(RegionEstimates& est, double threshold, const std::vector<double>& periods,
                                  double days_per_year = kDaysPerYear) {
  for (RegionEstimate& r : est.regions) {
    r.return_levels.clear();
    for (double n : periods) r.return_levels.push_back(return_level(r.parameters(threshold), n, days_per_year));
  }
}

}  // namespace pare
