#pragma once

// Generalized Pareto peaks-over-threshold model: maximum likelihood fitting,
// sampling and N-year return levels with delta-method standard errors.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pare/error.hpp"

namespace pare {

inline constexpr double kTenthsMmPerInch = 254.0;
inline constexpr double kDaysPerYear = 365.25;
inline constexpr double kDefaultThreshold = 254.0;  // one inch, in tenths of mm

/// Survival function P(Y > y) of threshold excesses Y ~ GPD(scale, shape).
inline double gpd_survival(double excess, double scale, double shape) {
  if (excess <= 0.0) return 1.0;
  if (shape == 0.0) return std::exp(-excess / scale);
  const double z = 1.0 + shape * excess / scale;
  if (z <= 0.0) return 0.0;
  return std::exp(-std::log(z) / shape);
}

/// Draws one excess from GPD(scale, shape) by inversion.
template <class Rng>
double sample_gpd_excess(Rng& rng, double scale, double shape) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  const double tail = 1.0 - u;  // in (0, 1]
  if (std::abs(shape) < 1e-12) return -scale * std::log(tail);
  return scale / shape * (std::pow(tail, -shape) - 1.0);
}

/// Log-likelihood of excesses with value, gradient and Hessian in
/// (log scale, shape). Non-finite value outside the support.
struct GpdLikelihood {
  double value = -std::numeric_limits<double>::infinity();
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
  bool finite() const { return std::isfinite(value); }
};

inline GpdLikelihood gpd_loglik(std::span<const double> excess, double log_scale, double shape) {
  GpdLikelihood out;
  const double scale = std::exp(log_scale);
  const double k = static_cast<double>(excess.size());
  double sum_log_term = 0.0;  // sum (1 + 1/xi) log z
  double s1 = 0.0;            // sum t/z
  double s2 = 0.0;            // sum t/z^2
  double s3 = 0.0;            // sum t^2/z^2
  double g_xi = 0.0;          // sum (A/xi^2 - t/z), A = log z - xi t / z
  double h_xi = 0.0;          // sum (t^2/(xi z^2) - 2A/xi^3 + t^2/z^2)
  for (double y : excess) {
    const double t = y / scale;
    const double a = shape * t;
    const double z = 1.0 + a;
    if (!(z > 0.0)) return out;
    const double log_z = std::log1p(a);
    double log_z_over_xi;  // log(z)/xi
    double a_over_xi2;     // A/xi^2
    double cross;          // t^2/(xi z^2) - 2A/xi^3
    if (std::abs(a) < 1e-3) {
      // Series in a = xi t; exact at xi = 0.
      log_z_over_xi = t * (1.0 - a / 2.0 + a * a / 3.0 - a * a * a / 4.0 + a * a * a * a / 5.0);
      a_over_xi2 = t * t * (0.5 - 2.0 * a / 3.0 + 3.0 * a * a / 4.0 - 4.0 * a * a * a / 5.0 + 5.0 * a * a * a * a / 6.0);
      double acc = 0.0;
      double pw = 1.0;
      for (int m = 1; m <= 6; ++m) {
        acc += ((m % 2) ? -1.0 : 1.0) * m * (m + 1.0) / (m + 2.0) * pw;
        pw *= a;
      }
      cross = t * t * t * acc;
    } else {
      log_z_over_xi = log_z / shape;
      const double big_a = log_z - a / z;
      a_over_xi2 = big_a / (shape * shape);
      cross = t * t / (shape * z * z) - 2.0 * big_a / (shape * shape * shape);
    }
    sum_log_term += log_z + log_z_over_xi;
    s1 += t / z;
    s2 += t / (z * z);
    s3 += t * t / (z * z);
    g_xi += a_over_xi2 - t / z;
    h_xi += cross + t * t / (z * z);
  }
  out.value = -k * log_scale - sum_log_term;
  out.gradient << -k + (1.0 + shape) * s1, g_xi;
  out.hessian << -(1.0 + shape) * s2, s1 - (1.0 + shape) * s3, s1 - (1.0 + shape) * s3, h_xi;
  return out;
}

struct GpdParameters {
  double threshold = kDefaultThreshold;  // tenths of mm
  double scale = 1.0;                    // tenths of mm
  double shape = 0.0;
  double rate = 0.0;                                  // per-day exceedance probability
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();      // over (scale, shape, rate)
};

struct GpdFit {
  double threshold = kDefaultThreshold;
  double scale = 0.0;
  double shape = 0.0;
  double rate = 0.0;
  std::size_t n_exceed = 0;
  std::size_t n_days = 0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();  // over (scale, shape)
  bool cov_usable = true;                         // false when the observed information is not PD
  double rate_se = 0.0;
  double loglik = 0.0;
  int iterations = 0;

  double scale_se() const { return std::sqrt(std::max(0.0, cov(0, 0))); }
  double shape_se() const { return std::sqrt(std::max(0.0, cov(1, 1))); }

  GpdParameters parameters() const {
    GpdParameters p{threshold, scale, shape, rate, Eigen::Matrix3d::Zero()};
    p.cov.topLeftCorner<2, 2>() = cov;
    p.cov(2, 2) = rate_se * rate_se;
    return p;
  }
};

struct GpdFitOptions {
  std::size_t min_exceedances = 10;
  double shape_lower = -0.5;
  double shape_upper = 1.0;
  int max_iterations = 200;
  double gradient_tolerance = 1e-9;  // relative to the number of exceedances
};

namespace detail {

struct NewtonResult {
  double log_scale = 0.0;
  double shape = 0.0;
  GpdLikelihood lik;
  int iterations = 0;
  bool converged = false;
};

// Projected damped Newton ascent on (log scale, shape) with shape boxed.
inline NewtonResult newton_ascent(std::span<const double> excess, double log_scale, double shape,
                                  const GpdFitOptions& opt) {
  NewtonResult r{log_scale, shape, gpd_loglik(excess, log_scale, shape), 0, false};
  if (!r.lik.finite()) return r;
  const double k = static_cast<double>(excess.size());
  for (int it = 0; it < opt.max_iterations; ++it) {
    r.iterations = it + 1;
    const Eigen::Vector2d g = r.lik.gradient;
    const bool at_lo = r.shape <= opt.shape_lower && g(1) < 0.0;
    const bool at_hi = r.shape >= opt.shape_upper && g(1) > 0.0;
    const double pg_norm = (at_lo || at_hi) ? std::abs(g(0)) : g.norm();
    if (pg_norm < opt.gradient_tolerance * std::max(1.0, k)) {
      r.converged = true;
      return r;
    }
    Eigen::Vector2d dir;
    if (at_lo || at_hi) {
      const double h = -r.lik.hessian(0, 0);
      dir << (h > 0.0 ? g(0) / h : g(0) / std::max(1.0, k)), 0.0;
    } else {
      Eigen::Matrix2d info = -r.lik.hessian;
      double mu = 0.0;
      for (int tries = 0; tries < 60; ++tries) {
        Eigen::LLT<Eigen::Matrix2d> llt(info + mu * Eigen::Matrix2d::Identity());
        if (llt.info() == Eigen::Success) {
          dir = llt.solve(g);
          break;
        }
        mu = mu == 0.0 ? 1e-6 * std::max(1.0, info.diagonal().cwiseAbs().maxCoeff()) : mu * 10.0;
        dir = g / std::max(1.0, k);
      }
    }
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const double ls_log_scale = r.log_scale + step * dir(0);
      const double ls_shape = std::clamp(r.shape + step * dir(1), opt.shape_lower, opt.shape_upper);
      GpdLikelihood trial = gpd_loglik(excess, ls_log_scale, ls_shape);
      if (trial.finite() && trial.value >= r.lik.value) {
        const bool moved = std::abs(ls_log_scale - r.log_scale) > 1e-15 || std::abs(ls_shape - r.shape) > 1e-15;
        r.log_scale = ls_log_scale;
        r.shape = ls_shape;
        r.lik = std::move(trial);
        improved = moved;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      // No ascent possible along the Newton direction: stationary up to rounding.
      r.converged = pg_norm < 1e-5 * std::max(1.0, k);
      return r;
    }
  }
  return r;
}

}  // namespace detail

/// Maximum likelihood GPD fit to values above `threshold`. `n_days` is the
/// number of observed days, used for the exceedance rate.
inline GpdFit fit_gpd(std::span<const double> values, double threshold, std::size_t n_days,
                      const GpdFitOptions& opt = {}) {
  if (values.size() < opt.min_exceedances)
    throw Error(Errc::TooFewExceedances, std::to_string(values.size()) + " exceedances, need " +
                                             std::to_string(opt.min_exceedances));
  if (n_days < values.size()) throw Error(Errc::InvalidArgument, "fewer observed days than exceedances");
  // Sorted excesses make the fit independent of the input order, bit for bit.
  std::vector<double> excess;
  excess.reserve(values.size());
  for (double v : values) {
    if (!(v > threshold)) throw Error(Errc::InvalidArgument, "value not above threshold");
    excess.push_back(v - threshold);
  }
  std::sort(excess.begin(), excess.end());

  const double k = static_cast<double>(excess.size());
  const double mean = std::accumulate(excess.begin(), excess.end(), 0.0) / k;
  double var = 0.0;
  for (double y : excess) var += (y - mean) * (y - mean);
  var /= std::max(1.0, k - 1.0);
  const double y_max = excess.back();

  std::vector<std::pair<double, double>> starts;  // (scale, shape)
  if (var > 0.0) {
    const double ratio = mean * mean / var;
    const double xi = std::clamp(0.5 * (1.0 - ratio), opt.shape_lower, opt.shape_upper);
    starts.emplace_back(0.5 * mean * (ratio + 1.0), xi);
  }
  starts.emplace_back(mean, 0.0);
  starts.emplace_back(mean * 0.8, 0.2);
  starts.emplace_back(mean * 1.2, -0.2);

  detail::NewtonResult best;
  bool have_best = false;
  int total_iterations = 0;
  for (auto [scale0, shape0] : starts) {
    if (shape0 < 0.0) scale0 = std::max(scale0, -shape0 * y_max * 1.05);
    if (!(scale0 > 0.0)) continue;
    auto r = detail::newton_ascent(excess, std::log(scale0), shape0, opt);
    total_iterations += r.iterations;
    if (!r.lik.finite() || !r.converged) continue;
    if (!have_best || r.lik.value > best.lik.value) {
      best = r;
      have_best = true;
    }
  }
  if (!have_best)
    throw Error(Errc::NonConvergence, "GPD likelihood maximisation failed from all starts (" +
                                          std::to_string(total_iterations) + " iterations, " +
                                          std::to_string(excess.size()) + " exceedances)");

  GpdFit fit;
  fit.threshold = threshold;
  fit.scale = std::exp(best.log_scale);
  fit.shape = best.shape;
  fit.n_exceed = excess.size();
  fit.n_days = n_days;
  fit.rate = k / static_cast<double>(n_days);
  fit.rate_se = std::sqrt(fit.rate * (1.0 - fit.rate) / static_cast<double>(n_days));
  fit.loglik = best.lik.value;
  fit.iterations = total_iterations;

  const Eigen::Matrix2d info = -best.lik.hessian;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(info);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    fit.cov_usable = false;
    fit.cov.setZero();
  } else {
    const Eigen::Matrix2d cov_theta = info.inverse();
    Eigen::Matrix2d jac = Eigen::Matrix2d::Identity();
    jac(0, 0) = fit.scale;  // d scale / d log scale
    fit.cov = jac * cov_theta * jac.transpose();
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose()).eval();
  }
  return fit;
}

struct ReturnLevelEstimate {
  double period = 0.0;  // years
  double level = 0.0;   // inches
  double se = 0.0;      // inches
};

/// Shape magnitudes below this use the exponential (shape = 0) form.
inline constexpr double kShapeZeroTolerance = 1e-6;

/// N-year return level in inches, with a delta-method standard error over
/// (scale, shape, rate).
inline ReturnLevelEstimate return_level(const GpdParameters& p, double period_years,
                                        double days_per_year = kDaysPerYear) {
  if (!(period_years >= 1.0)) throw Error(Errc::InvalidArgument, "return period must be at least one year");
  const double m = period_years * days_per_year * p.rate;
  if (!(m > 1.0))
    throw Error(Errc::SubAnnualReturn, "expected exceedances over the period is " + std::to_string(m));
  const double log_m = std::log(m);
  double level;
  Eigen::Vector3d grad;
  if (std::abs(p.shape) < kShapeZeroTolerance) {
    level = p.threshold + p.scale * log_m;
    grad << log_m, 0.5 * p.scale * log_m * log_m, p.scale / p.rate;
  } else {
    const double m_xi = std::exp(p.shape * log_m);
    level = p.threshold + p.scale / p.shape * (m_xi - 1.0);
    grad << (m_xi - 1.0) / p.shape, -p.scale / (p.shape * p.shape) * (m_xi - 1.0) + p.scale / p.shape * m_xi * log_m,
        p.scale * m_xi / p.rate;
  }
  const double var = grad.dot(p.cov * grad);
  return {period_years, level / kTenthsMmPerInch, std::sqrt(std::max(0.0, var)) / kTenthsMmPerInch};
}

inline ReturnLevelEstimate return_level(const GpdFit& fit, double period_years, double days_per_year = kDaysPerYear) {
  return return_level(fit.parameters(), period_years, days_per_year);
}

}  // namespace pare
