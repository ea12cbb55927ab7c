#pragma once

// Isotropic variogram models, binned empirical (cross-)variograms, weighted
// least-squares fitting and the two-variable linear model of coregionalization.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "pare/error.hpp"
#include "pare/geometry.hpp"

namespace pare {

enum class VariogramKind { Exponential, Spherical, Gaussian };

inline const char* to_string(VariogramKind k) {
  switch (k) {
    case VariogramKind::Exponential: return "exponential";
    case VariogramKind::Spherical: return "spherical";
    case VariogramKind::Gaussian: return "gaussian";
  }
  return "unknown";
}

inline VariogramKind parse_variogram_kind(std::string_view s) {
  if (s == "exponential" || s == "exp") return VariogramKind::Exponential;
  if (s == "spherical" || s == "sph") return VariogramKind::Spherical;
  if (s == "gaussian" || s == "gau") return VariogramKind::Gaussian;
  throw Error(Errc::InvalidArgument, "unknown variogram kind '" + std::string(s) + "'");
}

/// Unit correlation function of a structure; 1 at h = 0, decreasing to 0.
inline double correlation(VariogramKind kind, double h, double range) {
  const double t = h / range;
  switch (kind) {
    case VariogramKind::Exponential: return std::exp(-t);
    case VariogramKind::Spherical: return t >= 1.0 ? 0.0 : 1.0 - 1.5 * t + 0.5 * t * t * t;
    case VariogramKind::Gaussian: return std::exp(-t * t);
  }
  return 0.0;
}

struct VariogramModel {
  VariogramKind kind = VariogramKind::Exponential;
  double nugget = 0.0;
  double partial_sill = 1.0;
  double range = 1.0;  // miles
  bool degenerate = false;  // fit collapsed to a pure nugget

  double sill() const { return nugget + partial_sill; }

  double gamma(double h) const {
    if (h <= 0.0) return 0.0;
    return nugget + partial_sill * (1.0 - correlation(kind, h, range));
  }

  /// Covariance of the spatially structured component only.
  double structured_covariance(double h) const { return partial_sill * correlation(kind, h, range); }

  /// sill - gamma(h): covariance including the nugget as a discontinuity at 0.
  double covariance(double h) const { return sill() - gamma(h); }

  void validate() const {
    if (!(nugget >= 0.0) || !(partial_sill >= 0.0) || !(range > 0.0) || !(sill() > 0.0))
      throw Error(Errc::InvalidArgument, "variogram parameters must be non-negative with positive sill and range");
  }
};

struct VariogramBin {
  double lag = 0.0;  // mean pair distance in the bin
  double gamma = 0.0;
  std::size_t pairs = 0;
};

struct EmpiricalVariogram {
  std::vector<VariogramBin> bins;  // non-empty bins only
  std::size_t dropped_bins = 0;
  double max_dist = 0.0;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kDefaultVariogramBins = 15;

/// Half the largest pairwise distance.
inline double default_max_dist(const std::vector<Point>& points) {
  double m = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) m = std::max(m, distance(points[i], points[j]));
  return 0.5 * m;
}

/// Binned cross-semivariance 1/2 (a_i - a_j)(b_i - b_j); with a == b the ordinary
/// semivariance. Pairs farther apart than max_dist are ignored.
inline EmpiricalVariogram empirical_cross_variogram(const std::vector<Point>& points, const Eigen::VectorXd& a,
                                                    const Eigen::VectorXd& b, std::size_t n_bins, double max_dist) {
  const std::size_t n = points.size();
  if (n < 2) throw Error(Errc::InsufficientData, "variogram needs at least two points");
  if (static_cast<std::size_t>(a.size()) != n || static_cast<std::size_t>(b.size()) != n)
    throw Error(Errc::InvalidArgument, "values and points differ in length");
  if (!(max_dist > 0.0) || n_bins == 0) throw Error(Errc::InvalidArgument, "max_dist and n_bins must be positive");
  const double width = max_dist / static_cast<double>(n_bins);
  std::vector<double> lag_sum(n_bins, 0.0), g_sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double h = distance(points[i], points[j]);
      if (h > max_dist) continue;
      const auto k = std::min(n_bins - 1, static_cast<std::size_t>(h / width));
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      lag_sum[k] += h;
      g_sum[k] += 0.5 * (a(ii) - a(jj)) * (b(ii) - b(jj));
      ++count[k];
    }
  EmpiricalVariogram out;
  out.max_dist = max_dist;
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (count[k] == 0) {
      ++out.dropped_bins;
      out.warnings.push_back("empty variogram bin " + std::to_string(k) + " dropped");
      continue;
    }
    const auto c = static_cast<double>(count[k]);
    out.bins.push_back({lag_sum[k] / c, g_sum[k] / c, count[k]});
  }
  return out;
}

inline EmpiricalVariogram empirical_variogram(const std::vector<Point>& points, const Eigen::VectorXd& values,
                                              std::size_t n_bins, double max_dist) {
  return empirical_cross_variogram(points, values, values, n_bins, max_dist);
}

namespace detail {

struct LinearVariogramFit {
  double nugget = 0.0;
  double partial_sill = 0.0;
  double sse = 0.0;
};

/// WLS bin weights n_k / h_k^2.
inline std::vector<double> variogram_weights(const EmpiricalVariogram& emp) {
  double min_lag = std::numeric_limits<double>::infinity();
  for (const auto& b : emp.bins)
    if (b.lag > 0.0) min_lag = std::min(min_lag, b.lag);
  std::vector<double> w;
  for (const auto& b : emp.bins) {
    const double h = b.lag > 0.0 ? b.lag : 0.5 * min_lag;
    w.push_back(static_cast<double>(b.pairs) / (h * h));
  }
  return w;
}

/// gamma = nugget + partial_sill * g, solved in closed form for a fixed range.
/// With `nonnegative` the coefficients are restricted to [0, inf).
inline LinearVariogramFit fit_linear(const EmpiricalVariogram& emp, const std::vector<double>& w, VariogramKind kind,
                                     double range, bool nonnegative) {
  const std::size_t m = emp.bins.size();
  std::vector<double> g(m);
  for (std::size_t k = 0; k < m; ++k) g[k] = 1.0 - correlation(kind, emp.bins[k].lag, range);
  auto sse = [&](double n0, double s0) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += w[k] * std::pow(emp.bins[k].gamma - n0 - s0 * g[k], 2);
    return s;
  };
  double sw = 0, sg = 0, sgg = 0, sy = 0, sgy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    sw += w[k];
    sg += w[k] * g[k];
    sgg += w[k] * g[k] * g[k];
    sy += w[k] * emp.bins[k].gamma;
    sgy += w[k] * g[k] * emp.bins[k].gamma;
  }
  std::vector<LinearVariogramFit> candidates;
  const double det = sw * sgg - sg * sg;
  if (det > 1e-14 * sw * sgg) {
    const double s0 = (sw * sgy - sg * sy) / det;
    const double n0 = (sy - sg * s0) / sw;
    if (!nonnegative || (n0 >= 0.0 && s0 >= 0.0)) candidates.push_back({n0, s0, 0.0});
  }
  if (nonnegative) {
    candidates.push_back({0.0, sgg > 0.0 ? std::max(0.0, sgy / sgg) : 0.0, 0.0});
    candidates.push_back({std::max(0.0, sy / sw), 0.0, 0.0});
  } else if (candidates.empty()) {
    candidates.push_back({sy / sw, 0.0, 0.0});
  }
  for (auto& c : candidates) c.sse = sse(c.nugget, c.partial_sill);
  return *std::min_element(candidates.begin(), candidates.end(),
                           [](const auto& a, const auto& b) { return a.sse < b.sse; });
}

struct RangeBounds {
  double lo;
  double hi;
};

inline RangeBounds range_bounds(const EmpiricalVariogram& emp) {
  double max_lag = 0.0;
  for (const auto& b : emp.bins) max_lag = std::max(max_lag, b.lag);
  if (!(max_lag > 0.0)) max_lag = emp.max_dist;
  return {1e-3 * max_lag, 10.0 * max_lag};
}

/// Minimises `objective` over log-range: log-spaced scan, then Brent around the best point.
template <class F>
double minimise_over_range(F objective, RangeBounds rb) {
  const int n_grid = 80;
  const double llo = std::log(rb.lo), lhi = std::log(rb.hi);
  std::vector<double> grid(n_grid);
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_grid; ++k) {
    grid[k] = llo + (lhi - llo) * k / (n_grid - 1);
    const double v = objective(std::exp(grid[k]));
    if (v < best_val) {
      best_val = v;
      best = static_cast<std::size_t>(k);
    }
  }
  const double a = best == 0 ? grid[0] : grid[best - 1];
  const double b = best + 1 == grid.size() ? grid.back() : grid[best + 1];
  boost::uintmax_t iters = 200;
  const auto [x, fx] = boost::math::tools::brent_find_minima([&](double lr) { return objective(std::exp(lr)); }, a, b,
                                                             std::numeric_limits<double>::digits, iters);
  return fx <= best_val ? std::exp(x) : std::exp(grid[best]);
}

}  // namespace detail

/// Weighted least squares (weights = pair count / h^2) over nugget, partial sill
/// and range with nugget, partial sill >= 0. A fit whose structured part
/// vanishes, or whose range collapses to the lower bound, is returned as a pure
/// nugget with `degenerate` set.
inline VariogramModel fit_variogram(const EmpiricalVariogram& emp, VariogramKind kind) {
  if (emp.bins.size() < 3) throw Error(Errc::InsufficientData, "variogram fit needs at least 3 non-empty bins");
  const auto w = detail::variogram_weights(emp);
  const auto rb = detail::range_bounds(emp);
  const double range = detail::minimise_over_range(
      [&](double r) { return detail::fit_linear(emp, w, kind, r, true).sse; }, rb);
  const auto lin = detail::fit_linear(emp, w, kind, range, true);
  if (!std::isfinite(lin.sse)) throw Error(Errc::NonConvergence, "variogram fit produced a non-finite objective");
  VariogramModel m{kind, lin.nugget, lin.partial_sill, range, false};
  const double sill = m.sill();
  if (!(m.partial_sill > 1e-8 * sill) || range <= rb.lo * (1.0 + 1e-6)) {
    double total = 0.0, wsum = 0.0;
    for (std::size_t k = 0; k < emp.bins.size(); ++k) {
      total += w[k] * emp.bins[k].gamma;
      wsum += w[k];
    }
    m = {kind, std::max(0.0, total / wsum), 0.0, rb.lo, true};
    if (!(m.nugget > 0.0)) m.nugget = std::numeric_limits<double>::min();
  }
  return m;
}

/// Two-variable linear model of coregionalization:
/// gamma_vw(h) = nugget(v,w) [h > 0] + structure(v,w) (1 - rho(h; range)).
struct CoregionalizationModel {
  VariogramKind kind = VariogramKind::Exponential;
  double range = 1.0;
  Eigen::Matrix2d nugget = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d structure = Eigen::Matrix2d::Identity();

  /// Direct model of variable v (0 or 1).
  VariogramModel marginal(int v) const { return {kind, nugget(v, v), structure(v, v), range, false}; }

  void validate() const {
    if (!(range > 0.0)) throw Error(Errc::InvalidLMC, "coregionalization range must be positive");
    for (const Eigen::Matrix2d* b : {&nugget, &structure}) {
      if (std::abs((*b)(0, 1) - (*b)(1, 0)) > 1e-12 * (1.0 + b->cwiseAbs().maxCoeff()))
        throw Error(Errc::InvalidLMC, "coregionalization matrix is not symmetric");
      const double tol = 1e-12 * (1.0 + b->cwiseAbs().maxCoeff());
      if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(*b).eigenvalues().minCoeff() < -tol)
        throw Error(Errc::InvalidLMC, "coregionalization matrix is not positive semidefinite");
    }
  }
};

/// Nearest (Frobenius) positive semidefinite matrix.
inline Eigen::Matrix2d nearest_psd(const Eigen::Matrix2d& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(0.5 * (b + b.transpose()));
  const Eigen::Vector2d lam = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

struct LmcFit {
  CoregionalizationModel model;
  VariogramModel direct_a;  // independent fits used to choose the shared range
  VariogramModel direct_b;
  EmpiricalVariogram empirical_a;
  EmpiricalVariogram empirical_b;
  EmpiricalVariogram empirical_ab;
  bool projected = false;  // a coefficient matrix was moved to the PSD cone
};

/// Direct variograms first; the shared range is the geometric mean of their
/// ranges; sills and cross-sills are then refitted at that range and each
/// coefficient matrix is projected to the PSD cone if needed.
inline LmcFit fit_lmc(const std::vector<Point>& points, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      VariogramKind kind, std::size_t n_bins, double max_dist) {
  LmcFit out;
  out.empirical_a = empirical_variogram(points, a, n_bins, max_dist);
  out.empirical_b = empirical_variogram(points, b, n_bins, max_dist);
  out.empirical_ab = empirical_cross_variogram(points, a, b, n_bins, max_dist);
  out.direct_a = fit_variogram(out.empirical_a, kind);
  out.direct_b = fit_variogram(out.empirical_b, kind);
  const double range = std::sqrt(out.direct_a.range * out.direct_b.range);
  auto refit = [&](const EmpiricalVariogram& emp, bool nonneg) {
    return detail::fit_linear(emp, detail::variogram_weights(emp), kind, range, nonneg);
  };
  Eigen::Matrix2d b0, b1;
  double min_lag = std::numeric_limits<double>::infinity();
  for (const auto* emp : {&out.empirical_a, &out.empirical_b, &out.empirical_ab})
    for (const auto& bin : emp->bins) min_lag = std::min(min_lag, bin.lag);
  if (correlation(kind, min_lag, range) < 1e-9) {
    // Structure and nugget are indistinguishable at every observed lag: pure nugget model.
    auto level = [](const EmpiricalVariogram& emp) {
      const auto w = detail::variogram_weights(emp);
      double total = 0.0, wsum = 0.0;
      for (std::size_t k = 0; k < emp.bins.size(); ++k) {
        total += w[k] * emp.bins[k].gamma;
        wsum += w[k];
      }
      return total / wsum;
    };
    const double cross = level(out.empirical_ab);
    b0 << level(out.empirical_a), cross, cross, level(out.empirical_b);
    b1.setZero();
  } else {
    const auto fa = refit(out.empirical_a, true);
    const auto fb = refit(out.empirical_b, true);
    const auto fab = refit(out.empirical_ab, false);
    b0 << fa.nugget, fab.nugget, fab.nugget, fb.nugget;
    b1 << fa.partial_sill, fab.partial_sill, fab.partial_sill, fb.partial_sill;
  }
  const Eigen::Matrix2d p0 = nearest_psd(b0), p1 = nearest_psd(b1);
  out.projected = !p0.isApprox(b0, 1e-12) || !p1.isApprox(b1, 1e-12);
  out.model = {kind, range, p0, p1};
  return out;
}

}  // namespace pare
