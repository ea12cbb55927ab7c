#pragma once

// Point-to-area random effects: a CAR-structured Gaussian model on station
// level GPD estimates with a region-indicator mean, Z ~ N(X beta, tau2 (I - rho W)^-1).
// The fitted coefficients are the region-level estimates.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pare/error.hpp"
#include "pare/estimates.hpp"
#include "pare/gpd.hpp"

namespace pare {

struct PareInputs {
  Eigen::VectorXd z;  // one GPD parameter per station (log scale for the scale parameter)
  Eigen::MatrixXd x;  // n x r region indicators
  Eigen::MatrixXd w;  // n x n symmetric weights

  void validate() const {
    const Eigen::Index n = z.size();
    if (n == 0) throw Error(Errc::InvalidArgument, "no observations");
    if (x.rows() != n || w.rows() != n || w.cols() != n)
      throw Error(Errc::InvalidArgument, "PARE input dimensions are inconsistent");
    if (!w.isApprox(w.transpose(), 1e-12)) throw Error(Errc::InvalidArgument, "weight matrix is not symmetric");
  }
};

struct RhoInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double rho) const { return rho > lo && rho < hi; }
};

struct CarProfile {
  double loglik = 0.0;
  Eigen::VectorXd beta;
  double tau2 = 0.0;
};

struct PareFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_cov;
  double rho = 0.0;
  double tau2 = 0.0;
  double loglik = 0.0;
  RhoInterval rho_interval;
  bool boundary_rho = false;   // rho-hat within the interior margin of an interval edge
  bool zero_residual = false;  // Z lies in the column space of X; tau2 = 0

  double beta_se(Eigen::Index j) const { return std::sqrt(std::max(0.0, beta_cov(j, j))); }
};

/// Profile likelihood of the CAR model in rho. W is diagonalised once so each
/// evaluation costs O(n r^2).
class CarProfileModel {
 public:
  static constexpr double kInteriorMargin = 1e-6;

  explicit CarProfileModel(const PareInputs& in) : n_(static_cast<double>(in.z.size())) {
    in.validate();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (in.w + in.w.transpose()));
    if (eig.info() != Eigen::Success) throw Error(Errc::NonConvergence, "eigen-decomposition of W failed");
    lambda_ = eig.eigenvalues();
    zt_ = eig.eigenvectors().transpose() * in.z;
    xt_ = eig.eigenvectors().transpose() * in.x;
    const double lmin = lambda_.minCoeff();
    const double lmax = lambda_.maxCoeff();
    if (!(lmax > 0.0)) throw Error(Errc::InvalidArgument, "weight matrix has no positive eigenvalue");
    // I - rho W is positive definite on (1/lambda_min, 1/lambda_max).
    interval_.hi = (1.0 / lmax) * (1.0 - kInteriorMargin);
    interval_.lo = lmin < 0.0 ? (1.0 / lmin) * (1.0 - kInteriorMargin) : -1e3 / lmax;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(in.x);
    if (lu.rank() < in.x.cols()) throw Error(Errc::SingularGLS, "region design matrix is rank deficient");
  }

  const RhoInterval& interval() const { return interval_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }

  CarProfile profile(double rho) const {
    if (!interval_.contains(rho))
      throw Error(Errc::RhoOutOfRange, "rho = " + std::to_string(rho) + " outside (" + std::to_string(interval_.lo) +
                                           ", " + std::to_string(interval_.hi) + ")");
    const Eigen::VectorXd q = (1.0 - rho * lambda_.array()).matrix();
    const Eigen::MatrixXd xtq = xt_.transpose() * q.asDiagonal();
    const Eigen::MatrixXd a = xtq * xt_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
      throw Error(Errc::SingularGLS, "X' Q X is singular");
    CarProfile out;
    out.beta = ldlt.solve(xtq * zt_);
    const Eigen::VectorXd resid = zt_ - xt_ * out.beta;
    out.tau2 = resid.dot(q.asDiagonal() * resid) / n_;
    const double log_det_q = q.array().log().sum();
    out.loglik = -0.5 * n_ * std::log(2.0 * std::numbers::pi * out.tau2) + 0.5 * log_det_q - 0.5 * n_;
    return out;
  }

  /// tau2 * (X' Q X)^-1 at the given rho.
  Eigen::MatrixXd beta_cov(double rho, double tau2) const {
    const Eigen::VectorXd q = (1.0 - rho * lambda_.array()).matrix();
    const Eigen::MatrixXd a = xt_.transpose() * q.asDiagonal() * xt_;
    return tau2 * a.inverse();
  }

  /// True when the OLS residual vanishes, i.e. Z is an exact region-mean pattern.
  bool zero_residual(Eigen::VectorXd* beta) const {
    const Eigen::MatrixXd a = xt_.transpose() * xt_;
    const Eigen::VectorXd b = a.ldlt().solve(xt_.transpose() * zt_);
    const double rss = (zt_ - xt_ * b).squaredNorm();
    if (beta) *beta = b;
    return rss <= 1e-24 * std::max(1.0, zt_.squaredNorm());
  }

 private:
  double n_;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd zt_;
  Eigen::MatrixXd xt_;
  RhoInterval interval_;
};

inline RhoInterval rho_interval(const PareInputs& in) { return CarProfileModel(in).interval(); }

/// Profile log-likelihood, GLS coefficients and conditional variance at a fixed rho.
inline CarProfile car_profile_loglik(double rho, const PareInputs& in) { return CarProfileModel(in).profile(rho); }

/// Maximum likelihood fit: rho-hat maximises the profile likelihood over the
/// admissible interval; beta and tau2 follow in closed form.
inline PareFit fit_pare(const PareInputs& in) {
  const CarProfileModel model(in);
  const RhoInterval iv = model.interval();
  PareFit fit;
  fit.rho_interval = iv;

  Eigen::VectorXd ols;
  if (model.zero_residual(&ols)) {
    fit.beta = ols;
    fit.beta_cov = Eigen::MatrixXd::Zero(ols.size(), ols.size());
    fit.rho = 0.0;
    fit.tau2 = 0.0;
    fit.loglik = std::numeric_limits<double>::infinity();
    fit.zero_residual = true;
    return fit;
  }

  // Coarse scan (uniform plus geometric refinement toward both edges and zero),
  // then Brent on the bracket around the best scan point.
  std::vector<double> grid;
  const double width = iv.hi - iv.lo;
  for (int k = 1; k < 200; ++k) grid.push_back(iv.lo + width * k / 200.0);
  for (int j = 1; j <= 80; ++j) {
    const double frac = std::pow(10.0, -j / 10.0);
    grid.push_back(iv.hi - width * frac * 0.5);
    grid.push_back(iv.lo + width * frac * 0.5);
    grid.push_back(iv.hi * frac);
    grid.push_back(iv.lo * frac);
  }
  grid.push_back(0.0);
  grid.erase(std::remove_if(grid.begin(), grid.end(), [&iv](double r) { return !iv.contains(r); }), grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::size_t best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double ll = model.profile(grid[k]).loglik;
    if (ll > best_ll) {
      best_ll = ll;
      best = k;
    }
  }
  if (!std::isfinite(best_ll)) throw Error(Errc::NonConvergence, "profile likelihood is not finite on the rho grid");

  const double a = best == 0 ? iv.lo : grid[best - 1];
  const double b = best + 1 == grid.size() ? iv.hi : grid[best + 1];
  auto neg = [&model, &iv](double r) {
    if (!iv.contains(r)) return std::numeric_limits<double>::infinity();
    return -model.profile(r).loglik;
  };
  const double lo = std::nextafter(a, b);
  const double hi = std::nextafter(b, a);
  boost::uintmax_t iters = 500;
  const auto [rho_hat, neg_ll] = boost::math::tools::brent_find_minima(neg, lo, hi, 45, iters);
  double rho = rho_hat;
  if (!(-neg_ll >= best_ll)) rho = grid[best];

  const CarProfile prof = model.profile(rho);
  fit.rho = rho;
  fit.beta = prof.beta;
  fit.tau2 = prof.tau2;
  fit.loglik = prof.loglik;
  fit.beta_cov = model.beta_cov(rho, prof.tau2);
  fit.beta_cov = 0.5 * (fit.beta_cov + fit.beta_cov.transpose()).eval();
  const double edge_tol = 1e-6 * std::max(1.0, std::max(std::abs(iv.lo), std::abs(iv.hi)));
  fit.boundary_rho = (rho - iv.lo) < edge_tol || (iv.hi - rho) < edge_tol;
  return fit;
}

/// Region estimates from separately fitted log-scale, shape and rate models.
/// Shape-scale covariance is zero.
inline RegionEstimates pare_return_levels(const PareFit& log_scale, const PareFit& shape, const PareFit& rate,
                                          const std::vector<std::string>& region_ids, double threshold,
                                          const std::vector<double>& periods, double days_per_year = kDaysPerYear) {
  const auto r = static_cast<Eigen::Index>(region_ids.size());
  if (log_scale.beta.size() != r || shape.beta.size() != r || rate.beta.size() != r)
    throw Error(Errc::InvalidArgument, "PARE fits do not share the region set");
  RegionEstimates est{"pare", {}};
  for (Eigen::Index j = 0; j < r; ++j) {
    RegionEstimate e;
    e.region_id = region_ids[static_cast<std::size_t>(j)];
    const BackTransformed s = backtransform_logscale(log_scale.beta(j), log_scale.beta_cov(j, j));
    e.scale = s.scale;
    e.scale_se = s.se;
    e.shape = shape.beta(j);
    e.shape_se = shape.beta_se(j);
    e.rate = rate.beta(j);
    e.rate_se = rate.beta_se(j);
    est.regions.push_back(e);
  }
  compute_return_levels(est, threshold, periods, days_per_year);
  return est;
}

}  // namespace pare
