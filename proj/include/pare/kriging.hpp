#pragma once

// Ordinary kriging with a GLS mean, ordinary cokriging under a linear model of
// coregionalization, and block averaging of predictions over regions.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pare/error.hpp"
#include "pare/estimates.hpp"
#include "pare/geometry.hpp"
#include "pare/gpd.hpp"
#include "pare/variogram.hpp"

namespace pare {

struct KrigePrediction {
  std::string id;
  double value = 0.0;
  double variance = 0.0;
};

/// Best linear unbiased prediction with an unknown mean in span(F):
/// lambda = C^-1 c + C^-1 F (F' C^-1 F)^-1 (f0 - F' C^-1 c).
/// A singular C is accepted only on request; the bordered system
/// [C F; F' 0] is then solved in the minimum-norm sense.
class GlsKriging {
 public:
  GlsKriging(Eigen::MatrixXd cz, Eigen::MatrixXd drift, bool allow_singular = false)
      : cz_(std::move(cz)), f_(std::move(drift)) {
    const Eigen::Index m = cz_.rows();
    if (m == 0 || cz_.cols() != m || f_.rows() != m) throw Error(Errc::InvalidArgument, "kriging system dimensions");
    llt_.compute(cz_);
    const double scale = cz_.diagonal().cwiseAbs().maxCoeff();
    bool ok = llt_.info() == Eigen::Success;
    if (ok) {
      const Eigen::VectorXd d = llt_.matrixL().toDenseMatrix().diagonal();
      ok = d.minCoeff() * d.minCoeff() > 1e-13 * scale;
    }
    if (!ok) {
      if (!allow_singular) throw Error(Errc::SingularCovariance, "data covariance matrix is singular");
      singular_ = true;
      const Eigen::Index p = f_.cols();
      Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m + p, m + p);
      k.topLeftCorner(m, m) = cz_;
      k.topRightCorner(m, p) = f_;
      k.bottomLeftCorner(p, m) = f_.transpose();
      bordered_.setThreshold(1e-12);
      bordered_.compute(k);
      return;
    }
    cinv_f_ = llt_.solve(f_);
    a_.compute(f_.transpose() * cinv_f_);
    if (a_.info() != Eigen::Success || !(a_.vectorD().minCoeff() > 0.0))
      throw Error(Errc::SingularGLS, "F' C^-1 F is singular");
  }

  bool singular() const { return singular_; }
  const Eigen::MatrixXd& data_covariance() const { return cz_; }

  /// One column of weights per target; c is m x q, f0 is p x q.
  Eigen::MatrixXd weights(const Eigen::MatrixXd& c, const Eigen::MatrixXd& f0) const {
    if (singular_) {
      Eigen::MatrixXd rhs(c.rows() + f0.rows(), c.cols());
      rhs << c, f0;
      return bordered_.solve(rhs).topRows(c.rows());
    }
    const Eigen::MatrixXd cinv_c = llt_.solve(c);
    return cinv_c + cinv_f_ * a_.solve(f0 - f_.transpose() * cinv_c);
  }

  /// Covariance of the prediction errors: C00 - L'c - c'L + L' C_Z L.
  Eigen::MatrixXd error_covariance(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& c,
                                   const Eigen::MatrixXd& c00) const {
    const Eigen::MatrixXd lc = lambda.transpose() * c;
    Eigen::MatrixXd e = c00 - lc - lc.transpose() + lambda.transpose() * cz_ * lambda;
    return 0.5 * (e + e.transpose());
  }

  /// (F' C^-1 F)^-1 F' C^-1 z.
  Eigen::VectorXd gls_coefficients(const Eigen::VectorXd& z) const {
    const Eigen::Index p = f_.cols();
    return weights(Eigen::MatrixXd::Zero(cz_.rows(), p), Eigen::MatrixXd::Identity(p, p)).transpose() * z;
  }

 private:
  Eigen::MatrixXd cz_;
  Eigen::MatrixXd f_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> bordered_;
  bool singular_ = false;
  Eigen::MatrixXd cinv_f_;
  Eigen::LDLT<Eigen::MatrixXd> a_;
};

namespace detail {

/// Mean unit correlation and fraction of coincident pairs over all ordered pairs of samples.
struct PairAverages {
  double correlation = 0.0;
  double coincident = 0.0;
};

inline PairAverages pair_averages(const std::vector<Point>& s, VariogramKind kind, double range) {
  double acc = 0.0;
  std::size_t zero = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    acc += 1.0;
    ++zero;
    for (std::size_t l = k + 1; l < s.size(); ++l) {
      const double h = distance(s[k], s[l]);
      acc += 2.0 * correlation(kind, h, range);
      if (h == 0.0) zero += 2;
    }
  }
  const double n2 = static_cast<double>(s.size()) * static_cast<double>(s.size());
  return {acc / n2, static_cast<double>(zero) / n2};
}

}  // namespace detail

/// Univariate ordinary kriging. With `nugget_as_error` the nugget is the
/// variance of independent measurement error and the signal Y is predicted;
/// otherwise the nugget is part of the process and observations are interpolated exactly.
class OrdinaryKriging {
 public:
  OrdinaryKriging(std::vector<Point> points, Eigen::VectorXd values, VariogramModel model, bool nugget_as_error)
      : points_(std::move(points)), z_(std::move(values)), model_(model), nugget_as_error_(nugget_as_error),
        system_(build(points_, z_, model_, nugget_as_error_)) {}

  const VariogramModel& model() const { return model_; }
  double gls_mean() const { return system_.gls_coefficients(z_)(0); }

  /// Cov(Z_i, Y(s0)).
  Eigen::VectorXd covariances_to(Point s0) const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(points_.size()));
    for (std::size_t i = 0; i < points_.size(); ++i) c(static_cast<Eigen::Index>(i)) = signal_cov(distance(points_[i], s0));
    return c;
  }

  Eigen::VectorXd weights(Point s0) const { return system_.weights(covariances_to(s0), one()).col(0); }

  KrigePrediction predict(Point s0) const {
    const Eigen::MatrixXd c = covariances_to(s0);
    return finish(c, Eigen::MatrixXd::Constant(1, 1, signal_cov(0.0)));
  }

  /// Prediction of the average of Y over the sample locations and its error variance.
  KrigePrediction predict_block(const std::vector<Point>& samples) const {
    if (samples.empty()) throw Error(Errc::NoInteriorPoints, "no block samples");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(points_.size()));
    for (Point s : samples) c += covariances_to(s);
    c /= static_cast<double>(samples.size());
    const auto avg = detail::pair_averages(samples, model_.kind, model_.range);
    double c00 = model_.partial_sill * avg.correlation;
    if (!nugget_as_error_) c00 += model_.nugget * avg.coincident;
    return finish(c, Eigen::MatrixXd::Constant(1, 1, c00));
  }

 private:
  static Eigen::MatrixXd one() { return Eigen::MatrixXd::Ones(1, 1); }

  double signal_cov(double h) const {
    return nugget_as_error_ ? model_.structured_covariance(h) : model_.covariance(h);
  }

  static GlsKriging build(const std::vector<Point>& pts, const Eigen::VectorXd& z, const VariogramModel& m,
                          bool nugget_as_error) {
    m.validate();
    const auto n = static_cast<Eigen::Index>(pts.size());
    if (n == 0 || z.size() != n) throw Error(Errc::InvalidArgument, "kriging needs matching, non-empty points and values");
    Eigen::MatrixXd cz(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double h = distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
        if (nugget_as_error)
          cz(i, j) = m.structured_covariance(h) + (i == j ? m.nugget : 0.0);
        else
          cz(i, j) = m.covariance(h);
      }
    return GlsKriging(std::move(cz), Eigen::MatrixXd::Ones(n, 1));
  }

  KrigePrediction finish(const Eigen::MatrixXd& c, const Eigen::MatrixXd& c00) const {
    const Eigen::MatrixXd lambda = system_.weights(c, one());
    KrigePrediction p;
    p.value = lambda.col(0).dot(z_);
    p.variance = std::max(0.0, system_.error_covariance(lambda, c, c00)(0, 0));
    return p;
  }

  std::vector<Point> points_;
  Eigen::VectorXd z_;
  VariogramModel model_;
  bool nugget_as_error_;
  GlsKriging system_;
};

inline KrigePrediction ordinary_krige(const std::vector<Point>& points, const Eigen::VectorXd& values,
                                      const VariogramModel& model, bool nugget_as_error, Point s0) {
  return OrdinaryKriging(points, values, model, nugget_as_error).predict(s0);
}

struct CokrigePrediction {
  KrigePrediction a;
  KrigePrediction b;
  double covariance = 0.0;  // covariance of the two prediction errors
};

/// Ordinary cokriging of two variables observed at the same stations. Each
/// variable has its own unknown mean. Rank-deficient coregionalization gives a
/// singular data covariance; the minimum-norm solution is then used.
class Cokriging {
 public:
  Cokriging(std::vector<Point> points, Eigen::VectorXd a, Eigen::VectorXd b, CoregionalizationModel model,
            bool nugget_as_error)
      : points_(std::move(points)), model_(std::move(model)), nugget_as_error_(nugget_as_error),
        system_(build(points_, a, b, model_, nugget_as_error_)) {
    z_.resize(2 * a.size());
    z_ << a, b;
  }

  const CoregionalizationModel& model() const { return model_; }
  bool singular() const { return system_.singular(); }

  /// 2n x 2 matrix of Cov(Z, Y_v(s0)).
  Eigen::MatrixXd covariances_to(Point s0) const {
    const auto n = static_cast<Eigen::Index>(points_.size());
    Eigen::MatrixXd c(2 * n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = distance(points_[static_cast<std::size_t>(i)], s0);
      for (int w = 0; w < 2; ++w)
        for (int v = 0; v < 2; ++v) c(w * n + i, v) = signal_cov(w, v, h);
    }
    return c;
  }

  /// 2n x 2 weights; column v predicts variable v.
  Eigen::MatrixXd weights(Point s0) const { return system_.weights(covariances_to(s0), Eigen::Matrix2d::Identity()); }

  CokrigePrediction predict(Point s0) const {
    Eigen::Matrix2d c00;
    for (int v = 0; v < 2; ++v)
      for (int w = 0; w < 2; ++w) c00(v, w) = signal_cov(v, w, 0.0);
    return finish(covariances_to(s0), c00);
  }

  CokrigePrediction predict_block(const std::vector<Point>& samples) const {
    if (samples.empty()) throw Error(Errc::NoInteriorPoints, "no block samples");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * points_.size()), 2);
    for (Point s : samples) c += covariances_to(s);
    c /= static_cast<double>(samples.size());
    const auto avg = detail::pair_averages(samples, model_.kind, model_.range);
    Eigen::Matrix2d c00 = model_.structure * avg.correlation;
    if (!nugget_as_error_) c00 += model_.nugget * avg.coincident;
    return finish(c, c00);
  }

 private:
  double signal_cov(int v, int w, double h) const {
    double c = model_.structure(v, w) * correlation(model_.kind, h, model_.range);
    if (!nugget_as_error_ && h == 0.0) c += model_.nugget(v, w);
    return c;
  }

  static GlsKriging build(const std::vector<Point>& pts, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const CoregionalizationModel& m, bool nugget_as_error) {
    m.validate();
    const auto n = static_cast<Eigen::Index>(pts.size());
    if (n == 0 || a.size() != n || b.size() != n)
      throw Error(Errc::InvalidArgument, "cokriging needs both variables at every station");
    Eigen::MatrixXd cz(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double h = distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
        const double rho = correlation(m.kind, h, m.range);
        const bool add_nugget = nugget_as_error ? i == j : h == 0.0;
        for (int v = 0; v < 2; ++v)
          for (int w = 0; w < 2; ++w) cz(v * n + i, w * n + j) = m.structure(v, w) * rho + (add_nugget ? m.nugget(v, w) : 0.0);
      }
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2 * n, 2);
    f.col(0).head(n).setOnes();
    f.col(1).tail(n).setOnes();
    const bool rank_deficient = m.structure.determinant() <= 1e-14 * (1.0 + m.structure.squaredNorm()) &&
                                m.nugget.determinant() <= 1e-14 * (1.0 + m.nugget.squaredNorm());
    return GlsKriging(std::move(cz), std::move(f), rank_deficient);
  }

  CokrigePrediction finish(const Eigen::MatrixXd& c, const Eigen::Matrix2d& c00) const {
    const Eigen::MatrixXd lambda = system_.weights(c, Eigen::Matrix2d::Identity());
    const Eigen::MatrixXd err = system_.error_covariance(lambda, c, c00);
    CokrigePrediction p;
    p.a.value = lambda.col(0).dot(z_);
    p.b.value = lambda.col(1).dot(z_);
    p.a.variance = std::max(0.0, err(0, 0));
    p.b.variance = std::max(0.0, err(1, 1));
    p.covariance = err(0, 1);
    return p;
  }

  std::vector<Point> points_;
  CoregionalizationModel model_;
  bool nugget_as_error_;
  GlsKriging system_;
  Eigen::VectorXd z_;
};

inline CokrigePrediction cokrige(const std::vector<Point>& points, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 const CoregionalizationModel& model, bool nugget_as_error, Point s0) {
  return Cokriging(points, a, b, model, nugget_as_error).predict(s0);
}

/// Cell-centred lattice points (anchor + (i + 1/2, j + 1/2) * pitch) inside the region.
inline std::vector<Point> lattice_points(const Region& region, double pitch, Point anchor) {
  if (!(pitch > 0.0)) throw Error(Errc::InvalidArgument, "grid pitch must be positive");
  const BoundingBox bb = bounding_box(region);
  std::vector<Point> out;
  const auto i0 = static_cast<long long>(std::floor((bb.min_x - anchor.x) / pitch - 0.5));
  const auto i1 = static_cast<long long>(std::ceil((bb.max_x - anchor.x) / pitch - 0.5));
  const auto j0 = static_cast<long long>(std::floor((bb.min_y - anchor.y) / pitch - 0.5));
  const auto j1 = static_cast<long long>(std::ceil((bb.max_y - anchor.y) / pitch - 0.5));
  for (long long j = j0; j <= j1; ++j)
    for (long long i = i0; i <= i1; ++i) {
      const Point p{anchor.x + (static_cast<double>(i) + 0.5) * pitch, anchor.y + (static_cast<double>(j) + 0.5) * pitch};
      if (locate(region, p) == Location::Inside) out.push_back(p);
    }
  return out;
}

struct BlockMethod {
  enum class Kind { Grid, Random };
  Kind kind = Kind::Random;
  double resolution = 0.0;      // grid pitch, miles
  std::size_t n_samples = 1000;  // random
  std::uint64_t seed = 0;        // random

  static BlockMethod grid(double resolution) { return {Kind::Grid, resolution, 0, 0}; }
  static BlockMethod random(std::size_t n, std::uint64_t seed) { return {Kind::Random, 0.0, n, seed}; }
};

/// Sample locations for block averaging: a cell-centred lattice anchored at the
/// region's bounding-box corner, or uniform rejection sampling in the region.
inline std::vector<Point> block_samples(const Region& region, const BlockMethod& method) {
  std::vector<Point> out;
  const BoundingBox bb = bounding_box(region);
  if (method.kind == BlockMethod::Kind::Grid) {
    out = lattice_points(region, method.resolution, {bb.min_x, bb.min_y});
  } else {
    if (method.n_samples == 0) throw Error(Errc::InvalidArgument, "random block method needs samples");
    std::mt19937_64 rng(method.seed);
    std::uniform_real_distribution<double> ux(bb.min_x, bb.max_x), uy(bb.min_y, bb.max_y);
    const std::size_t max_draws = 1000 * method.n_samples;
    for (std::size_t k = 0; k < max_draws && out.size() < method.n_samples; ++k) {
      const Point p{ux(rng), uy(rng)};
      if (locate(region, p) == Location::Inside) out.push_back(p);
    }
    if (out.size() < method.n_samples) out.clear();
  }
  if (out.empty()) throw Error(Errc::NoInteriorPoints, "no sample points inside region '" + region.id + "'");
  return out;
}

/// Block average of a univariate predictor over a region.
inline KrigePrediction block_average(const OrdinaryKriging& predictor, const Region& region, const BlockMethod& method,
                                     std::vector<Point>* samples_out = nullptr) {
  const auto samples = block_samples(region, method);
  KrigePrediction p = predictor.predict_block(samples);
  p.id = region.id;
  if (samples_out) *samples_out = samples;
  return p;
}

inline CokrigePrediction block_average(const Cokriging& predictor, const Region& region, const BlockMethod& method,
                                       std::vector<Point>* samples_out = nullptr) {
  const auto samples = block_samples(region, method);
  CokrigePrediction p = predictor.predict_block(samples);
  p.a.id = p.b.id = region.id;
  if (samples_out) *samples_out = samples;
  return p;
}

/// Station-level GPD estimates in the form the kriging pipeline consumes.
struct StationParameters {
  std::vector<Point> points;
  Eigen::VectorXd log_scale;
  Eigen::VectorXd shape;
  Eigen::VectorXd rate;
  // Standard errors, used only when a single station is available.
  Eigen::VectorXd log_scale_se;
  Eigen::VectorXd shape_se;
  Eigen::VectorXd rate_se;
  Eigen::VectorXd log_scale_shape_cov;

  std::size_t size() const { return points.size(); }
};

inline StationParameters station_parameters(const std::vector<Point>& points, const std::vector<GpdFit>& fits) {
  if (points.size() != fits.size()) throw Error(Errc::InvalidArgument, "points and fits differ in length");
  const auto n = static_cast<Eigen::Index>(fits.size());
  StationParameters s;
  s.points = points;
  s.log_scale.resize(n);
  s.shape.resize(n);
  s.rate.resize(n);
  s.log_scale_se.resize(n);
  s.shape_se.resize(n);
  s.rate_se.resize(n);
  s.log_scale_shape_cov.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const GpdFit& f = fits[static_cast<std::size_t>(i)];
    s.log_scale(i) = std::log(f.scale);
    s.shape(i) = f.shape;
    s.rate(i) = f.rate;
    s.log_scale_se(i) = f.scale_se() / f.scale;
    s.shape_se(i) = f.shape_se();
    s.rate_se(i) = f.rate_se;
    s.log_scale_shape_cov(i) = f.cov(0, 1) / f.scale;
  }
  return s;
}

struct KrigingOptions {
  VariogramKind kind = VariogramKind::Exponential;
  std::size_t n_bins = kDefaultVariogramBins;
  double max_dist = 0.0;  // 0: half the largest station separation
  bool nugget_as_error = true;
  BlockMethod block = BlockMethod::random(1000, 0);
};

struct RegionKrigingResult {
  RegionEstimates estimates{"block_kriging", {}};
  LmcFit lmc;                       // shape (a) and log-scale (b)
  EmpiricalVariogram rate_empirical;
  VariogramModel rate_model;
  std::vector<std::vector<Point>> samples;  // per region
  bool single_station = false;
};

/// Cokriges shape and log-scale, kriges rate, averages each over every region
/// and derives region return levels. Random block sampling uses seed + region index.
inline RegionKrigingResult krige_to_regions(const StationParameters& st, const RegionSet& regions, double threshold,
                                            const std::vector<double>& periods, const KrigingOptions& opt = {},
                                            double days_per_year = kDaysPerYear) {
  RegionKrigingResult out;
  const std::size_t n = st.size();
  if (n == 0) throw Error(Errc::InsufficientData, "no stations to krige");
  if (n == 1) {
    out.single_station = true;
    for (const Region& r : regions) {
      RegionEstimate e;
      e.region_id = r.id;
      const BackTransformed s = backtransform_logscale(st.log_scale(0), 0.0);
      e.scale = s.scale;
      e.scale_se = st.log_scale_se.size() ? st.log_scale_se(0) * s.scale : 0.0;
      e.shape = st.shape(0);
      e.shape_se = st.shape_se.size() ? st.shape_se(0) : 0.0;
      e.rate = st.rate(0);
      e.rate_se = st.rate_se.size() ? st.rate_se(0) : 0.0;
      e.scale_shape_cov = st.log_scale_shape_cov.size() ? st.log_scale_shape_cov(0) * s.scale : 0.0;
      out.estimates.regions.push_back(e);
      out.samples.push_back({st.points[0]});
    }
    compute_return_levels(out.estimates, threshold, periods, days_per_year);
    return out;
  }

  const double max_dist = opt.max_dist > 0.0 ? opt.max_dist : default_max_dist(st.points);
  out.lmc = fit_lmc(st.points, st.shape, st.log_scale, opt.kind, opt.n_bins, max_dist);
  out.rate_empirical = empirical_variogram(st.points, st.rate, opt.n_bins, max_dist);
  out.rate_model = fit_variogram(out.rate_empirical, opt.kind);
  const Cokriging co(st.points, st.shape, st.log_scale, out.lmc.model, opt.nugget_as_error);
  const OrdinaryKriging rate_ok(st.points, st.rate, out.rate_model, opt.nugget_as_error);

  for (std::size_t r = 0; r < regions.size(); ++r) {
    BlockMethod method = opt.block;
    method.seed = opt.block.seed + r;
    const auto samples = block_samples(regions[r], method);
    const CokrigePrediction sl = co.predict_block(samples);
    const KrigePrediction rate = rate_ok.predict_block(samples);
    RegionEstimate e;
    e.region_id = regions[r].id;
    const BackTransformed s = backtransform_logscale(sl.b.value, sl.b.variance);
    e.scale = s.scale;
    e.scale_se = s.se;
    e.shape = sl.a.value;
    e.shape_se = std::sqrt(sl.a.variance);
    e.rate = rate.value;
    e.rate_se = std::sqrt(rate.variance);
    e.scale_shape_cov = std::exp(sl.b.value) * sl.covariance;
    out.estimates.regions.push_back(e);
    out.samples.push_back(samples);
  }
  compute_return_levels(out.estimates, threshold, periods, days_per_year);
  return out;
}

}  // namespace pare
