#include <gtest/gtest.h>

#include <boost/math/tools/roots.hpp>
#include <random>

#include "pare/gpd.hpp"

namespace pare {
namespace {

std::vector<double> simulate(std::mt19937_64& rng, std::size_t n, double u, double scale, double shape) {
  std::vector<double> v(n);
  for (auto& x : v) x = u + sample_gpd_excess(rng, scale, shape);
  return v;
}

double plain_loglik(const std::vector<double>& excess, double scale, double shape) {
  double ll = 0.0;
  for (double y : excess) {
    if (shape == 0.0) {
      ll += -std::log(scale) - y / scale;
    } else {
      const double z = 1.0 + shape * y / scale;
      if (z <= 0.0) return -INFINITY;
      ll += -std::log(scale) - (1.0 + 1.0 / shape) * std::log(z);
    }
  }
  return ll;
}

TEST(GpdLoglik, MatchesDirectFormulaAndFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::vector<double> excess;
  for (double x : simulate(rng, 200, 0.0, 2.0, 0.15)) excess.push_back(x);
  for (double shape : {-0.05, -1e-5, 0.0, 2e-4, 0.1, 0.4}) {
    const double ls = std::log(2.2);
    const auto lik = gpd_loglik(excess, ls, shape);
    ASSERT_TRUE(lik.finite());
    EXPECT_NEAR(lik.value, plain_loglik(excess, 2.2, shape), 1e-9 * std::abs(lik.value));
    // Central differences of the direct formula (step chosen for ~1e-7 accuracy).
    const double h = 1e-5;
    auto f = [&](double a, double b) { return plain_loglik(excess, std::exp(a), b); };
    const double g0 = (f(ls + h, shape) - f(ls - h, shape)) / (2 * h);
    EXPECT_NEAR(lik.gradient(0), g0, 1e-5 * std::max(1.0, std::abs(g0)));
    if (std::abs(shape) > 1e-3) {
      const double g1 = (f(ls, shape + h) - f(ls, shape - h)) / (2 * h);
      EXPECT_NEAR(lik.gradient(1), g1, 1e-5 * std::max(1.0, std::abs(g1)));
      const double h11 = (f(ls, shape + h) - 2 * f(ls, shape) + f(ls, shape - h)) / (h * h);
      EXPECT_NEAR(lik.hessian(1, 1), h11, 1e-3 * std::max(1.0, std::abs(h11)));
      const double h01 = (f(ls + h, shape + h) - f(ls + h, shape - h) - f(ls - h, shape + h) + f(ls - h, shape - h)) / (4 * h * h);
      EXPECT_NEAR(lik.hessian(0, 1), h01, 1e-3 * std::max(1.0, std::abs(h01)));
    }
  }
}

TEST(GpdLoglik, SeriesBranchContinuousAcrossSwitch) {
  std::vector<double> excess{0.5, 1.0, 2.0, 3.5};
  const auto below = gpd_loglik(excess, 0.0, 2.4e-4);
  const auto above = gpd_loglik(excess, 0.0, 2.6e-4);
  EXPECT_NEAR(below.value, above.value, 1e-3);
  EXPECT_NEAR(below.hessian(1, 1), above.hessian(1, 1), 1e-2);
}

TEST(FitGpd, RecoversTableTruthWithinThreeSe) {
  std::mt19937_64 rng(1234);
  const auto values = simulate(rng, 795, 254.0, 233.64, 0.2044);
  const GpdFit fit = fit_gpd(values, 254.0, 14610);
  ASSERT_TRUE(fit.cov_usable);
  EXPECT_LT(std::abs(fit.scale - 233.64), 3 * fit.scale_se());
  EXPECT_LT(std::abs(fit.shape - 0.2044), 3 * fit.shape_se());
  EXPECT_EQ(fit.n_exceed, 795u);
  EXPECT_NEAR(fit.rate, 795.0 / 14610.0, 1e-15);
  EXPECT_NEAR(fit.rate_se, std::sqrt(fit.rate * (1 - fit.rate) / 14610.0), 1e-15);
  EXPECT_NEAR(fit.cov(0, 1), fit.cov(1, 0), 1e-12);
}

TEST(FitGpd, ExponentialLimit) {
  std::mt19937_64 rng(99);
  const auto values = simulate(rng, 4000, 10.0, 5.0, 0.0);
  const GpdFit fit = fit_gpd(values, 10.0, 40000);
  double mean_excess = 0.0;
  for (double v : values) mean_excess += v - 10.0;
  mean_excess /= static_cast<double>(values.size());
  EXPECT_LT(std::abs(fit.shape), 3 * fit.shape_se());
  EXPECT_NEAR(fit.scale, mean_excess, 0.05 * mean_excess);
}

TEST(FitGpd, OptimumBeatsRandomAdmissiblePoints) {
  std::mt19937_64 rng(5);
  const auto values = simulate(rng, 300, 254.0, 200.0, 0.1);
  const GpdFit fit = fit_gpd(values, 254.0, 6000);
  std::vector<double> excess;
  for (double v : values) excess.push_back(v - 254.0);
  const double y_max = *std::max_element(excess.begin(), excess.end());
  std::uniform_real_distribution<double> scale_draw(50.0, 500.0), shape_draw(-0.5, 1.0);
  int checked = 0;
  while (checked < 100) {
    const double s = scale_draw(rng);
    const double xi = shape_draw(rng);
    if (1.0 + xi * y_max / s <= 0.0) continue;
    ++checked;
    EXPECT_GE(fit.loglik, plain_loglik(excess, s, xi));
  }
  EXPECT_NEAR(fit.loglik, plain_loglik(excess, fit.scale, fit.shape), 1e-8 * std::abs(fit.loglik));
}

TEST(FitGpd, OrderInvariantBitwise) {
  std::mt19937_64 rng(8);
  auto values = simulate(rng, 200, 254.0, 180.0, 0.25);
  const GpdFit a = fit_gpd(values, 254.0, 5000);
  std::shuffle(values.begin(), values.end(), rng);
  const GpdFit b = fit_gpd(values, 254.0, 5000);
  EXPECT_EQ(a.scale, b.scale);
  EXPECT_EQ(a.shape, b.shape);
  EXPECT_EQ(a.cov, b.cov);
}

TEST(FitGpd, TooFewExceedances) {
  std::vector<double> v{300, 400, 500};
  try {
    fit_gpd(v, 254.0, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooFewExceedances);
  }
}

TEST(FitGpd, ShortTailedDataRespectsSupport) {
  std::mt19937_64 rng(31);
  const auto values = simulate(rng, 500, 0.5, 1.0, -0.3);
  const GpdFit fit = fit_gpd(values, 0.5, 5000);
  EXPECT_GE(fit.shape, -0.5);
  for (double v : values) EXPECT_GT(1.0 + fit.shape * (v - 0.5) / fit.scale, 0.0);
  EXPECT_NEAR(fit.shape, -0.3, 0.15);
}

TEST(FitGpd, WaldCoverage) {
  std::mt19937_64 rng(777);
  int cover_scale = 0, cover_shape = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const auto values = simulate(rng, 795, 254.0, 233.64, 0.2044);
    const GpdFit fit = fit_gpd(values, 254.0, 14610);
    cover_scale += std::abs(fit.scale - 233.64) <= 1.959964 * fit.scale_se();
    cover_shape += std::abs(fit.shape - 0.2044) <= 1.959964 * fit.shape_se();
  }
  EXPECT_GE(cover_scale, 0.90 * reps);
  EXPECT_LE(cover_scale, 0.99 * reps);
  EXPECT_GE(cover_shape, 0.90 * reps);
  EXPECT_LE(cover_shape, 0.99 * reps);
}

GpdParameters params(double u, double scale, double shape, double rate) {
  return GpdParameters{u, scale, shape, rate, Eigen::Matrix3d::Zero()};
}

// Oracle: invert rate * P(Y > level - u) = 1 / (N * days_per_year) by bracketing.
double inverted_level(const GpdParameters& p, double n_years) {
  const double target = 1.0 / (n_years * kDaysPerYear * p.rate);
  auto f = [&](double y) { return gpd_survival(y, p.scale, p.shape) - target; };
  double hi = p.scale;
  while (f(hi) > 0.0) hi *= 2.0;
  boost::uintmax_t iters = 500;
  auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return (p.threshold + 0.5 * (a + b)) / kTenthsMmPerInch;
}

TEST(ReturnLevel, PublishedRegionOneCrossCheck) {
  const auto p = params(254.0, 215.08, 0.20, 0.06);
  EXPECT_NEAR(return_level(p, 100).level, 16.48, 0.15);
  EXPECT_NEAR(return_level(p, 500).level, 24.131, 0.30);
  EXPECT_NEAR(return_level(p, 25).level, 11.634, 0.15);
}

TEST(ReturnLevel, ExponentialOneInchAboveThreshold) {
  const double rate = std::exp(1.0) / (100 * kDaysPerYear);
  const auto rl = return_level(params(254.0, 254.0, 0.0, rate), 100);
  EXPECT_NEAR(rl.level, 2.0, 1e-12);
  EXPECT_NEAR(return_level(params(254.0, 254.0, 5e-7, rate), 100).level, 2.0, 1e-6);
}

TEST(ReturnLevel, MonotoneAndMatchesInversion) {
  const auto p = params(254.0, 230.0, 0.18, 0.055);
  double prev = 0.0;
  for (int n = 2; n <= 500; ++n) {
    const double level = return_level(p, n).level;
    EXPECT_GT(level, prev);
    EXPECT_NEAR(level, inverted_level(p, n), 1e-8 * level);
    prev = level;
  }
}

TEST(ReturnLevel, SubAnnual) {
  try {
    return_level(params(254.0, 200.0, 0.1, 1e-4), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SubAnnualReturn);
  }
}

TEST(ReturnLevel, DeltaMethodAgainstNumericalGradient) {
  GpdParameters p = params(254.0, 215.0, 0.2, 0.06);
  p.cov << 18.7, -0.02, 0.0, -0.02, 2.7e-4, 0.0, 0.0, 0.0, 5.3e-6;
  const auto rl = return_level(p, 100);
  Eigen::Vector3d g;
  for (int i = 0; i < 3; ++i) {
    GpdParameters hi = p, lo = p;
    const double h = 1e-6 * std::max(1.0, std::abs(i == 0 ? p.scale : i == 1 ? p.shape : p.rate));
    (i == 0 ? hi.scale : i == 1 ? hi.shape : hi.rate) += h;
    (i == 0 ? lo.scale : i == 1 ? lo.shape : lo.rate) -= h;
    g(i) = (return_level(hi, 100).level - return_level(lo, 100).level) / (2 * h);
  }
  EXPECT_NEAR(rl.se, std::sqrt(g.dot(p.cov * g)), 1e-6 * rl.se);
}

TEST(ReturnLevel, ZeroShapeRateVarianceLeavesScaleTerm) {
  GpdParameters p = params(254.0, 215.0, 0.2, 0.06);
  p.cov(0, 0) = 16.0;
  const auto rl = return_level(p, 100);
  const double m = 100 * kDaysPerYear * 0.06;
  EXPECT_NEAR(rl.se, 4.0 * (std::pow(m, 0.2) - 1) / 0.2 / kTenthsMmPerInch, 1e-12);
}

}  // namespace
}  // namespace pare
