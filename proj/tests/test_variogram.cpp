#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pare/variogram.hpp"

namespace pare {
namespace {

TEST(EmpiricalVariogram, ConstantFieldIsZero) {
  std::mt19937_64 rng(1);
  const auto pts = testing::random_points(rng, 50, 10.0);
  const auto emp = empirical_variogram(pts, Eigen::VectorXd::Constant(50, 3.5), 10, default_max_dist(pts));
  ASSERT_FALSE(emp.bins.empty());
  for (const auto& b : emp.bins) EXPECT_EQ(b.gamma, 0.0);
}

TEST(EmpiricalVariogram, TwoPoints) {
  const std::vector<Point> pts{{0, 0}, {3, 4}};
  const auto emp = empirical_variogram(pts, Eigen::Vector2d(0.0, 2.0), 5, 10.0);
  ASSERT_EQ(emp.bins.size(), 1u);
  EXPECT_EQ(emp.bins[0].pairs, 1u);
  EXPECT_DOUBLE_EQ(emp.bins[0].gamma, 2.0);
  EXPECT_DOUBLE_EQ(emp.bins[0].lag, 5.0);
  EXPECT_EQ(emp.dropped_bins, 4u);
  EXPECT_EQ(emp.warnings.size(), 4u);
}

TEST(EmpiricalVariogram, WhiteNoiseIsFlatAtVariance) {
  std::mt19937_64 rng(2);
  const auto pts = testing::random_points(rng, 500, 100.0);
  const double sigma2 = 4.0;
  std::normal_distribution<double> nd(0.0, std::sqrt(sigma2));
  Eigen::VectorXd v(500);
  for (auto& x : v) x = nd(rng);
  const auto emp = empirical_variogram(pts, v, 15, default_max_dist(pts));
  for (const auto& b : emp.bins) {
    // Pairs share points; 500 independent values bound the effective sample size.
    const double n_eff = std::min<double>(static_cast<double>(b.pairs), 500.0);
    EXPECT_NEAR(b.gamma, sigma2, 3.0 * sigma2 * std::sqrt(2.0 / n_eff)) << "lag " << b.lag;
  }
}

TEST(EmpiricalVariogram, TooFewPoints) {
  EXPECT_THROW(empirical_variogram({{0, 0}}, Eigen::VectorXd::Zero(1), 5, 1.0), Error);
}

EmpiricalVariogram exact_bins(const VariogramModel& m, int n_bins, double max_dist) {
  EmpiricalVariogram e;
  e.max_dist = max_dist;
  for (int k = 0; k < n_bins; ++k) {
    const double h = (k + 0.5) * max_dist / n_bins;
    e.bins.push_back({h, m.gamma(h), 100});
  }
  return e;
}

TEST(FitVariogram, RecoversNoiselessModels) {
  for (auto kind : {VariogramKind::Exponential, VariogramKind::Spherical, VariogramKind::Gaussian}) {
    const VariogramModel truth{kind, 0.0, 1.0, 10.0, false};
    const auto fit = fit_variogram(exact_bins(truth, 15, 40.0), kind);
    EXPECT_NEAR(fit.nugget, 0.0, 1e-4) << to_string(kind);
    EXPECT_NEAR(fit.partial_sill, 1.0, 1e-4) << to_string(kind);
    EXPECT_NEAR(fit.range, 10.0, 1e-4) << to_string(kind);
    EXPECT_FALSE(fit.degenerate);
  }
  const VariogramModel with_nugget{VariogramKind::Exponential, 0.3, 2.0, 7.0, false};
  const auto fit = fit_variogram(exact_bins(with_nugget, 15, 40.0), VariogramKind::Exponential);
  EXPECT_NEAR(fit.nugget, 0.3, 1e-4);
  EXPECT_NEAR(fit.partial_sill, 2.0, 1e-4);
  EXPECT_NEAR(fit.range, 7.0, 1e-4);
}

TEST(FitVariogram, FlatSemivarianceIsNuggetOnly) {
  EmpiricalVariogram e;
  e.max_dist = 30.0;
  for (int k = 0; k < 10; ++k) e.bins.push_back({1.5 + 3.0 * k, 0.7, 50});
  const auto fit = fit_variogram(e, VariogramKind::Exponential);
  EXPECT_TRUE(fit.degenerate);
  EXPECT_EQ(fit.partial_sill, 0.0);
  EXPECT_NEAR(fit.nugget, 0.7, 1e-12);
  EXPECT_DOUBLE_EQ(fit.range, detail::range_bounds(e).lo);
}

TEST(FitVariogram, NeedsThreeBins) {
  EmpiricalVariogram e;
  e.max_dist = 3.0;
  e.bins = {{1.0, 0.1, 3}, {2.0, 0.2, 3}};
  try {
    fit_variogram(e, VariogramKind::Exponential);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::InsufficientData);
  }
}

TEST(FitVariogram, SimulatedFieldRangeMedianWithinThirtyPercent) {
  std::mt19937_64 rng(3);
  const VariogramModel truth{VariogramKind::Exponential, 0.0, 1.0, 8.0, false};
  std::vector<double> ranges;
  for (int rep = 0; rep < 20; ++rep) {
    const auto pts = testing::random_points(rng, 300, 100.0);
    const auto z = testing::gaussian_field(rng, 300, [&](Eigen::Index i, Eigen::Index j) {
      return truth.covariance(distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]));
    });
    const auto emp = empirical_variogram(pts, z, 15, default_max_dist(pts));
    ranges.push_back(fit_variogram(emp, VariogramKind::Exponential).range);
  }
  std::nth_element(ranges.begin(), ranges.begin() + 10, ranges.end());
  EXPECT_NEAR(ranges[10], truth.range, 0.3 * truth.range);
}

TEST(Coregionalization, ValidationAndProjection) {
  CoregionalizationModel m;
  m.structure << 1.0, 2.0, 2.0, 1.0;
  try {
    m.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidLMC);
  }
  const Eigen::Matrix2d p = nearest_psd(m.structure);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(p).eigenvalues().minCoeff(), -1e-15);
  EXPECT_TRUE(p.isApprox(Eigen::Matrix2d::Constant(1.5), 1e-12));
}

TEST(Coregionalization, WhiteNoiseGivesPureNuggetModel) {
  std::mt19937_64 rng(23);
  const std::size_t n = 400;
  const auto pts = testing::random_points(rng, n, 50.0);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e1 = g(rng), e2 = g(rng);
    a(static_cast<Eigen::Index>(i)) = e1;
    b(static_cast<Eigen::Index>(i)) = 0.5 * e1 + e2;
  }
  const LmcFit fit = fit_lmc(pts, a, b, VariogramKind::Exponential, 12, 25.0);
  if (fit.model.structure.isZero(0.0)) {
    // Variances 1 and 1.25, covariance 0.5.
    EXPECT_NEAR(fit.model.nugget(0, 0), 1.0, 0.2);
    EXPECT_NEAR(fit.model.nugget(1, 1), 1.25, 0.25);
    EXPECT_NEAR(fit.model.nugget(0, 1), 0.5, 0.15);
  }
  // Either way the total sill matrix matches the covariance.
  const Eigen::Matrix2d total = fit.model.nugget + fit.model.structure;
  EXPECT_NEAR(total(0, 0), 1.0, 0.2);
  EXPECT_NEAR(total(1, 1), 1.25, 0.25);
  EXPECT_NEAR(total(0, 1), 0.5, 0.15);
  EXPECT_NO_THROW(fit.model.validate());
}

TEST(Coregionalization, FitRecoversNegativeCrossStructure) {
  std::mt19937_64 rng(4);
  const std::size_t n = 300;
  const auto pts = testing::random_points(rng, n, 100.0);
  const double range = 10.0;
  // Two independent fields mixed to correlation -0.6.
  auto k = [&](Eigen::Index i, Eigen::Index j) {
    return correlation(VariogramKind::Exponential, distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]), range);
  };
  const Eigen::VectorXd u = testing::gaussian_field(rng, n, k);
  const Eigen::VectorXd v = testing::gaussian_field(rng, n, k);
  const Eigen::VectorXd a = u;
  const Eigen::VectorXd b = -0.6 * u + 0.8 * v;
  const auto fit = fit_lmc(pts, a, b, VariogramKind::Exponential, 15, default_max_dist(pts));
  EXPECT_NO_THROW(fit.model.validate());
  EXPECT_LT(fit.model.structure(0, 1), 0.0);
  const double corr = fit.model.structure(0, 1) / std::sqrt(fit.model.structure(0, 0) * fit.model.structure(1, 1));
  EXPECT_NEAR(corr, -0.6, 0.25);
  EXPECT_NEAR(fit.model.range, range, 0.5 * range);
}

}  // namespace
}  // namespace pare
