#include <gtest/gtest.h>

#include <random>

#include "pare/regional_max.hpp"

namespace pare {
namespace {

StationSet stations_in(const std::vector<std::size_t>& region, std::size_t region_count) {
  StationSet s;
  s.region_count = region_count;
  for (std::size_t i = 0; i < region.size(); ++i) {
    s.ids.push_back("s" + std::to_string(i));
    s.points.push_back({});
    s.region.push_back(region[i]);
  }
  return s;
}

TEST(RegionalMaxSeries, OneStationPerRegionIsIdentity) {
  const std::vector<DailySeries> panel{DailySeries::from_values("a", {0, 300, 12, 0}),
                                       DailySeries::from_values("b", {5, 0, 400, 2})};
  const auto rs = regional_max_series(panel, stations_in({0, 1}, 2), {"1", "2"});
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_EQ(rs[0].series.depth, panel[0].depth);
  EXPECT_EQ(rs[1].series.depth, panel[1].depth);
  EXPECT_EQ(rs[0].series.start, panel[0].start);
  EXPECT_EQ(rs[1].region_id, "2");
}

TEST(RegionalMaxSeries, DaywiseMaximum) {
  const std::vector<DailySeries> panel{DailySeries::from_values("a", {3, 7}), DailySeries::from_values("b", {5, 2})};
  const auto rs = regional_max_series(panel, stations_in({0, 0}, 1), {"1"});
  EXPECT_EQ(rs[0].series.depth, (std::vector<double>{5, 7}));
  EXPECT_EQ(rs[0].contributors, (std::vector<std::uint32_t>{2, 2}));
}

TEST(RegionalMaxSeries, MissingOnlyWhenAllStationsMissing) {
  DailySeries a = DailySeries::from_values("a", {3, 0, 9});
  DailySeries b = DailySeries::from_values("b", {1, 4, 2});
  a.missing = {1, 1, 0};
  b.missing = {1, 0, 0};
  const auto rs = regional_max_series({a, b}, stations_in({0, 0}, 1), {"1"});
  EXPECT_EQ(rs[0].series.missing, (std::vector<std::uint8_t>{1, 0, 0}));
  EXPECT_EQ(rs[0].series.depth[1], 4.0);
  EXPECT_EQ(rs[0].contributors, (std::vector<std::uint32_t>{0, 1, 2}));
  EXPECT_EQ(exceedances(rs[0].series, 1.0).n_days, 2u);
}

TEST(RegionalMaxSeries, AlignsOnTheCalendar) {
  const DailySeries a = DailySeries::from_values("a", {1, 2, 3}, first_day_of(2000));
  const DailySeries b = DailySeries::from_values("b", {10, 20}, first_day_of(2000) + std::chrono::days{2});
  const auto rs = regional_max_series({a, b}, stations_in({0, 0}, 1), {"1"});
  EXPECT_EQ(rs[0].series.depth, (std::vector<double>{1, 2, 10, 20}));
  EXPECT_EQ(rs[0].series.start, first_day_of(2000));
}

TEST(RegionalMaxSeries, DominatesMembersAndGrowsWithStations) {
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> ex(0.01);
  std::bernoulli_distribution wet(0.3), miss(0.05);
  std::vector<DailySeries> panel;
  for (int s = 0; s < 6; ++s) {
    std::vector<double> v(500);
    for (auto& x : v) x = wet(rng) ? ex(rng) : 0.0;
    DailySeries d = DailySeries::from_values("s" + std::to_string(s), v);
    for (auto& m : d.missing) m = miss(rng);
    panel.push_back(d);
  }
  const auto all = regional_max_series(panel, stations_in({0, 0, 0, 0, 0, 0}, 1), {"1"});
  for (const auto& s : panel)
    for (std::size_t k = 0; k < s.size(); ++k)
      if (!s.is_missing(k)) {
        EXPECT_GE(all[0].series.depth[k], s.depth[k]);
      }
  const std::vector<DailySeries> fewer(panel.begin(), panel.begin() + 5);
  const auto sub = regional_max_series(fewer, stations_in({0, 0, 0, 0, 0}, 1), {"1"});
  for (std::size_t k = 0; k < 500; ++k)
    if (!sub[0].series.is_missing(k)) {
      EXPECT_GE(all[0].series.depth[k], sub[0].series.depth[k]);
    }
}

TEST(RegionalMaxSeries, EmptyRegion) {
  const std::vector<DailySeries> panel{DailySeries::from_values("a", {1, 2})};
  try {
    regional_max_series(panel, stations_in({0}, 2), {"1", "2"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyRegion);
  }
}

TEST(RegionalMaxFit, SingleStationMatchesUnivariateFit) {
  std::mt19937_64 rng(2);
  std::vector<double> v(20000, 0.0);
  std::bernoulli_distribution wet(0.15);
  for (auto& x : v)
    if (wet(rng)) x = 254.0 + sample_gpd_excess(rng, 200.0, 0.15);
  const DailySeries s = DailySeries::from_values("a", v);
  std::vector<GpdFit> fits;
  const auto est = regional_max_fit(regional_max_series({s}, stations_in({0}, 1), {"1"}), 254.0, {100}, true, &fits);
  const Exceedances ex = exceedances(decluster(s), 254.0);
  const GpdFit direct = fit_gpd(ex.values, 254.0, ex.n_days);
  EXPECT_EQ(est.method, "regional_max");
  EXPECT_EQ(est.regions[0].scale, direct.scale);
  EXPECT_EQ(est.regions[0].shape, direct.shape);
  EXPECT_EQ(est.regions[0].rate, direct.rate);
  EXPECT_EQ(est.regions[0].scale_se, direct.scale_se());
  EXPECT_EQ(est.regions[0].return_levels[0].level, return_level(direct, 100).level);
  // Standard errors round-trip through sqrt, so allow the last bits to differ.
  EXPECT_DOUBLE_EQ(est.regions[0].return_levels[0].se, return_level(direct, 100).se);
}

}  // namespace
}  // namespace pare
