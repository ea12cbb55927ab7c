#include <gtest/gtest.h>

#include <random>

#include "pare/series.hpp"

namespace pare {
namespace {

std::vector<double> declustered(std::vector<double> v) { return decluster(DailySeries::from_values("s", std::move(v))).depth; }

TEST(ParseDate, ValidAndInvalid) {
  ASSERT_TRUE(parse_date("2020-02-29"));
  EXPECT_EQ(format_date(*parse_date("2020-02-29")), "2020-02-29");
  EXPECT_FALSE(parse_date("2021-02-29"));
  EXPECT_FALSE(parse_date("2021-2-28"));
  EXPECT_FALSE(parse_date("20x1-02-28"));
  EXPECT_EQ((last_day_of(2020) - first_day_of(1981)).count() + 1, 14610);
}

TEST(Decluster, FixedExamples) {
  EXPECT_EQ(declustered({3, 5, 2, 0, 4}), (std::vector<double>{0, 5, 0, 0, 4}));
  EXPECT_EQ(declustered({7, 0, 7, 0, 7}), (std::vector<double>{7, 0, 7, 0, 7}));
  EXPECT_EQ(declustered({4, 4}), (std::vector<double>{4, 0}));
  EXPECT_TRUE(declustered({}).empty());
}

TEST(Decluster, MissingDayBreaksRun) {
  DailySeries s = DailySeries::from_values("s", {3, 5, 9, 2});
  s.missing[2] = 1;
  const DailySeries d = decluster(s);
  EXPECT_EQ(d.depth, (std::vector<double>{0, 5, 9, 2}));
}

// Oracle: enumerate maximal wet runs directly and check exactly one survivor
// per run, equal to the run maximum, at the earliest position of that maximum.
void check_one_survivor(const DailySeries& in, const DailySeries& out) {
  std::size_t k = 0;
  const std::size_t n = in.size();
  while (k < n) {
    if (in.is_missing(k) || in.depth[k] <= 0.0) {
      EXPECT_EQ(out.depth[k], in.depth[k]);
      ++k;
      continue;
    }
    std::size_t end = k;
    double run_max = 0.0;
    while (end < n && !in.is_missing(end) && in.depth[end] > 0.0) run_max = std::max(run_max, in.depth[end++]);
    std::size_t survivors = 0;
    std::size_t first_max = end;
    for (std::size_t j = k; j < end; ++j) {
      if (first_max == end && in.depth[j] == run_max) first_max = j;
      if (out.depth[j] > 0.0) {
        ++survivors;
        EXPECT_EQ(out.depth[j], run_max);
      }
    }
    EXPECT_EQ(survivors, 1u);
    EXPECT_GT(out.depth[first_max], 0.0);
    k = end;
  }
}

TEST(Decluster, PropertyIdempotentOneSurvivorPerRun) {
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution wet(0.45), miss(0.05);
  std::uniform_int_distribution<int> depth(1, 6);  // small range forces ties
  for (int rep = 0; rep < 10000; ++rep) {
    const std::size_t len = 1 + rep % 60;
    DailySeries s;
    s.station_id = "p";
    s.start = first_day_of(1990);
    for (std::size_t k = 0; k < len; ++k) {
      s.depth.push_back(wet(rng) ? depth(rng) : 0.0);
      s.missing.push_back(miss(rng) ? 1 : 0);
    }
    const DailySeries once = decluster(s);
    const DailySeries twice = decluster(once);
    ASSERT_EQ(once.depth, twice.depth);
    check_one_survivor(s, once);
    std::size_t wet_before = 0, wet_after = 0;
    for (std::size_t k = 0; k < len; ++k) {
      wet_before += s.depth[k] > 0.0;
      wet_after += once.depth[k] > 0.0;
    }
    ASSERT_LE(wet_after, wet_before);
  }
}

TEST(Exceedances, StrictThresholdAndDayCount) {
  DailySeries s = DailySeries::from_values("s", {100, 300, 254, 0});
  s.missing[3] = 1;
  const Exceedances e = exceedances(s, 254.0);
  EXPECT_EQ(e.values, std::vector<double>{300});
  EXPECT_EQ(e.n_days, 3u);
  EXPECT_TRUE(exceedances(DailySeries::from_values("s", {1, 2}), 254.0).values.empty());
}

TEST(Exceedances, SimulatedRateMatchesObservedAverage) {
  // 795 exceedances over 40 years of days.
  EXPECT_NEAR(795.0 / (40 * 365.25), 0.0544, 5e-5);
  EXPECT_EQ(std::lround(0.0544 * 365.25 * 40), 795);
}

TEST(Slice, PadsUncoveredDaysAsMissing) {
  const DailySeries s = DailySeries::from_values("s", {1, 2, 3}, first_day_of(2000));
  const DailySeries w = slice(s, first_day_of(2000) - std::chrono::days{1}, first_day_of(2000) + std::chrono::days{1});
  EXPECT_EQ(w.size(), 3u);
  EXPECT_EQ(w.missing, (std::vector<std::uint8_t>{1, 0, 0}));
  EXPECT_EQ(w.depth[1], 1.0);
}

}  // namespace
}  // namespace pare
