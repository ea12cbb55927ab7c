#include <gtest/gtest.h>

#include <set>

#include "pare/simulation.hpp"

namespace pare {
namespace {

Region rect(const std::string& id, double x0, double y0, double w, double h) {
  return {id, {{{{x0, y0}, {x0 + w, y0}, {x0 + w, y0 + h}, {x0, y0 + h}}, {}}}};
}

TEST(DeriveSeed, StreamsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 5; ++b) seen.insert(derive_seed(7, a, b));
  EXPECT_EQ(seen.size(), 250u);
  EXPECT_EQ(derive_seed(7, 3, 1), derive_seed(7, 3, 1));
  EXPECT_NE(derive_seed(7, 3, 1), derive_seed(8, 3, 1));
}

TEST(MakeGrid, UnitSquareClosedForm) {
  const RegionSet unit({rect("u", 0, 0, 1, 1)});
  for (double pitch : {0.5, 0.3, 0.25, 0.1}) {
    const auto n = static_cast<std::size_t>(std::floor(1.0 / pitch + 1e-9));
    EXPECT_EQ(make_grid(unit, pitch).size(), n * n) << pitch;
  }
}

TEST(MakeGrid, HalvingPitchRoughlyQuadruples) {
  const RegionSet rs({Region{"tri", {{{{0, 0}, {40, 3}, {15, 35}}, {}}}}, rect("r", 40, 3, 20, 25)});
  const double a = static_cast<double>(make_grid(rs, 3.0).size());
  const double b = static_cast<double>(make_grid(rs, 1.5).size());
  EXPECT_NEAR(b / a, 4.0, 0.4);
}

TEST(MakeGrid, AssignsRegionsAndRejectsEmpty) {
  const RegionSet rs({rect("a", 0, 0, 6, 6), rect("b", 6, 0, 6, 6)});
  const StationSet g = make_grid(rs, 3.0);
  EXPECT_EQ(g.counts(), (std::vector<std::size_t>{4, 4}));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_TRUE(contains(rs[g.region[i]], g.points[i]));
  try {
    make_grid(RegionSet({rect("a", 0, 0, 6, 6), rect("tiny", 6.1, 0.1, 0.2, 0.2)}), 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyGrid);
  }
}

TEST(SimulateStation, CountsAndZeros) {
  std::mt19937_64 rng(1);
  const DailySeries s = simulate_station({233.64, 0.2044}, 0.0544, 40, 254.0, rng);
  EXPECT_EQ(simulated_exceedances(0.0544, 40), 795u);
  EXPECT_EQ(s.size(), 14610u);
  std::size_t k = 0;
  for (double v : s.depth) {
    if (v != 0.0) {
      EXPECT_GT(v, 254.0);
      ++k;
    }
  }
  EXPECT_EQ(k, 795u);
  const Exceedances ex = exceedances(s, 254.0);
  EXPECT_EQ(fit_gpd(ex.values, 254.0, ex.n_days).rate, 795.0 / 14610.0);
}

/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

TEST(SimulateStation, ExponentialTruthPassesKolmogorovSmirnov) {
  std::mt19937_64 rng(2);
  const double scale = 200.0;
  const DailySeries s = simulate_station({scale, 0.0}, 0.0544, 40, 254.0, rng);
  std::vector<double> x = exceedances(s, 254.0).values;
  for (auto& v : x) v -= 254.0;
  std::sort(x.begin(), x.end());
  double d = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 1.0 - std::exp(-x[i] / scale);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  EXPECT_GT(ks_pvalue(d, x.size()), 0.01);
}

TEST(SimulateStation, RefitRecoversTruth) {
  std::mt19937_64 rng(3);
  const RegionTruth truth{246.78, 0.2319};
  const DailySeries s = simulate_station(truth, 0.0544, 40, 254.0, rng);
  const Exceedances ex = exceedances(s, 254.0);
  const GpdFit f = fit_gpd(ex.values, 254.0, ex.n_days);
  EXPECT_NEAR(f.scale, truth.scale, 3.0 * f.scale_se());
  EXPECT_NEAR(f.shape, truth.shape, 3.0 * f.shape_se());
}

std::vector<double> sorted_values(const DailySeries& s) {
  std::vector<double> v = s.depth;
  std::sort(v.begin(), v.end());
  return v;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k < j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j - 1);
      i = j;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<DailySeries> two_stations(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return {simulate_station({230, 0.2}, 0.0544, 40, 254.0, rng, "a"),
          simulate_station({230, 0.2}, 0.0544, 40, 254.0, rng, "b")};
}

TEST(PseudoTimeOrder, PreservesEachSeriesHistogram) {
  const auto panel = two_stations(4);
  const auto out = pseudo_time_order(panel, 0.15, 9);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    EXPECT_EQ(sorted_values(out[i]), sorted_values(panel[i]));
    EXPECT_EQ(out[i].station_id, panel[i].station_id);
  }
}

TEST(PseudoTimeOrder, NoiseControlsCrossStationCorrelation) {
  const auto panel = two_stations(5);
  const auto aligned = pseudo_time_order(panel, 0.0, 1);
  for (std::size_t k = 0; k < aligned[0].size(); ++k)
    EXPECT_EQ(aligned[0].depth[k] > 0.0, aligned[1].depth[k] > 0.0);
  std::vector<double> a, b;
  for (std::size_t k = 0; k < aligned[0].size(); ++k)
    if (aligned[0].depth[k] > 0.0) {
      a.push_back(aligned[0].depth[k]);
      b.push_back(aligned[1].depth[k]);
    }
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-12);

  const auto independent = pseudo_time_order(panel, 1e6, 2);
  EXPECT_NEAR(spearman(independent[0].depth, independent[1].depth), 0.0, 0.05);
  const auto partial = pseudo_time_order(panel, 0.15, 3);
  EXPECT_GT(spearman(partial[0].depth, partial[1].depth), 0.1);
}

SimulationConfig small_config() {
  SimulationConfig cfg;
  cfg.regions = RegionSet({rect("1", 0, 0, 15, 15), rect("2", 15, 0, 15, 15), rect("3", 30, 0, 15, 15)});
  cfg.n_iterations = 3;
  cfg.seed = 11;
  cfg.hausdorff_pitch = 1.0;
  cfg.kriging.block = BlockMethod::random(200, 0);
  cfg.threads = 1;
  return cfg;
}

TEST(RunSimulation, ReportInvariants) {
  const SimulationConfig cfg = small_config();
  const SimulationReport rep = run_simulation(cfg);
  EXPECT_EQ(rep.n_stations, 75u);
  EXPECT_EQ(rep.failures, 0u);
  ASSERT_EQ(rep.cells.size(), 3u * 2u * 3u);
  for (const auto& c : rep.cells) {
    EXPECT_GE(c.rmse, c.mae) << c.model << c.parameter;
    EXPECT_GE(c.mae, 0.0);
    EXPECT_EQ(c.n, 3u);
  }
  EXPECT_EQ(rep.cell("pare", 1, "scale").truth, 246.78);
  EXPECT_EQ(rep.cell("regional_max", 2, "shape").truth, 0.1641);
}

TEST(RunSimulation, ThreadCountDoesNotChangeResults) {
  SimulationConfig cfg = small_config();
  cfg.n_iterations = 2;
  const auto a = run_simulation(cfg);
  cfg.threads = 2;
  const auto b = run_simulation(cfg);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].mean, b.cells[i].mean);
    EXPECT_EQ(a.cells[i].rmse, b.cells[i].rmse);
  }
}

TEST(RunSimulation, OnlyRegionalMaxDependsOnOrdering) {
  SimulationConfig cfg = small_config();
  cfg.n_iterations = 1;
  const auto a = run_simulation(cfg);
  cfg.noise_scale = 0.6;
  const auto b = run_simulation(cfg);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t r = 0; r < 3; ++r) {
      const auto& x = a.iterations[0].estimates[m].regions[r];
      const auto& y = b.iterations[0].estimates[m].regions[r];
      EXPECT_EQ(x.scale, y.scale);
      EXPECT_EQ(x.shape, y.shape);
      EXPECT_EQ(x.rate, y.rate);
      EXPECT_EQ(x.scale_se, y.scale_se);
    }
  EXPECT_NE(a.iterations[0].estimates[2].regions[0].scale, b.iterations[0].estimates[2].regions[0].scale);
}

TEST(RunPare, IdenticalStationFitsGiveExactRegionValues) {
  const RegionSet rs({rect("1", 0, 0, 9, 9), rect("2", 9, 0, 9, 9), rect("3", 18, 0, 9, 9)});
  const StationSet g = make_grid(rs, 3.0);
  const double truth_scale[] = {233.64, 246.78, 229.38};
  const double truth_shape[] = {0.2044, 0.2319, 0.1641};
  std::vector<GpdFit> fits(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    fits[i].scale = truth_scale[g.region[i]];
    fits[i].shape = truth_shape[g.region[i]];
    fits[i].rate = 0.0544;
  }
  const auto d = region_distance_matrix(rs, 0.5, 1.0);
  const auto res = run_pare(g, fits, d, {"1", "2", "3"}, 254.0, {}, {1.0, 0.1, 5});
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(res.estimates.regions[r].scale, truth_scale[r], 1e-10);
    EXPECT_NEAR(res.estimates.regions[r].shape, truth_shape[r], 1e-14);
    EXPECT_NEAR(res.estimates.regions[r].rate, 0.0544, 1e-15);
    EXPECT_EQ(res.estimates.regions[r].shape_se, 0.0);
  }
  EXPECT_TRUE(res.shape.zero_residual);
}

}  // namespace
}  // namespace pare
