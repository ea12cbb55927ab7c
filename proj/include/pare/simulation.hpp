#pragma once

// Simulation study: grid stations with known regional GPD truth, pseudo time
// ordering for the regional max path, and RMSE/MAE scoring of the three estimators.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "pare/error.hpp"
#include "pare/estimators.hpp"
#include "pare/geometry.hpp"
#include "pare/gpd.hpp"
#include "pare/kriging.hpp"
#include "pare/regional_max.hpp"
#include "pare/series.hpp"
#include "pare/spatial_weights.hpp"

namespace pare {

/// Independent 64-bit seed for (root, a, b, c) streams.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(c)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Cell-centred lattice over the whole region set (anchored at its bounding-box
/// corner), keeping points strictly inside a region.
inline StationSet make_grid(const RegionSet& regions, double resolution) {
  if (!(resolution > 0.0)) throw Error(Errc::InvalidArgument, "grid resolution must be positive");
  const BoundingBox bb = regions.bounding_box();
  StationSet out;
  out.region_count = regions.size();
  std::vector<std::pair<Point, std::size_t>> pts;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto lattice = lattice_points(regions[r], resolution, {bb.min_x, bb.min_y});
    if (lattice.empty())
      throw Error(Errc::EmptyGrid, "no grid point inside region '" + regions[r].id + "' at resolution " +
                                       std::to_string(resolution));
    for (Point p : lattice) pts.emplace_back(p, r);
  }
  // Row-major order (south to north, west to east), independent of region order.
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.first.y != b.first.y ? a.first.y < b.first.y : a.first.x < b.first.x;
  });
  for (std::size_t k = 0; k < pts.size(); ++k) {
    out.ids.push_back("g" + std::to_string(k + 1));
    out.points.push_back(pts[k].first);
    out.region.push_back(pts[k].second);
  }
  return out;
}

struct RegionTruth {
  double scale = 0.0;
  double shape = 0.0;
};

inline std::size_t simulated_days(double years) { return static_cast<std::size_t>(std::llround(years * kDaysPerYear)); }

inline std::size_t simulated_exceedances(double rate, double years) {
  return static_cast<std::size_t>(std::llround(rate * kDaysPerYear * years));
}

/// k = round(rate * 365.25 * years) GPD exceedances above u at random days; all
/// other days are exactly 0.
template <class Rng>
DailySeries simulate_station(const RegionTruth& truth, double rate, double years, double threshold, Rng& rng,
                             std::string id = "sim", Day start = first_day_of(1981)) {
  if (!(truth.scale > 0.0)) throw Error(Errc::InvalidArgument, "truth scale must be positive");
  const std::size_t n = simulated_days(years);
  const std::size_t k = simulated_exceedances(rate, years);
  if (k < 1 || k > n) throw Error(Errc::InvalidArgument, "rate * 365.25 * years must be in [1, days]");
  std::vector<double> depth(n, 0.0);
  std::vector<std::size_t> slots(n);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  for (std::size_t j = 0; j < k; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n - 1);
    std::swap(slots[j], slots[pick(rng)]);
    double excess = 0.0;
    while (!(excess > 0.0)) excess = sample_gpd_excess(rng, truth.scale, truth.shape);
    depth[slots[j]] = threshold + excess;
  }
  return DailySeries::from_values(std::move(id), std::move(depth), start);
}

/// Imposes a common time structure: each series is ranked (ties broken at
/// random), ranks are perturbed by Uniform(0, noise_scale * length) noise and
/// re-ranked, and rank q is placed on day perm[q] of one shared random permutation.
inline std::vector<DailySeries> pseudo_time_order(const std::vector<DailySeries>& panel, double noise_scale,
                                                  std::uint64_t seed) {
  if (panel.empty()) return {};
  const std::size_t n = panel[0].size();
  for (const auto& s : panel)
    if (s.size() != n) throw Error(Errc::InvalidArgument, "pseudo time ordering needs equal-length series");
  if (!(noise_scale >= 0.0)) throw Error(Errc::InvalidArgument, "noise scale must be non-negative");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double amplitude = noise_scale * static_cast<double>(n);

  std::vector<DailySeries> out;
  out.reserve(panel.size());
  std::vector<std::size_t> order(n);
  std::vector<double> tiebreak(n), key(n);
  for (const DailySeries& s : panel) {
    for (auto& t : tiebreak) t = unit(rng);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return s.depth[a] != s.depth[b] ? s.depth[a] < s.depth[b] : tiebreak[a] < tiebreak[b];
    });
    // order[r] is the day holding rank r.
    for (std::size_t r = 0; r < n; ++r) key[r] = static_cast<double>(r) + amplitude * unit(rng);
    std::vector<std::size_t> rerank(n);
    std::iota(rerank.begin(), rerank.end(), std::size_t{0});
    std::sort(rerank.begin(), rerank.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    DailySeries o{s.station_id, s.start, std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0)};
    for (std::size_t q = 0; q < n; ++q) {
      const std::size_t src = order[rerank[q]];
      o.depth[perm[q]] = s.depth[src];
      o.missing[perm[q]] = s.missing[src];
    }
    out.push_back(std::move(o));
  }
  return out;
}

struct SimulationConfig {
  RegionSet regions;
  double grid_resolution = 3.0;
  std::vector<RegionTruth> truth = {{233.64, 0.2044}, {246.78, 0.2319}, {229.38, 0.1641}};
  double rate = 0.0544;
  double years = 40.0;
  int n_iterations = 50;
  std::uint64_t seed = 20240101;
  double threshold = kDefaultThreshold;
  double noise_scale = 0.15;
  bool decluster_regional_max = false;
  double hausdorff_f = 0.5;
  double hausdorff_pitch = kDefaultHausdorffPitch;
  PareOptions pare;  // jitter_seed is derived per iteration
  KrigingOptions kriging;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (regions.size() == 0) throw Error(Errc::InvalidArgument, "simulation needs regions");
    if (truth.size() != regions.size()) throw Error(Errc::InvalidArgument, "one truth row per region required");
    for (const auto& t : truth)
      if (!(t.scale > 0.0)) throw Error(Errc::InvalidArgument, "truth scales must be positive");
    if (!(rate > 0.0 && rate < 1.0)) throw Error(Errc::InvalidArgument, "rate must be in (0, 1)");
    if (n_iterations < 1) throw Error(Errc::InvalidArgument, "at least one iteration required");
  }
};

struct IterationResult {
  int iteration = 0;
  bool ok = false;
  std::string error;
  std::vector<RegionEstimates> estimates;  // pare, block_kriging, regional_max
};

struct SimulationCell {
  std::string model;
  std::string region_id;
  std::string parameter;  // "scale" or "shape"
  double truth = 0.0;
  double mean = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
};

struct SimulationReport {
  std::size_t n_stations = 0;
  std::vector<std::size_t> stations_per_region;
  DistanceMatrix region_distances;
  std::vector<SimulationCell> cells;
  std::vector<IterationResult> iterations;
  std::size_t failures = 0;

  const SimulationCell& cell(const std::string& model, std::size_t region, const std::string& parameter) const {
    std::size_t seen = 0;
    for (const auto& c : cells)
      if (c.model == model && c.parameter == parameter) {
        if (seen++ == region) return c;
      }
    throw Error(Errc::InvalidArgument, "no report cell " + model + "/" + parameter);
  }
};

inline const std::vector<std::string>& simulation_models() {
  static const std::vector<std::string> m{"pare", "block_kriging", "regional_max"};
  return m;
}

namespace detail {

enum SimStream : std::uint64_t { kStationData = 1, kJitter = 2, kBlock = 3, kOrder = 4 };

inline IterationResult run_iteration(const SimulationConfig& cfg, const StationSet& grid, const DistanceMatrix& d,
                                     const std::vector<std::string>& ids, int it) {
  IterationResult res;
  res.iteration = it;
  try {
    std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(it), kStationData));
    std::vector<DailySeries> panel;
    std::vector<GpdFit> fits;
    panel.reserve(grid.size());
    fits.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      panel.push_back(simulate_station(cfg.truth[grid.region[i]], cfg.rate, cfg.years, cfg.threshold, rng, grid.ids[i]));
      const Exceedances ex = exceedances(panel.back(), cfg.threshold);
      fits.push_back(fit_gpd(ex.values, cfg.threshold, ex.n_days));
    }
    PareOptions po = cfg.pare;
    po.jitter_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(it), kJitter);
    res.estimates.push_back(run_pare(grid, fits, d, ids, cfg.threshold, {}, po).estimates);
    KrigingOptions ko = cfg.kriging;
    ko.block.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(it), kBlock);
    res.estimates.push_back(run_block_kriging(grid, fits, cfg.regions, cfg.threshold, {}, ko).estimates);
    const auto ordered =
        pseudo_time_order(panel, cfg.noise_scale, derive_seed(cfg.seed, static_cast<std::uint64_t>(it), kOrder));
    res.estimates.push_back(
        regional_max_fit(regional_max_series(ordered, grid, ids), cfg.threshold, {}, cfg.decluster_regional_max));
    res.ok = true;
  } catch (const Error& e) {
    res.ok = false;
    res.error = e.what();
    res.estimates.clear();
  }
  return res;
}

}  // namespace detail

/// Runs the study. Iterations are independent (seeded from config.seed and the
/// iteration index) and may run on several threads; results do not depend on
/// the thread count.
inline SimulationReport run_simulation(const SimulationConfig& cfg) {
  cfg.validate();
  SimulationReport rep;
  const StationSet grid = make_grid(cfg.regions, cfg.grid_resolution);
  rep.n_stations = grid.size();
  rep.stations_per_region = grid.counts();
  rep.region_distances = region_distance_matrix(cfg.regions, cfg.hausdorff_f, cfg.hausdorff_pitch);
  std::vector<std::string> ids;
  for (const Region& r : cfg.regions) ids.push_back(r.id);

  rep.iterations.resize(static_cast<std::size_t>(cfg.n_iterations));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int it = next++; it < cfg.n_iterations; it = next++)
      rep.iterations[static_cast<std::size_t>(it)] = detail::run_iteration(cfg, grid, rep.region_distances, ids, it);
  };
  unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cfg.n_iterations));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  const auto& models = simulation_models();
  for (std::size_t m = 0; m < models.size(); ++m)
    for (const char* param : {"scale", "shape"})
      for (std::size_t r = 0; r < ids.size(); ++r) {
        SimulationCell c;
        c.model = models[m];
        c.region_id = ids[r];
        c.parameter = param;
        const bool is_scale = c.parameter == "scale";
        c.truth = is_scale ? cfg.truth[r].scale : cfg.truth[r].shape;
        double sum = 0.0, sq = 0.0, abs = 0.0;
        for (const auto& it : rep.iterations) {
          if (!it.ok) continue;
          const RegionEstimate& e = it.estimates[m].regions[r];
          const double v = is_scale ? e.scale : e.shape;
          sum += v;
          sq += (v - c.truth) * (v - c.truth);
          abs += std::abs(v - c.truth);
          ++c.n;
        }
        if (c.n > 0) {
          const auto n = static_cast<double>(c.n);
          c.mean = sum / n;
          c.rmse = std::sqrt(sq / n);
          c.mae = abs / n;
        }
        rep.cells.push_back(c);
      }
  for (const auto& it : rep.iterations) rep.failures += it.ok ? 0 : 1;
  return rep;
}

}  // namespace pare
