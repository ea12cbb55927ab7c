#pragma once

// End-to-end analysis: ingestion, station assignment, per-window station fits,
// the three regional estimators and report files.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "json.hpp"
#include "pare/config.hpp"
#include "pare/error.hpp"
#include "pare/estimators.hpp"
#include "pare/io.hpp"
#include "pare/regional_max.hpp"
#include "pare/simulation.hpp"

namespace pare {

inline constexpr const char* kVersion = "1.0.0";

/// Stations read from disk, placed in the regions.
struct StudyData {
  GeoRegions geo;
  std::vector<std::string> region_ids;
  StationSet stations;              // stations inside some region
  std::vector<DailySeries> series;  // parallel to stations
  std::vector<std::string> warnings;
};

/// Reads the regions and station files and drops stations outside every region.
inline StudyData load_study(const AnalysisConfig& cfg) {
  StudyData out;
  out.geo = read_regions_geojson(cfg.regions_path);
  for (const Region& r : out.geo.regions) out.region_ids.push_back(r.id);
  StationPanel panel = ingest(cfg.data_dir);
  out.warnings = std::move(panel.warnings);
  std::vector<std::string> ids;
  std::vector<Point> points;
  for (std::size_t i = 0; i < panel.catalog.size(); ++i) {
    const StationRecord& rec = panel.catalog[i];
    const Point p = out.geo.projection.forward(rec.lon, rec.lat);
    const bool inside = std::any_of(out.geo.regions.begin(), out.geo.regions.end(),
                                    [&](const Region& r) { return contains(r, p); });
    if (!inside) {
      out.warnings.push_back("station '" + rec.id + "' lies outside every region; dropped");
      continue;
    }
    ids.push_back(rec.id);
    points.push_back(p);
    out.series.push_back(std::move(panel.series[i]));
  }
  out.stations = assign_stations(ids, points, out.geo.regions);
  for (auto& w : out.stations.warnings) out.warnings.push_back(w);
  return out;
}

struct StationWindowFit {
  std::string station_id;
  std::string region_id;
  double coverage = 0.0;
  bool included = false;
  std::string reason;  // why a station was left out
  GpdFit fit;
};

struct WindowSeeds {
  std::uint64_t jitter = 0;
  std::uint64_t block = 0;
};

struct WindowResult {
  Window window;
  WindowSeeds seeds;
  std::vector<StationWindowFit> stations;
  std::vector<RegionEstimates> estimates;  // in method order
  std::optional<PareResult> pare;
  std::optional<RegionKrigingResult> kriging;
  std::vector<GpdFit> regional_max_fits;
  std::vector<std::string> warnings;
};

enum WindowStream : std::uint64_t { kWindowJitter = 2, kWindowBlock = 3 };

/// Seeds depend on the window's years, not its position in the list, so a
/// window's results do not change when other windows are added or removed.
inline WindowSeeds window_seeds(std::uint64_t root, const Window& w) {
  const auto a = static_cast<std::uint64_t>(w.start_year);
  const auto b = static_cast<std::uint64_t>(w.end_year);
  return {derive_seed(root, a, b, kWindowJitter), derive_seed(root, a, b, kWindowBlock)};
}

/// Station fits only: coverage filter, declustering and a GPD fit per station.
inline std::vector<StationWindowFit> fit_window_stations(const AnalysisConfig& cfg, const StudyData& data,
                                                         const Window& w, std::vector<DailySeries>* sliced = nullptr,
                                                         std::vector<std::string>* warnings = nullptr) {
  const Day from = first_day_of(w.start_year);
  const Day to = last_day_of(w.end_year);
  const double len = static_cast<double>((to - from).count() + 1);
  GpdFitOptions opt;
  opt.min_exceedances = cfg.min_exceedances;
  std::vector<StationWindowFit> out;
  for (std::size_t i = 0; i < data.stations.size(); ++i) {
    StationWindowFit f;
    f.station_id = data.stations.ids[i];
    f.region_id = data.region_ids[data.stations.region[i]];
    DailySeries s = slice(data.series[i], from, to);
    f.coverage = static_cast<double>(s.present_days()) / len;
    if (f.coverage < cfg.min_coverage) {
      f.reason = "coverage";
    } else {
      const Exceedances ex = exceedances(cfg.decluster ? decluster(s) : s, cfg.threshold);
      if (ex.values.size() < cfg.min_exceedances) {
        f.reason = "exceedances";
      } else {
        try {
          f.fit = fit_gpd(ex.values, cfg.threshold, ex.n_days, opt);
          f.included = true;
        } catch (const Error& e) {
          if (!e.is_convergence_failure() && e.code() != Errc::TooFewExceedances) throw;
          f.reason = "fit";
          if (warnings) warnings->push_back(w.label() + ": station '" + f.station_id + "' excluded: " + e.what());
        }
      }
    }
    if (sliced && f.included) sliced->push_back(std::move(s));
    out.push_back(std::move(f));
  }
  return out;
}

inline WindowResult run_window(const AnalysisConfig& cfg, const StudyData& data, const DistanceMatrix& regional,
                               const Window& w) {
  WindowResult res;
  res.window = w;
  res.seeds = window_seeds(cfg.seed, w);
  std::vector<DailySeries> panel;
  res.stations = fit_window_stations(cfg, data, w, &panel, &res.warnings);

  std::vector<std::size_t> keep;
  std::vector<GpdFit> fits;
  for (std::size_t i = 0; i < res.stations.size(); ++i)
    if (res.stations[i].included) {
      keep.push_back(i);
      fits.push_back(res.stations[i].fit);
    }
  const StationSet st = data.stations.subset(keep);
  const auto counts = st.counts();
  for (std::size_t r = 0; r < counts.size(); ++r)
    if (counts[r] == 0)
      throw Error(Errc::InsufficientData,
                  "window " + w.label() + ": region '" + data.region_ids[r] + "' has no station passing inclusion");

  for (const std::string& m : known_methods()) {
    if (!cfg.has_method(m)) continue;
    if (m == "pare") {
      res.pare = run_pare(st, fits, regional, data.region_ids, cfg.threshold, cfg.return_periods,
                          PareOptions{cfg.c, cfg.jitter_sd, res.seeds.jitter});
      res.estimates.push_back(res.pare->estimates);
    } else if (m == "kriging") {
      KrigingOptions ko = cfg.kriging;
      ko.block.seed = res.seeds.block;
      res.kriging = run_block_kriging(st, fits, data.geo.regions, cfg.threshold, cfg.return_periods, ko);
      for (const auto& wmsg : res.kriging->lmc.empirical_a.warnings) res.warnings.push_back(w.label() + ": " + wmsg);
      res.estimates.push_back(res.kriging->estimates);
    } else {
      GpdFitOptions opt;
      opt.min_exceedances = cfg.min_exceedances;
      res.estimates.push_back(regional_max_fit(regional_max_series(panel, st, data.region_ids), cfg.threshold,
                                               cfg.return_periods, cfg.decluster, &res.regional_max_fits, opt));
    }
  }
  return res;
}

struct AnalysisResult {
  AnalysisConfig config;
  DistanceMatrix region_distances;
  std::vector<std::string> region_ids;
  std::vector<WindowResult> windows;
  std::vector<std::string> warnings;
};

/// Runs every configured window. Windows run concurrently; each is
/// deterministic on its own, so the thread count does not affect results.
inline AnalysisResult run_analysis(const AnalysisConfig& cfg, const StudyData& data) {
  cfg.validate();
  AnalysisResult out;
  out.config = cfg;
  out.region_ids = data.region_ids;
  out.warnings = data.warnings;
  out.region_distances = region_distance_matrix(data.geo.regions, cfg.hausdorff_f, cfg.hausdorff_pitch);
  out.windows.resize(cfg.windows.size());
  std::vector<std::exception_ptr> errors(cfg.windows.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cfg.windows.size(); k = next++) {
      try {
        out.windows[k] = run_window(cfg, data, out.region_distances, cfg.windows[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cfg.windows.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& w : out.windows)
    for (const auto& m : w.warnings) out.warnings.push_back(m);
  return out;
}

namespace detail {

inline std::string num(double v) { return format_number(v); }

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json pare_fit_json(const PareFit& f, const std::vector<std::string>& region_ids) {
  json regions = json::array();
  for (std::size_t r = 0; r < region_ids.size(); ++r)
    regions.push_back({{"region", region_ids[r]},
                       {"beta", f.beta(static_cast<Eigen::Index>(r))},
                       {"beta_se", f.beta_se(static_cast<Eigen::Index>(r))}});
  return {{"rho", f.rho},
          {"tau2", f.tau2},
          {"loglik", number_or_null(f.loglik)},
          {"rho_interval", {f.rho_interval.lo, f.rho_interval.hi}},
          {"boundary_rho", f.boundary_rho},
          {"zero_residual", f.zero_residual},
          {"regions", regions}};
}

inline json variogram_json(const VariogramModel& m) {
  return {{"kind", to_string(m.kind)},
          {"nugget", m.nugget},
          {"partial_sill", m.partial_sill},
          {"range", m.range},
          {"degenerate", m.degenerate}};
}

inline json empirical_json(const EmpiricalVariogram& e) {
  json bins = json::array();
  for (const auto& b : e.bins) bins.push_back({{"lag", b.lag}, {"gamma", b.gamma}, {"pairs", b.pairs}});
  return {{"max_dist", e.max_dist}, {"dropped_bins", e.dropped_bins}, {"bins", bins}};
}

inline json matrix_json(const Eigen::Matrix2d& m) { return {{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}; }

inline json kriging_json(const RegionKrigingResult& k) {
  if (k.single_station) return {{"single_station", true}};
  return {{"single_station", false},
          {"coregionalization",
           {{"variables", {"shape", "log_scale"}},
            {"kind", to_string(k.lmc.model.kind)},
            {"range", k.lmc.model.range},
            {"nugget", matrix_json(k.lmc.model.nugget)},
            {"structure", matrix_json(k.lmc.model.structure)},
            {"projected", k.lmc.projected}}},
          {"direct_shape", variogram_json(k.lmc.direct_a)},
          {"direct_log_scale", variogram_json(k.lmc.direct_b)},
          {"rate", variogram_json(k.rate_model)},
          {"empirical",
           {{"shape", empirical_json(k.lmc.empirical_a)},
            {"log_scale", empirical_json(k.lmc.empirical_b)},
            {"cross", empirical_json(k.lmc.empirical_ab)},
            {"rate", empirical_json(k.rate_empirical)}}}};
}

}  // namespace detail

inline const std::vector<std::string>& station_fit_header() {
  static const std::vector<std::string> h{"window",  "station_id", "region_id", "included", "reason",
                                          "coverage", "n_days",    "n_exceed",  "threshold", "scale",
                                          "scale_se", "shape",     "shape_se",  "scale_shape_cov",
                                          "rate",     "rate_se",   "loglik"};
  return h;
}

inline std::vector<std::vector<std::string>> station_fit_rows(const Window& w,
                                                              const std::vector<StationWindowFit>& fits) {
  using detail::num;
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : fits) {
    std::vector<std::string> row{w.label(), s.station_id, s.region_id, s.included ? "1" : "0", s.reason,
                                 num(s.coverage)};
    if (s.included) {
      const GpdFit& f = s.fit;
      for (const std::string& v :
           {std::to_string(f.n_days), std::to_string(f.n_exceed), num(f.threshold), num(f.scale), num(f.scale_se()),
            num(f.shape), num(f.shape_se()), num(f.cov(0, 1)), num(f.rate), num(f.rate_se), num(f.loglik)})
        row.push_back(v);
    } else {
      row.resize(station_fit_header().size());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Files written by emit_reports, relative to the output directory.
/// windows/<start>-<end>/{station_fits.csv, region_estimates.csv, return_levels.csv, pare.json, variograms.json}
/// plus region_distances.csv, return_levels_long.csv and manifest.json at the top level.
inline std::vector<std::string> emit_reports(const AnalysisResult& res, const std::filesystem::path& output_dir) {
  using detail::num;
  std::vector<std::string> written;
  auto record = [&](const std::filesystem::path& rel) { written.push_back(rel.generic_string()); };

  {
    std::vector<std::string> header{"region"};
    for (const auto& id : res.region_ids) header.push_back(id);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < res.region_ids.size(); ++i) {
      std::vector<std::string> row{res.region_ids[i]};
      for (std::size_t j = 0; j < res.region_ids.size(); ++j)
        row.push_back(num(res.region_distances.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      rows.push_back(std::move(row));
    }
    write_csv(output_dir / "region_distances.csv", header, rows);
    record("region_distances.csv");
  }

  std::vector<std::vector<std::string>> long_rows;
  for (const WindowResult& w : res.windows) {
    const std::filesystem::path rel = std::filesystem::path("windows") / w.window.label();
    const std::filesystem::path dir = output_dir / rel;
    write_csv(dir / "station_fits.csv", station_fit_header(), station_fit_rows(w.window, w.stations));
    record(rel / "station_fits.csv");

    std::vector<std::vector<std::string>> est_rows, rl_rows;
    for (const RegionEstimates& e : w.estimates)
      for (const RegionEstimate& r : e.regions) {
        est_rows.push_back({w.window.label(), e.method, r.region_id, num(r.scale), num(r.scale_se), num(r.shape),
                            num(r.shape_se), num(r.scale_shape_cov), num(r.rate), num(r.rate_se)});
        for (const ReturnLevelEstimate& rl : r.return_levels) {
          std::vector<std::string> row{w.window.label(), r.region_id, e.method, num(rl.period), num(rl.level),
                                       num(rl.se)};
          rl_rows.push_back(row);
          long_rows.push_back(std::move(row));
        }
      }
    write_csv(dir / "region_estimates.csv",
              {"window", "method", "region", "scale", "scale_se", "shape", "shape_se", "scale_shape_cov", "rate",
               "rate_se"},
              est_rows);
    record(rel / "region_estimates.csv");
    write_csv(dir / "return_levels.csv", {"window", "region", "method", "period", "level", "se"}, rl_rows);
    record(rel / "return_levels.csv");

    if (w.pare) {
      write_json(dir / "pare.json", {{"window", w.window.label()},
                                     {"log_scale", detail::pare_fit_json(w.pare->log_scale, res.region_ids)},
                                     {"shape", detail::pare_fit_json(w.pare->shape, res.region_ids)},
                                     {"rate", detail::pare_fit_json(w.pare->rate, res.region_ids)}});
      record(rel / "pare.json");
    }
    if (w.kriging) {
      write_json(dir / "variograms.json", detail::kriging_json(*w.kriging));
      record(rel / "variograms.json");
    }
  }
  write_csv(output_dir / "return_levels_long.csv", {"window", "region", "method", "period", "level", "se"},
            long_rows);
  record("return_levels_long.csv");

  json seeds = json::object();
  for (const WindowResult& w : res.windows)
    seeds[w.window.label()] = {{"jitter", w.seeds.jitter}, {"block", w.seeds.block}};
  json manifest{{"manifest_version", 1},
                {"tool", "pare"},
                {"version", kVersion},
                {"libraries",
                 {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"boost", BOOST_LIB_VERSION},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
                {"config", to_json(res.config)},
                {"seeds", seeds},
                {"region_ids", res.region_ids},
                {"outputs", written},
                {"warnings", res.warnings}};
  write_json(output_dir / "manifest.json", manifest);
  written.push_back("manifest.json");
  return written;
}

/// Writes the Table 1 style summary and the per-iteration estimates.
inline void emit_simulation_report(const SimulationReport& rep, const SimulationFileConfig& cfg,
                                   const std::filesystem::path& output_dir) {
  using detail::num;
  std::vector<std::vector<std::string>> rows;
  for (const SimulationCell& c : rep.cells)
    rows.push_back({c.model, c.region_id, c.parameter, num(c.truth), num(c.mean), num(c.rmse), num(c.mae),
                    std::to_string(c.n)});
  write_csv(output_dir / "simulation_summary.csv", {"model", "region", "parameter", "truth", "mean", "rmse", "mae", "n"},
            rows);

  std::vector<std::vector<std::string>> raw;
  for (const IterationResult& it : rep.iterations) {
    if (!it.ok) {
      raw.push_back({std::to_string(it.iteration), "0", "", "", "", "", "", it.error});
      continue;
    }
    for (const RegionEstimates& e : it.estimates)
      for (const RegionEstimate& r : e.regions)
        raw.push_back({std::to_string(it.iteration), "1", e.method, r.region_id, num(r.scale), num(r.shape),
                       num(r.rate), ""});
  }
  write_csv(output_dir / "simulation_iterations.csv",
            {"iteration", "ok", "model", "region", "scale", "shape", "rate", "error"}, raw);

  json counts = json::array();
  for (auto n : rep.stations_per_region) counts.push_back(n);
  write_json(output_dir / "simulation_manifest.json", {{"manifest_version", 1},
                                                       {"tool", "pare"},
                                                       {"version", kVersion},
                                                       {"config", to_json(cfg)},
                                                       {"n_stations", rep.n_stations},
                                                       {"stations_per_region", counts},
                                                       {"failures", rep.failures}});
}

}  // namespace pare
