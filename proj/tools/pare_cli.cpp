// Command-line front end: ingestion checks, station fits, the regional
// estimators over rolling windows, and the simulation study.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pare/config.hpp"
#include "pare/pipeline.hpp"

namespace {

using pare::AnalysisConfig;

enum ExitCode { kOk = 0, kInternal = 1, kDataError = 2, kConvergence = 3 };

/// Flags shared by the analysis subcommands. Values given on the command line
/// take precedence over the config file.
struct AnalysisFlags {
  std::string config;
  std::optional<std::string> data_dir;
  std::optional<std::string> regions;
  std::optional<std::string> output;
  std::optional<double> threshold;
  std::vector<std::string> windows;
  std::vector<std::string> methods;
  std::vector<double> periods;
  std::optional<std::uint64_t> seed;
  std::optional<double> c;
  std::optional<double> jitter_sd;
  std::optional<unsigned> threads;

  void attach(CLI::App* app, bool with_methods) {
    app->add_option("--config", config, "JSON analysis config or a previous run manifest");
    app->add_option("--data-dir", data_dir, "directory with stations.csv and <station_id>.csv files");
    app->add_option("--regions", regions, "GeoJSON region polygons");
    app->add_option("--output", output, "output directory");
    app->add_option("--threshold", threshold, "threshold in tenths of mm");
    app->add_option("--window", windows, "window as START-END, repeatable");
    if (with_methods) app->add_option("--method", methods, "pare, kriging or regional_max, repeatable");
    app->add_option("--return-period", periods, "return period in years, repeatable");
    app->add_option("--seed", seed, "root seed");
    app->add_option("--c", c, "distance given to same-region station pairs, miles");
    app->add_option("--jitter-sd", jitter_sd, "standard deviation of the distance jitter");
    app->add_option("--threads", threads, "worker threads (0: all cores)");
  }

  AnalysisConfig resolve() const {
    AnalysisConfig cfg = config.empty() ? AnalysisConfig{} : pare::load_analysis_config(config);
    if (data_dir) cfg.data_dir = *data_dir;
    if (regions) cfg.regions_path = *regions;
    if (output) cfg.output_dir = *output;
    if (threshold) cfg.threshold = *threshold;
    if (!windows.empty()) {
      cfg.windows.clear();
      for (const std::string& w : windows) {
        int a = 0, b = 0;
        char dash = 0;
        if (std::sscanf(w.c_str(), "%d%c%d", &a, &dash, &b) != 3 || dash != '-')
          throw pare::Error(pare::Errc::InvalidArgument, "window '" + w + "' is not START-END");
        cfg.windows.push_back({a, b});
      }
    }
    if (!methods.empty()) cfg.methods = methods;
    if (!periods.empty()) cfg.return_periods = periods;
    if (seed) cfg.seed = *seed;
    if (c) cfg.c = *c;
    if (jitter_sd) cfg.jitter_sd = *jitter_sd;
    if (threads) cfg.threads = *threads;
    if (cfg.data_dir.empty()) throw pare::Error(pare::Errc::InvalidArgument, "no data directory given");
    if (cfg.regions_path.empty()) throw pare::Error(pare::Errc::InvalidArgument, "no regions file given");
    cfg.data_dir = std::filesystem::absolute(cfg.data_dir).lexically_normal();
    cfg.regions_path = std::filesystem::absolute(cfg.regions_path).lexically_normal();
    cfg.validate();
    return cfg;
  }
};

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int ingest_check(const AnalysisFlags& flags) {
  const AnalysisConfig cfg = flags.resolve();
  const pare::StudyData data = pare::load_study(cfg);
  print_warnings(data.warnings);
  const auto counts = data.stations.counts();
  std::cout << "regions " << data.region_ids.size() << ", stations " << data.stations.size() << '\n';
  for (std::size_t r = 0; r < counts.size(); ++r)
    std::cout << "  region " << data.region_ids[r] << ": " << counts[r] << " stations, "
              << pare::format_number(pare::area(data.geo.regions[r])) << " sq mi\n";
  for (const pare::Window& w : cfg.windows) {
    const auto fits = pare::fit_window_stations(cfg, data, w);
    std::size_t used = 0;
    for (const auto& f : fits) used += f.included;
    std::cout << "  window " << w.label() << ": " << used << " stations pass inclusion\n";
  }
  return kOk;
}

int fit_stations(const AnalysisFlags& flags) {
  const AnalysisConfig cfg = flags.resolve();
  const pare::StudyData data = pare::load_study(cfg);
  std::vector<std::string> warnings = data.warnings;
  for (const pare::Window& w : cfg.windows) {
    const auto fits = pare::fit_window_stations(cfg, data, w, nullptr, &warnings);
    const auto path = cfg.output_dir / "windows" / w.label() / "station_fits.csv";
    pare::write_csv(path, pare::station_fit_header(), pare::station_fit_rows(w, fits));
    std::cout << path.string() << '\n';
  }
  print_warnings(warnings);
  return kOk;
}

int analyse(AnalysisFlags flags, const std::vector<std::string>& forced_methods) {
  if (!forced_methods.empty()) flags.methods = forced_methods;
  const AnalysisConfig cfg = flags.resolve();
  const pare::StudyData data = pare::load_study(cfg);
  const pare::AnalysisResult res = pare::run_analysis(cfg, data);
  print_warnings(res.warnings);
  for (const auto& f : pare::emit_reports(res, cfg.output_dir)) std::cout << (cfg.output_dir / f).string() << '\n';
  return kOk;
}

struct SimulateFlags {
  std::string config;
  std::optional<std::string> regions;
  std::optional<std::string> output;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_scale;
  std::optional<unsigned> threads;
};

int simulate(const SimulateFlags& flags) {
  pare::SimulationFileConfig fc = flags.config.empty() ? pare::SimulationFileConfig{}
                                                       : pare::load_simulation_config(flags.config);
  if (flags.regions) fc.regions_path = *flags.regions;
  if (flags.output) fc.output_dir = *flags.output;
  if (flags.iterations) fc.iterations = *flags.iterations;
  if (flags.seed) fc.seed = *flags.seed;
  if (flags.noise_scale) fc.noise_scale = *flags.noise_scale;
  if (flags.threads) fc.threads = *flags.threads;
  if (fc.regions_path.empty()) throw pare::Error(pare::Errc::InvalidArgument, "no regions file given");

  pare::SimulationConfig cfg;
  cfg.regions = pare::read_regions_geojson(fc.regions_path).regions;
  cfg.grid_resolution = fc.grid_resolution;
  cfg.truth.clear();
  for (std::size_t r = 0; r < fc.truth_scale.size(); ++r) cfg.truth.push_back({fc.truth_scale[r], fc.truth_shape[r]});
  cfg.rate = fc.rate;
  cfg.years = fc.years;
  cfg.n_iterations = fc.iterations;
  cfg.seed = fc.seed;
  cfg.threshold = fc.threshold;
  cfg.noise_scale = fc.noise_scale;
  cfg.decluster_regional_max = fc.decluster_regional_max;
  cfg.hausdorff_f = fc.hausdorff_f;
  cfg.hausdorff_pitch = fc.hausdorff_pitch;
  cfg.pare.c = fc.c;
  cfg.pare.jitter_sd = fc.jitter_sd;
  cfg.kriging = fc.kriging;
  cfg.threads = fc.threads;

  const pare::SimulationReport rep = pare::run_simulation(cfg);
  pare::emit_simulation_report(rep, fc, fc.output_dir);
  std::cout << "stations " << rep.n_stations << ", iterations " << cfg.n_iterations << ", failures " << rep.failures
            << '\n';
  std::printf("%-14s %-6s %-9s %10s %10s %10s %10s\n", "model", "region", "parameter", "truth", "mean", "rmse", "mae");
  for (const auto& c : rep.cells)
    std::printf("%-14s %-6s %-9s %10.4f %10.4f %10.4f %10.4f\n", c.model.c_str(), c.region_id.c_str(),
                c.parameter.c_str(), c.truth, c.mean, c.rmse, c.mae);
  for (const auto& it : rep.iterations)
    if (!it.ok) std::cerr << "warning: iteration " << it.iteration << " failed: " << it.error << '\n';
  return rep.failures == rep.iterations.size() ? kConvergence : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-to-area extreme rainfall estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pare::kVersion);

  AnalysisFlags ingest_flags, fit_flags, pare_flags, krige_flags, rmax_flags, window_flags;
  auto* ingest_cmd = app.add_subcommand("ingest-check", "parse inputs and report station coverage");
  ingest_flags.attach(ingest_cmd, false);
  auto* fit_cmd = app.add_subcommand("fit-stations", "per-station GPD fits for each window");
  fit_flags.attach(fit_cmd, false);
  auto* pare_cmd = app.add_subcommand("pare", "PARE estimates for each window");
  pare_flags.attach(pare_cmd, false);
  auto* krige_cmd = app.add_subcommand("krige", "block kriging estimates for each window");
  krige_flags.attach(krige_cmd, false);
  auto* rmax_cmd = app.add_subcommand("regional-max", "regional max estimates for each window");
  rmax_flags.attach(rmax_cmd, false);
  auto* windows_cmd = app.add_subcommand("windows", "all selected methods over all windows");
  window_flags.attach(windows_cmd, true);

  SimulateFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("simulate", "simulation study with known regional truth");
  sim_cmd->add_option("--config", sim_flags.config, "JSON simulation config");
  sim_cmd->add_option("--regions", sim_flags.regions, "GeoJSON region polygons");
  sim_cmd->add_option("--output", sim_flags.output, "output directory");
  sim_cmd->add_option("--iterations", sim_flags.iterations, "number of iterations");
  sim_cmd->add_option("--seed", sim_flags.seed, "root seed");
  sim_cmd->add_option("--noise-scale", sim_flags.noise_scale, "rank noise amplitude as a fraction of series length");
  sim_cmd->add_option("--threads", sim_flags.threads, "worker threads (0: all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) return ingest_check(ingest_flags);
    if (*fit_cmd) return fit_stations(fit_flags);
    if (*pare_cmd) return analyse(pare_flags, {"pare"});
    if (*krige_cmd) return analyse(krige_flags, {"kriging"});
    if (*rmax_cmd) return analyse(rmax_flags, {"regional_max"});
    if (*windows_cmd) return analyse(window_flags, {});
    if (*sim_cmd) return simulate(sim_flags);
  } catch (const pare::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_convergence_failure() ? kConvergence : kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
