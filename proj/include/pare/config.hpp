#pragma once

// Analysis and simulation configuration with JSON round-tripping.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pare/error.hpp"
#include "pare/geometry.hpp"
#include "pare/gpd.hpp"
#include "pare/kriging.hpp"

namespace pare {

using json = nlohmann::json;

struct Window {
  int start_year = 1981;
  int end_year = 2020;

  std::string label() const { return std::to_string(start_year) + "-" + std::to_string(end_year); }
  friend bool operator==(const Window&, const Window&) = default;
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"pare", "kriging", "regional_max"};
  return m;
}

struct AnalysisConfig {
  std::filesystem::path data_dir;
  std::filesystem::path regions_path;
  std::filesystem::path output_dir = "pare_out";
  double threshold = kDefaultThreshold;
  std::vector<Window> windows = {{1921, 1960}, {1951, 1990}, {1981, 2020}};
  std::vector<std::string> methods = known_methods();
  std::vector<double> return_periods = {25.0, 100.0, 500.0};
  std::uint64_t seed = 20240101;
  double c = 1.0;
  double jitter_sd = 0.1;
  double hausdorff_f = 0.5;
  double hausdorff_pitch = kDefaultHausdorffPitch;
  double min_coverage = 0.8;
  std::size_t min_exceedances = 10;
  bool decluster = true;  // station series, and the regional max series after consolidation
  KrigingOptions kriging;
  unsigned threads = 0;  // 0: hardware concurrency

  bool has_method(const std::string& m) const {
    for (const auto& x : methods)
      if (x == m) return true;
    return false;
  }

  void validate() const {
    if (!(threshold > 0.0)) throw Error(Errc::InvalidArgument, "threshold must be positive");
    if (windows.empty()) throw Error(Errc::InvalidArgument, "at least one window required");
    for (std::size_t k = 0; k < windows.size(); ++k) {
      if (windows[k].start_year > windows[k].end_year)
        throw Error(Errc::InvalidArgument, "window " + windows[k].label() + " ends before it starts");
      if (k > 0 && windows[k].start_year < windows[k - 1].start_year)
        throw Error(Errc::InvalidArgument, "windows must be ordered by start year");
    }
    if (methods.empty()) throw Error(Errc::InvalidArgument, "at least one method required");
    for (const auto& m : methods)
      if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
        throw Error(Errc::InvalidArgument, "unknown method '" + m + "'");
    for (double p : return_periods)
      if (!(p >= 1.0)) throw Error(Errc::InvalidArgument, "return periods must be at least 1 year");
    if (!(c > 0.0)) throw Error(Errc::InvalidC, "c must be positive");
    if (!(jitter_sd >= 0.0)) throw Error(Errc::InvalidArgument, "jitter_sd must be non-negative");
    if (!(hausdorff_f > 0.0 && hausdorff_f <= 1.0)) throw Error(Errc::InvalidArgument, "hausdorff f must lie in (0,1]");
    if (!(hausdorff_pitch > 0.0)) throw Error(Errc::InvalidArgument, "hausdorff pitch must be positive");
    if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) throw Error(Errc::InvalidArgument, "min_coverage must lie in [0,1]");
  }
};

struct SimulationFileConfig {
  std::filesystem::path regions_path;
  std::filesystem::path output_dir = "pare_sim";
  double grid_resolution = 3.0;
  std::vector<double> truth_scale = {233.64, 246.78, 229.38};
  std::vector<double> truth_shape = {0.2044, 0.2319, 0.1641};
  double rate = 0.0544;
  double years = 40.0;
  int iterations = 50;
  std::uint64_t seed = 20240101;
  double threshold = kDefaultThreshold;
  double noise_scale = 0.15;
  bool decluster_regional_max = false;
  double hausdorff_f = 0.5;
  double hausdorff_pitch = kDefaultHausdorffPitch;
  double c = 1.0;
  double jitter_sd = 0.1;
  KrigingOptions kriging;
  unsigned threads = 0;
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::ParseError, where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw Error(Errc::ParseError, "unknown key '" + key + "' in " + where);
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void read_path(const json& j, const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
  if (!j.contains(key)) return;
  std::filesystem::path p = j.at(key).get<std::string>();
  out = p.is_relative() && !base.empty() ? base / p : p;
}

inline json kriging_to_json(const KrigingOptions& k) {
  json block = k.block.kind == BlockMethod::Kind::Grid
                   ? json{{"method", "grid"}, {"resolution", k.block.resolution}}
                   : json{{"method", "random"}, {"samples", k.block.n_samples}};
  return {{"variogram", to_string(k.kind)},
          {"bins", k.n_bins},
          {"max_dist", k.max_dist},
          {"nugget_as_error", k.nugget_as_error},
          {"block", block}};
}

inline KrigingOptions kriging_from_json(const json& j) {
  reject_unknown_keys(j, {"variogram", "bins", "max_dist", "nugget_as_error", "block"}, "kriging");
  KrigingOptions k;
  if (j.contains("variogram")) k.kind = parse_variogram_kind(j.at("variogram").get<std::string>());
  read_opt(j, "bins", k.n_bins);
  read_opt(j, "max_dist", k.max_dist);
  read_opt(j, "nugget_as_error", k.nugget_as_error);
  if (j.contains("block")) {
    const json& b = j.at("block");
    reject_unknown_keys(b, {"method", "resolution", "samples"}, "kriging.block");
    const std::string method = b.value("method", "random");
    if (method == "grid")
      k.block = BlockMethod::grid(b.value("resolution", 0.5));
    else if (method == "random")
      k.block = BlockMethod::random(b.value("samples", std::size_t{1000}), 0);
    else
      throw Error(Errc::ParseError, "kriging.block.method must be 'grid' or 'random'");
  }
  return k;
}

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace detail

inline json to_json(const AnalysisConfig& c) {
  json windows = json::array();
  for (const Window& w : c.windows) windows.push_back({w.start_year, w.end_year});
  return {{"data_dir", c.data_dir.string()},
          {"regions_path", c.regions_path.string()},
          {"output_dir", c.output_dir.string()},
          {"threshold", c.threshold},
          {"windows", windows},
          {"methods", c.methods},
          {"return_periods", c.return_periods},
          {"seed", c.seed},
          {"c", c.c},
          {"jitter_sd", c.jitter_sd},
          {"hausdorff", {{"f", c.hausdorff_f}, {"pitch", c.hausdorff_pitch}}},
          {"inclusion", {{"min_coverage", c.min_coverage}, {"min_exceedances", c.min_exceedances}}},
          {"decluster", c.decluster},
          {"kriging", detail::kriging_to_json(c.kriging)},
          {"threads", c.threads}};
}

/// Relative paths are resolved against `base` (normally the config file's directory).
inline AnalysisConfig analysis_config_from_json(const json& j, const std::filesystem::path& base = {}) {
  AnalysisConfig c;
  try {
    detail::reject_unknown_keys(j,
                                {"data_dir", "regions_path", "output_dir", "threshold", "windows", "methods",
                                 "return_periods", "seed", "c", "jitter_sd", "hausdorff", "inclusion", "decluster",
                                 "kriging", "threads"},
                                "analysis config");
    detail::read_path(j, "data_dir", c.data_dir, base);
    detail::read_path(j, "regions_path", c.regions_path, base);
    detail::read_path(j, "output_dir", c.output_dir, base);
    detail::read_opt(j, "threshold", c.threshold);
    if (j.contains("windows")) {
      c.windows.clear();
      for (const auto& w : j.at("windows")) {
        const auto pair = w.get<std::vector<int>>();
        if (pair.size() != 2) throw Error(Errc::ParseError, "each window is [start_year, end_year]");
        c.windows.push_back({pair[0], pair[1]});
      }
    }
    detail::read_opt(j, "methods", c.methods);
    detail::read_opt(j, "return_periods", c.return_periods);
    detail::read_opt(j, "seed", c.seed);
    detail::read_opt(j, "c", c.c);
    detail::read_opt(j, "jitter_sd", c.jitter_sd);
    if (j.contains("hausdorff")) {
      const json& h = j.at("hausdorff");
      detail::reject_unknown_keys(h, {"f", "pitch"}, "hausdorff");
      detail::read_opt(h, "f", c.hausdorff_f);
      detail::read_opt(h, "pitch", c.hausdorff_pitch);
    }
    if (j.contains("inclusion")) {
      const json& h = j.at("inclusion");
      detail::reject_unknown_keys(h, {"min_coverage", "min_exceedances"}, "inclusion");
      detail::read_opt(h, "min_coverage", c.min_coverage);
      detail::read_opt(h, "min_exceedances", c.min_exceedances);
    }
    detail::read_opt(j, "decluster", c.decluster);
    if (j.contains("kriging")) c.kriging = detail::kriging_from_json(j.at("kriging"));
    detail::read_opt(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("analysis config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Accepts a bare config or a run manifest (whose "config" member is used).
inline AnalysisConfig load_analysis_config(const std::filesystem::path& path) {
  const json j = detail::load_json(path);
  const json& body = j.contains("manifest_version") ? j.at("config") : j;
  return analysis_config_from_json(body, path.parent_path());
}

inline json to_json(const SimulationFileConfig& c) {
  return {{"regions_path", c.regions_path.string()},
          {"output_dir", c.output_dir.string()},
          {"grid_resolution", c.grid_resolution},
          {"truth_scale", c.truth_scale},
          {"truth_shape", c.truth_shape},
          {"rate", c.rate},
          {"years", c.years},
          {"iterations", c.iterations},
          {"seed", c.seed},
          {"threshold", c.threshold},
          {"noise_scale", c.noise_scale},
          {"decluster_regional_max", c.decluster_regional_max},
          {"hausdorff", {{"f", c.hausdorff_f}, {"pitch", c.hausdorff_pitch}}},
          {"c", c.c},
          {"jitter_sd", c.jitter_sd},
          {"kriging", detail::kriging_to_json(c.kriging)},
          {"threads", c.threads}};
}

inline SimulationFileConfig simulation_config_from_json(const json& j, const std::filesystem::path& base = {}) {
  SimulationFileConfig c;
  try {
    detail::reject_unknown_keys(j,
                                {"regions_path", "output_dir", "grid_resolution", "truth_scale", "truth_shape", "rate",
                                 "years", "iterations", "seed", "threshold", "noise_scale", "decluster_regional_max",
                                 "hausdorff", "c", "jitter_sd", "kriging", "threads"},
                                "simulation config");
    detail::read_path(j, "regions_path", c.regions_path, base);
    detail::read_path(j, "output_dir", c.output_dir, base);
    detail::read_opt(j, "grid_resolution", c.grid_resolution);
    detail::read_opt(j, "truth_scale", c.truth_scale);
    detail::read_opt(j, "truth_shape", c.truth_shape);
    detail::read_opt(j, "rate", c.rate);
    detail::read_opt(j, "years", c.years);
    detail::read_opt(j, "iterations", c.iterations);
    detail::read_opt(j, "seed", c.seed);
    detail::read_opt(j, "threshold", c.threshold);
    detail::read_opt(j, "noise_scale", c.noise_scale);
    detail::read_opt(j, "decluster_regional_max", c.decluster_regional_max);
    if (j.contains("hausdorff")) {
      const json& h = j.at("hausdorff");
      detail::reject_unknown_keys(h, {"f", "pitch"}, "hausdorff");
      detail::read_opt(h, "f", c.hausdorff_f);
      detail::read_opt(h, "pitch", c.hausdorff_pitch);
    }
    detail::read_opt(j, "c", c.c);
    detail::read_opt(j, "jitter_sd", c.jitter_sd);
    if (j.contains("kriging")) c.kriging = detail::kriging_from_json(j.at("kriging"));
    detail::read_opt(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("simulation config: ") + e.what());
  }
  if (c.truth_scale.size() != c.truth_shape.size())
    throw Error(Errc::ParseError, "truth_scale and truth_shape differ in length");
  return c;
}

inline SimulationFileConfig load_simulation_config(const std::filesystem::path& path) {
  return simulation_config_from_json(detail::load_json(path), path.parent_path());
}

}  // namespace pare
