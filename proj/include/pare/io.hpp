#pragma once

// File formats: per-station daily CSVs, the station catalogue, GeoJSON regions
// and plain CSV output helpers.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pare/error.hpp"
#include "pare/geometry.hpp"
#include "pare/series.hpp"

namespace pare {

namespace fs = std::filesystem;

/// Depth above which a 99.9th percentile suggests the file is not in tenths of mm.
inline constexpr double kUnitSuspectDepth = 5080.0;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string where(const fs::path& path, std::size_t line) { return path.string() + ":" + std::to_string(line); }

}  // namespace detail

/// Reads `date,prcp_tenths_mm` rows (an optional header is skipped). An empty
/// depth field is a missing day; calendar gaps become missing days too.
inline DailySeries read_station_csv(const fs::path& path, const std::string& station_id,
                                    std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  DailySeries s{station_id, {}, {}, {}};
  std::string line;
  std::size_t line_no = 0;
  bool have_first = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = detail::split_csv(t);
    if (fields.size() != 2) throw Error(Errc::ParseError, detail::where(path, line_no) + ": expected 2 fields");
    const auto day = parse_date(fields[0]);
    if (!day) {
      if (!have_first && line_no == 1) continue;  // header
      throw Error(Errc::ParseError, detail::where(path, line_no) + ": bad date '" + fields[0] + "'");
    }
    double depth = 0.0;
    const bool missing = fields[1].empty() || fields[1] == "NA";
    if (!missing) {
      if (!detail::parse_double(fields[1], depth))
        throw Error(Errc::ParseError, detail::where(path, line_no) + ": bad depth '" + fields[1] + "'");
      if (depth < 0.0) throw Error(Errc::ParseError, detail::where(path, line_no) + ": negative depth");
    }
    if (!have_first) {
      s.start = *day;
      have_first = true;
    } else {
      const auto next = s.day(s.size());
      if (*day < next)
        throw Error(Errc::ParseError, detail::where(path, line_no) + ": date " + fields[0] + " is not after " +
                                          format_date(next - std::chrono::days{1}));
      for (auto d = next; d < *day; d += std::chrono::days{1}) {
        s.depth.push_back(0.0);
        s.missing.push_back(1);
      }
    }
    s.depth.push_back(missing ? 0.0 : depth);
    s.missing.push_back(missing ? 1 : 0);
  }
  if (warnings) {
    std::vector<double> present;
    for (std::size_t k = 0; k < s.size(); ++k)
      if (!s.is_missing(k)) present.push_back(s.depth[k]);
    if (!present.empty()) {
      const auto idx = static_cast<std::size_t>(std::ceil(0.999 * static_cast<double>(present.size()))) - 1;
      std::nth_element(present.begin(), present.begin() + static_cast<std::ptrdiff_t>(idx), present.end());
      if (present[idx] > kUnitSuspectDepth)
        warnings->push_back("UnitSuspect: station '" + station_id + "' 99.9th percentile depth " +
                            std::to_string(present[idx]) + " exceeds " + std::to_string(kUnitSuspectDepth) +
                            " tenths of mm");
    }
  }
  return s;
}

struct StationRecord {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
};

/// `station_id,lon,lat` with a header row.
inline std::vector<StationRecord> read_station_catalog(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<StationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = detail::split_csv(t);
    if (f.size() != 3) throw Error(Errc::ParseError, detail::where(path, line_no) + ": expected station_id,lon,lat");
    StationRecord r{f[0], 0.0, 0.0};
    if (!detail::parse_double(f[1], r.lon) || !detail::parse_double(f[2], r.lat)) {
      if (line_no == 1) continue;  // header
      throw Error(Errc::ParseError, detail::where(path, line_no) + ": bad coordinates");
    }
    out.push_back(r);
  }
  return out;
}

struct GeoRegions {
  RegionSet regions;
  LocalProjection projection{0.0, 0.0};
};

/// FeatureCollection of Polygon / MultiPolygon features carrying a `region_id`
/// property. Coordinates are lon/lat and are projected around the centre of
/// their bounding box.
inline GeoRegions read_regions_geojson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  const auto& features = doc.contains("features") ? doc.at("features") : nlohmann::json::array({doc});
  struct RawRegion {
    std::string id;
    std::vector<std::vector<std::vector<std::array<double, 2>>>> polygons;
  };
  std::vector<RawRegion> raw;
  double lon_min = 1e9, lon_max = -1e9, lat_min = 1e9, lat_max = -1e9;
  try {
    for (const auto& f : features) {
      const auto& props = f.at("properties");
      if (!props.contains("region_id")) throw Error(Errc::ParseError, path.string() + ": feature without region_id");
      const auto& pid = props.at("region_id");
      RawRegion r{pid.is_string() ? pid.get<std::string>() : pid.dump(), {}};
      const auto& g = f.at("geometry");
      const std::string type = g.at("type").get<std::string>();
      if (type == "Polygon")
        r.polygons.push_back(g.at("coordinates").get<std::vector<std::vector<std::array<double, 2>>>>());
      else if (type == "MultiPolygon")
        r.polygons = g.at("coordinates").get<decltype(r.polygons)>();
      else
        throw Error(Errc::ParseError, path.string() + ": unsupported geometry type " + type);
      for (const auto& poly : r.polygons)
        for (const auto& ring : poly)
          for (const auto& c : ring) {
            lon_min = std::min(lon_min, c[0]);
            lon_max = std::max(lon_max, c[0]);
            lat_min = std::min(lat_min, c[1]);
            lat_max = std::max(lat_max, c[1]);
          }
      raw.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  if (raw.empty()) throw Error(Errc::ParseError, path.string() + ": no features");
  const LocalProjection proj(0.5 * (lon_min + lon_max), 0.5 * (lat_min + lat_max));
  std::vector<Region> regions;
  for (const auto& r : raw) {
    Region reg{r.id, {}};
    for (const auto& poly : r.polygons) {
      Polygon p;
      for (std::size_t k = 0; k < poly.size(); ++k) {
        Ring ring;
        for (const auto& c : poly[k]) ring.push_back(proj.forward(c[0], c[1]));
        if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
        if (k == 0)
          p.outer = std::move(ring);
        else
          p.holes.push_back(std::move(ring));
      }
      reg.parts.push_back(std::move(p));
    }
    regions.push_back(std::move(reg));
  }
  return {RegionSet(std::move(regions)), proj};
}

struct StationPanel {
  std::vector<StationRecord> catalog;
  std::vector<DailySeries> series;  // parallel to catalog
  std::vector<std::string> warnings;
};

/// Reads `stations.csv` and `<station_id>.csv` for each listed station from
/// `data_dir`. Stations with no usable day are dropped with a warning.
inline StationPanel ingest(const fs::path& data_dir) {
  StationPanel out;
  for (const StationRecord& r : read_station_catalog(data_dir / "stations.csv")) {
    DailySeries s = read_station_csv(data_dir / (r.id + ".csv"), r.id, &out.warnings);
    if (s.present_days() == 0) {
      out.warnings.push_back("station '" + r.id + "' has no usable days; dropped");
      continue;
    }
    out.catalog.push_back(r);
    out.series.push_back(std::move(s));
  }
  return out;
}

/// Shortest round-trip decimal representation.
inline std::string format_number(double v) {
  char buf[32];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Quotes a field containing a comma, quote or line break.
inline std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char ch : v) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

/// Writes a CSV file (header plus rows) with '\n' line endings, creating parent directories.
inline void write_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Square matrix as CSV without a header.
inline void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_number(m(i, j));
    out << '\n';
  }
}

}  // namespace pare
