// Writes a synthetic station dataset (stations.csv plus one daily CSV per
// station) inside a set of GeoJSON regions. Region-wide storm days give
// cross-station dependence, a light-rain tail after storms exercises
// declustering, and staggered record starts and gaps exercise coverage rules.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pare/gpd.hpp"
#include "pare/io.hpp"
#include "pare/series.hpp"

namespace {

struct Truth {
  double scale;
  double shape;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic daily rainfall stations for the pare tools"};
  std::string regions_path, output;
  int per_region = 12;
  int first_year = 1921;
  int last_year = 2020;
  std::uint64_t seed = 7;
  std::vector<double> scales{215.0, 228.0, 205.0};
  std::vector<double> shapes{0.20, 0.17, 0.14};
  app.add_option("--regions", regions_path, "GeoJSON region polygons")->required();
  app.add_option("--output", output, "output directory")->required();
  app.add_option("--per-region", per_region, "stations per region");
  app.add_option("--first-year", first_year);
  app.add_option("--last-year", last_year);
  app.add_option("--seed", seed);
  app.add_option("--scale", scales, "GPD scale per region, tenths of mm");
  app.add_option("--shape", shapes, "GPD shape per region");
  CLI11_PARSE(app, argc, argv);

  try {
    const pare::GeoRegions geo = pare::read_regions_geojson(regions_path);
    if (scales.size() < geo.regions.size() || shapes.size() < geo.regions.size())
      throw pare::Error(pare::Errc::InvalidArgument, "one scale and shape per region required");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    struct Station {
      std::string id;
      pare::Point p;
      std::size_t region;
      Truth truth;
    };
    std::vector<Station> stations;
    for (std::size_t r = 0; r < geo.regions.size(); ++r) {
      const pare::BoundingBox bb = pare::bounding_box(geo.regions[r]);
      for (int k = 0; k < per_region;) {
        const pare::Point p{bb.min_x + unif(rng) * (bb.max_x - bb.min_x), bb.min_y + unif(rng) * (bb.max_y - bb.min_y)};
        if (pare::locate(geo.regions[r], p) != pare::Location::Inside) continue;
        char id[16];
        std::snprintf(id, sizeof id, "SYN%04zu", stations.size() + 1);
        // Mild within-region variation around the region's parameters.
        const double wobble = std::sin(0.15 * p.x) * std::cos(0.12 * p.y);
        stations.push_back({id, p, r, {scales[r] * (1.0 + 0.03 * wobble), shapes[r] + 0.01 * wobble}});
        ++k;
      }
    }

    const pare::Day first = pare::first_day_of(first_year);
    const pare::Day last = pare::last_day_of(last_year);
    const auto n_days = static_cast<std::size_t>((last - first).count() + 1);

    // Shared storm calendar.
    std::vector<std::uint8_t> storm(n_days, 0);
    for (auto& s : storm) s = unif(rng) < 0.045;

    const std::filesystem::path out_dir(output);
    std::filesystem::create_directories(out_dir);
    std::vector<std::vector<std::string>> catalog;
    for (const Station& st : stations) {
      const auto [lon, lat] = geo.projection.inverse(st.p);
      catalog.push_back({st.id, pare::format_number(lon), pare::format_number(lat)});

      // Record span: most stations start late, a few have a multi-year gap.
      const int start_offset_years = unif(rng) < 0.4 ? 0 : static_cast<int>(unif(rng) * 50.0);
      const std::size_t begin = std::min(n_days - 1, static_cast<std::size_t>(start_offset_years * 365.25));
      std::size_t gap_from = n_days, gap_to = n_days;
      if (unif(rng) < 0.3) {
        gap_from = begin + static_cast<std::size_t>(unif(rng) * static_cast<double>(n_days - begin));
        gap_to = std::min(n_days, gap_from + static_cast<std::size_t>(365.25 * (1.0 + 4.0 * unif(rng))));
      }

      std::ofstream f(out_dir / (st.id + ".csv"));
      f << "date,prcp_tenths_mm\n";
      double carry = 0.0;  // storm tail into the next day
      for (std::size_t d = begin; d < n_days; ++d) {
        const std::string date = pare::format_date(first + std::chrono::days{static_cast<int>(d)});
        if ((d >= gap_from && d < gap_to) || unif(rng) < 0.01) {
          f << date << ",\n";
          carry = 0.0;
          continue;
        }
        double depth = 0.0;
        const bool exceed = (storm[d] && unif(rng) < 0.8) || unif(rng) < 0.012;
        if (exceed) {
          depth = pare::kDefaultThreshold + pare::sample_gpd_excess(rng, st.truth.scale, st.truth.shape);
          carry = unif(rng) < 0.5 ? depth * (0.1 + 0.5 * unif(rng)) : 0.0;
        } else if (carry > 0.0) {
          depth = carry;
          carry = 0.0;
        } else if (unif(rng) < 0.25) {
          depth = std::exponential_distribution<double>(1.0 / 40.0)(rng);
        }
        f << date << ',' << std::lround(depth) << '\n';
      }
    }
    pare::write_csv(out_dir / "stations.csv", {"station_id", "lon", "lat"}, catalog);
    std::cout << stations.size() << " stations written to " << out_dir.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
