#pragma once

// Regional max baseline: day-wise maximum over a region's stations, then a
// univariate GPD fit of the consolidated series.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "pare/error.hpp"
#include "pare/estimates.hpp"
#include "pare/geometry.hpp"
#include "pare/gpd.hpp"
#include "pare/series.hpp"
#include "pare/spatial_weights.hpp"

namespace pare {

struct RegionalSeries {
  std::string region_id;
  DailySeries series;                      // max depth per day; missing when no station reports
  std::vector<std::uint32_t> contributors;  // stations reporting each day
};

/// panel[i] is the record of stations.ids[i]. Each region's series spans the
/// union of its stations' date ranges.
inline std::vector<RegionalSeries> regional_max_series(const std::vector<DailySeries>& panel,
                                                       const StationSet& stations,
                                                       const std::vector<std::string>& region_ids) {
  if (panel.size() != stations.size()) throw Error(Errc::InvalidArgument, "panel and station set differ in size");
  if (region_ids.size() != stations.region_count) throw Error(Errc::InvalidArgument, "region id count mismatch");
  std::vector<RegionalSeries> out;
  for (std::size_t r = 0; r < stations.region_count; ++r) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < stations.size(); ++i)
      if (stations.region[i] == r && panel[i].size() > 0) members.push_back(i);
    if (members.empty()) throw Error(Errc::EmptyRegion, "region '" + region_ids[r] + "' has no stations");
    Day from = panel[members[0]].start;
    Day to = panel[members[0]].day(panel[members[0]].size() - 1);
    for (std::size_t i : members) {
      from = std::min(from, panel[i].start);
      to = std::max(to, panel[i].day(panel[i].size() - 1));
    }
    const auto len = static_cast<std::size_t>((to - from).count() + 1);
    RegionalSeries rs{region_ids[r], {region_ids[r], from, std::vector<double>(len, 0.0), std::vector<std::uint8_t>(len, 1)},
                      std::vector<std::uint32_t>(len, 0)};
    for (std::size_t i : members) {
      const DailySeries& s = panel[i];
      const auto offset = static_cast<std::size_t>((s.start - from).count());
      for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.is_missing(k)) continue;
        const std::size_t d = offset + k;
        if (rs.contributors[d] == 0 || s.depth[k] > rs.series.depth[d]) rs.series.depth[d] = s.depth[k];
        ++rs.contributors[d];
        rs.series.missing[d] = 0;
      }
    }
    out.push_back(std::move(rs));
  }
  return out;
}

/// Univariate GPD fit of each consolidated series, declustered first when requested.
inline RegionEstimates regional_max_fit(const std::vector<RegionalSeries>& series, double threshold,
                                        const std::vector<double>& periods, bool decluster_first = true,
                                        std::vector<GpdFit>* fits_out = nullptr, const GpdFitOptions& opt = {},
                                        double days_per_year = kDaysPerYear) {
  RegionEstimates est{"regional_max", {}};
  if (fits_out) fits_out->clear();
  for (const RegionalSeries& rs : series) {
    const Exceedances ex = exceedances(decluster_first ? decluster(rs.series) : rs.series, threshold);
    const GpdFit fit = fit_gpd(ex.values, threshold, ex.n_days, opt);
    RegionEstimate e;
    e.region_id = rs.region_id;
    e.scale = fit.scale;
    e.scale_se = fit.scale_se();
    e.shape = fit.shape;
    e.shape_se = fit.shape_se();
    e.rate = fit.rate;
    e.rate_se = fit.rate_se;
    e.scale_shape_cov = fit.cov(0, 1);
    est.regions.push_back(e);
    if (fits_out) fits_out->push_back(fit);
  }
  compute_return_levels(est, threshold, periods, days_per_year);
  return est;
}

}  // namespace pare
