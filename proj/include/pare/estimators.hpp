#pragma once

// Region-level estimators applied to a set of station GPD fits.

#include <cstdint>
#include <string>
#include <vector>

#include "pare/car.hpp"
#include "pare/error.hpp"
#include "pare/estimates.hpp"
#include "pare/gpd.hpp"
#include "pare/kriging.hpp"
#include "pare/spatial_weights.hpp"

namespace pare {

struct PareOptions {
  double c = 1.0;
  double jitter_sd = 0.1;
  std::uint64_t jitter_seed = 0;
};

struct PareResult {
  RegionEstimates estimates;
  PareFit log_scale;
  PareFit shape;
  PareFit rate;
  WeightMatrix weights;
};

inline void require_stations_per_region(const StationSet& stations, const std::vector<std::string>& region_ids) {
  const auto counts = stations.counts();
  for (std::size_t r = 0; r < counts.size(); ++r)
    if (counts[r] == 0) throw Error(Errc::InsufficientData, "region '" + region_ids.at(r) + "' has no usable stations");
}

/// Station weight matrix: block expansion of the region distances, optional
/// jitter, then reciprocal weights.
inline WeightMatrix station_weights(const DistanceMatrix& regional, const StationSet& stations, const PareOptions& opt) {
  const DistanceMatrix block = block_distance_matrix(regional, stations, opt.c);
  if (opt.jitter_sd > 0.0)
    return inverse_distance_weights(jitter_symmetrize(block, opt.jitter_sd, opt.jitter_seed), opt.c, opt.jitter_sd);
  return inverse_distance_weights(block, opt.c, 0.0);
}

/// Separate CAR fits to log-scale, shape and rate across stations.
inline PareResult run_pare(const StationSet& stations, const std::vector<GpdFit>& fits, const DistanceMatrix& regional,
                           const std::vector<std::string>& region_ids, double threshold,
                           const std::vector<double>& periods, const PareOptions& opt = {},
                           double days_per_year = kDaysPerYear) {
  if (fits.size() != stations.size()) throw Error(Errc::InvalidArgument, "fits and stations differ in size");
  require_stations_per_region(stations, region_ids);
  PareResult out;
  out.weights = station_weights(regional, stations, opt);
  const auto n = static_cast<Eigen::Index>(fits.size());
  PareInputs in;
  in.x = indicator_matrix(stations);
  in.w = out.weights.entries;
  in.z.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) in.z(i) = std::log(fits[static_cast<std::size_t>(i)].scale);
  out.log_scale = fit_pare(in);
  for (Eigen::Index i = 0; i < n; ++i) in.z(i) = fits[static_cast<std::size_t>(i)].shape;
  out.shape = fit_pare(in);
  for (Eigen::Index i = 0; i < n; ++i) in.z(i) = fits[static_cast<std::size_t>(i)].rate;
  out.rate = fit_pare(in);
  out.estimates = pare_return_levels(out.log_scale, out.shape, out.rate, region_ids, threshold, periods, days_per_year);
  return out;
}

inline RegionKrigingResult run_block_kriging(const StationSet& stations, const std::vector<GpdFit>& fits,
                                             const RegionSet& regions, double threshold,
                                             const std::vector<double>& periods, const KrigingOptions& opt = {},
                                             double days_per_year = kDaysPerYear) {
  return krige_to_regions(station_parameters(stations.points, fits), regions, threshold, periods, opt, days_per_year);
}

}  // namespace pare
