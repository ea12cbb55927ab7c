#pragma once

// Station-to-region assignment and the block distance / inverse-distance
// weight matrices used by the point-to-area CAR model.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pare/error.hpp"
#include "pare/geometry.hpp"

namespace pare {

/// Gauge locations with their region membership.
struct StationSet {
  std::vector<std::string> ids;
  std::vector<Point> points;
  std::vector<std::size_t> region;  // index into the RegionSet
  std::size_t region_count = 0;
  std::vector<std::string> warnings;

  std::size_t size() const { return ids.size(); }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> c(region_count, 0);
    for (std::size_t r : region) ++c[r];
    return c;
  }

  /// Subset keeping stations whose index is listed, in the given order.
  StationSet subset(const std::vector<std::size_t>& keep) const {
    StationSet out;
    out.region_count = region_count;
    for (std::size_t k : keep) {
      out.ids.push_back(ids.at(k));
      out.points.push_back(points.at(k));
      out.region.push_back(region.at(k));
    }
    return out;
  }
};

/// Maps each station to the region containing it. Points on a shared boundary
/// go to the lowest region index and a warning is recorded.
inline StationSet assign_stations(const std::vector<std::string>& ids, const std::vector<Point>& points,
                                  const RegionSet& regions) {
  if (ids.size() != points.size()) throw Error(Errc::InvalidArgument, "station ids and points differ in length");
  StationSet out;
  out.region_count = regions.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<std::size_t> hits;
    for (std::size_t r = 0; r < regions.size(); ++r)
      if (contains(regions[r], points[i])) hits.push_back(r);
    if (hits.empty()) throw Error(Errc::PointOutsideAllRegions, "station '" + ids[i] + "'");
    if (hits.size() > 1)
      out.warnings.push_back("station '" + ids[i] + "' lies on the boundary of regions '" + regions[hits[0]].id +
                             "' and '" + regions[hits[1]].id + "'; assigned to '" + regions[hits[0]].id + "'");
    out.ids.push_back(ids[i]);
    out.points.push_back(points[i]);
    out.region.push_back(hits.front());
  }
  return out;
}

/// n x r zero/one region indicator design matrix.
inline Eigen::MatrixXd indicator_matrix(const StationSet& stations) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(stations.size()),
                                            static_cast<Eigen::Index>(stations.region_count));
  for (std::size_t i = 0; i < stations.size(); ++i)
    h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(stations.region[i])) = 1.0;
  return h;
}

struct DistanceMatrix {
  enum class Kind { RegionHausdorff, Block };
  Eigen::MatrixXd entries;
  Kind kind = Kind::RegionHausdorff;
};

struct WeightMatrix {
  Eigen::MatrixXd entries;
  double jitter_sd = 0.0;
  double c = 1.0;
};

/// r x r matrix of extended Hausdorff distances between regions.
inline DistanceMatrix region_distance_matrix(const RegionSet& regions, double f,
                                             double pitch = kDefaultHausdorffPitch) {
  const auto r = static_cast<Eigen::Index>(regions.size());
  std::vector<std::vector<Point>> clouds;
  clouds.reserve(regions.size());
  for (const Region& reg : regions) clouds.push_back(discretize(reg, pitch));
  DistanceMatrix d{Eigen::MatrixXd::Zero(r, r), DistanceMatrix::Kind::RegionHausdorff};
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = i + 1; j < r; ++j) {
      const double v = extended_hausdorff(clouds[static_cast<std::size_t>(i)], clouds[static_cast<std::size_t>(j)], f);
      d.entries(i, j) = v;
      d.entries(j, i) = v;
    }
  return d;
}

/// Expands a region distance matrix to station level; same-region pairs
/// (including the diagonal) get the constant c.
inline DistanceMatrix block_distance_matrix(const DistanceMatrix& regional, const StationSet& stations, double c) {
  const Eigen::Index r = regional.entries.rows();
  if (regional.entries.cols() != r || static_cast<std::size_t>(r) != stations.region_count)
    throw Error(Errc::InvalidArgument, "region distance matrix does not match station region count");
  if (!(c > 0.0)) throw Error(Errc::InvalidC, "c must be positive");
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j)
      if (i != j && !(c < regional.entries(i, j)))
        throw Error(Errc::InvalidC, "c = " + std::to_string(c) + " is not below region distance " +
                                        std::to_string(regional.entries(i, j)));
  const auto n = static_cast<Eigen::Index>(stations.size());
  DistanceMatrix out{Eigen::MatrixXd(n, n), DistanceMatrix::Kind::Block};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto ri = static_cast<Eigen::Index>(stations.region[static_cast<std::size_t>(i)]);
      const auto rj = static_cast<Eigen::Index>(stations.region[static_cast<std::size_t>(j)]);
      out.entries(i, j) = ri == rj ? c : regional.entries(ri, rj);
    }
  return out;
}

/// Adds Normal(0, sd) noise to the lower triangle (diagonal included) and
/// mirrors it to the upper triangle. Redraws when an entry becomes non-positive.
inline DistanceMatrix jitter_symmetrize(const DistanceMatrix& block, double sd, std::uint64_t seed,
                                        int max_attempts = 100) {
  if (!(sd > 0.0)) throw Error(Errc::InvalidArgument, "jitter sd must be positive");
  const Eigen::Index n = block.entries.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sd);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    DistanceMatrix out{block.entries, block.kind};
    bool ok = true;
    for (Eigen::Index i = 0; i < n && ok; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = block.entries(i, j) + noise(rng);
        if (!(v > 0.0)) {
          ok = false;
          break;
        }
        out.entries(i, j) = v;
        out.entries(j, i) = v;
      }
    if (ok) return out;
  }
  throw Error(Errc::NonPositiveEntry, "jitter kept producing non-positive distances");
}

/// Reciprocal weights. The matrix is rescaled by its maximum entry when c != 1
/// or when jitter pushed an entry above 1, so entries never exceed 1.
inline WeightMatrix inverse_distance_weights(const DistanceMatrix& d, double c = 1.0, double jitter_sd = 0.0) {
  WeightMatrix w{Eigen::MatrixXd(d.entries.rows(), d.entries.cols()), jitter_sd, c};
  for (Eigen::Index i = 0; i < d.entries.rows(); ++i)
    for (Eigen::Index j = 0; j < d.entries.cols(); ++j) {
      if (!(d.entries(i, j) > 0.0))
        throw Error(Errc::ZeroDistance, "non-positive distance at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      w.entries(i, j) = 1.0 / d.entries(i, j);
    }
  const double max_entry = w.entries.maxCoeff();
  if (c != 1.0 || max_entry > 1.0) w.entries /= max_entry;
  return w;
}

}  // namespace pare
