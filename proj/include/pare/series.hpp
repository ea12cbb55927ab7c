#pragma once

// Daily precipitation records, storm declustering and threshold exceedances.

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pare/error.hpp"

namespace pare {

using Day = std::chrono::sys_days;

/// Parses an ISO calendar date "YYYY-MM-DD".
inline std::optional<Day> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto num = [&s](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && ptr == s.data() + pos + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Day{ymd};
}

inline std::string format_date(Day day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

inline Day first_day_of(int year) {
  return Day{std::chrono::year{year} / std::chrono::January / 1};
}
inline Day last_day_of(int year) {
  return Day{std::chrono::year{year} / std::chrono::December / 31};
}

/// One station's contiguous daily record. Depths are in tenths of a millimetre;
/// day k is `start + k`. Gaps in the source are represented as missing days.
struct DailySeries {
  std::string station_id;
  Day start{};
  std::vector<double> depth;
  std::vector<std::uint8_t> missing;

  std::size_t size() const { return depth.size(); }
  Day day(std::size_t k) const { return start + std::chrono::days{static_cast<int>(k)}; }
  bool is_missing(std::size_t k) const { return missing[k] != 0; }

  std::size_t present_days() const {
    std::size_t n = 0;
    for (auto m : missing) n += m == 0;
    return n;
  }

  /// All-present series starting at `start`.
  static DailySeries from_values(std::string id, std::vector<double> values, Day start = first_day_of(2000)) {
    DailySeries s{std::move(id), start, std::move(values), {}};
    s.missing.assign(s.depth.size(), 0);
    return s;
  }
};

/// Restricts a series to [from, to] inclusive; days the record does not cover are missing.
inline DailySeries slice(const DailySeries& s, Day from, Day to) {
  DailySeries out{s.station_id, from, {}, {}};
  if (to < from) return out;
  const auto len = static_cast<std::size_t>((to - from).count() + 1);
  out.depth.assign(len, 0.0);
  out.missing.assign(len, 1);
  for (std::size_t k = 0; k < len; ++k) {
    const auto offset = (from + std::chrono::days{static_cast<int>(k)} - s.start).count();
    if (offset < 0 || offset >= static_cast<long long>(s.size())) continue;
    const auto src = static_cast<std::size_t>(offset);
    out.depth[k] = s.depth[src];
    out.missing[k] = s.missing[src];
  }
  return out;
}

/// Keeps only the largest day (the earliest on ties) of each run of consecutive
/// wet days; the rest of the run is set to zero. Missing days end a run.
inline DailySeries decluster(const DailySeries& series) {
  DailySeries out = series;
  const std::size_t n = out.size();
  std::size_t k = 0;
  while (k < n) {
    if (out.is_missing(k) || !(out.depth[k] > 0.0)) {
      ++k;
      continue;
    }
    std::size_t end = k;
    std::size_t peak = k;
    while (end < n && !out.is_missing(end) && out.depth[end] > 0.0) {
      if (out.depth[end] > out.depth[peak]) peak = end;
      ++end;
    }
    for (std::size_t j = k; j < end; ++j)
      if (j != peak) out.depth[j] = 0.0;
    k = end;
  }
  return out;
}

struct Exceedances {
  std::vector<double> values;  // depths strictly above the threshold, date order
  std::size_t n_days = 0;      // non-missing days
};

inline Exceedances exceedances(const DailySeries& series, double threshold) {
  if (!(threshold > 0.0)) throw Error(Errc::InvalidArgument, "threshold must be positive");
  Exceedances out;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series.is_missing(k)) continue;
    ++out.n_days;
    if (series.depth[k] > threshold) out.values.push_back(series.depth[k]);
  }
  return out;
}

}  // namespace pare
