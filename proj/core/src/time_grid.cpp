#include "mstp/time_grid.hpp"

#include <algorithm>
#include <cmath>

#include "mstp/error.hpp"

namespace mstp {
namespace {

// Relative slack for ratios of decimal durations such as 0.3 / 0.1.
constexpr double kRatioTolerance = 1e-9;

std::int64_t ceil_ratio(double num, double den) {
  const double q = num / den;
  const double nearest = std::round(q);
  if (std::abs(q - nearest) <= kRatioTolerance * std::max(1.0, nearest)) {
    return static_cast<std::int64_t>(nearest);
  }
  return static_cast<std::int64_t>(std::ceil(q));
}

}  // namespace

TimeGrid make_time_grid(double total_duration, double incremental_scale, double temporal_scale) {
  if (!(total_duration > 0) || !(incremental_scale > 0) || !(temporal_scale > 0) ||
      !std::isfinite(total_duration) || !std::isfinite(incremental_scale) ||
      !std::isfinite(temporal_scale)) {
    throw Error(Errc::NonPositiveDuration, "durations must be positive and finite");
  }
  const double q = temporal_scale / incremental_scale;
  const double r = std::round(q);
  if (r < 1 || std::abs(q - r) > kRatioTolerance * r) {
    throw Error(Errc::NonDivisorScale, "incremental scale " + std::to_string(incremental_scale) +
                                           " does not divide temporal scale " +
                                           std::to_string(temporal_scale));
  }
  TimeGrid grid;
  grid.total_duration = total_duration;
  grid.incremental_scale = incremental_scale;
  grid.temporal_scale = temporal_scale;
  grid.ratio = static_cast<std::int64_t>(r);
  grid.steps = ceil_ratio(total_duration, incremental_scale);
  grid.output_count = ceil_ratio(total_duration, temporal_scale);
  return grid;
}

std::vector<std::int64_t> output_points(const TimeGrid& grid) {
  std::vector<std::int64_t> points;
  if (grid.ratio <= 0) return points;
  for (std::int64_t k = grid.ratio; k <= grid.steps; k += grid.ratio) points.push_back(k);
  return points;
}

void to_json(nlohmann::json& j, const TimeGrid& grid) {
  j = {{"total_duration", grid.total_duration},
       {"incremental_scale", grid.incremental_scale},
       {"temporal_scale", grid.temporal_scale}};
}

void from_json(const nlohmann::json& j, TimeGrid& grid) {
  grid = make_time_grid(j.at("total_duration").get<double>(), j.at("incremental_scale").get<double>(),
                        j.at("temporal_scale").get<double>());
}

}  // namespace mstp
