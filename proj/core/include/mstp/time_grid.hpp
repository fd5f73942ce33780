#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

namespace mstp {

/// Discretisation of a procedure of length `total_duration` into incremental
/// steps of `incremental_scale` seconds, scored every `temporal_scale`
/// seconds. Steps are 1-based: k = 1..N.
struct TimeGrid {
  double total_duration = 0;
  double incremental_scale = 0;
  double temporal_scale = 0;
  std::int64_t steps = 0;          // N = ceil(T / tau)
  std::int64_t output_count = 0;   // N-hat = ceil(T / tau-hat)
  std::int64_t ratio = 0;          // r = tau-hat / tau

  bool is_output_point(std::int64_t k) const noexcept { return k >= 1 && k <= steps && k % ratio == 0; }

  // Wall-clock offset of step k in seconds.
  double time_of(std::int64_t k) const noexcept { return static_cast<double>(k) * incremental_scale; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

// Throws NonPositiveDuration or NonDivisorScale.
TimeGrid make_time_grid(double total_duration, double incremental_scale, double temporal_scale);

// Ascending k in 1..N with k mod r == 0.
std::vector<std::int64_t> output_points(const TimeGrid& grid);

void to_json(nlohmann::json& j, const TimeGrid& grid);
void from_json(const nlohmann::json& j, TimeGrid& grid);

}  // namespace mstp
