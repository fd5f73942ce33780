#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mstp/schema.hpp"

namespace mstp {

// All values in percent.
struct ClassMetrics {
  std::string label;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double jaccard = 0;
  std::size_t truth_count = 0;
  std::size_t predicted_count = 0;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct StateMetricsReport {
  double accuracy = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  double macro_jaccard = 0;
  std::size_t frame_count = 0;
  std::vector<ClassMetrics> classes;  // sorted by label; truth ∪ predicted

  friend bool operator==(const StateMetricsReport&, const StateMetricsReport&) = default;
};

// Frame accuracy plus per-class and macro PR/RE/F1/JA. A class never
// predicted has PR = 0; F1 = 0 when PR + RE = 0. Throws LengthMismatch,
// EmptyInput.
StateMetricsReport state_metrics(std::span<const std::string> predicted, std::span<const std::string> truth);

// Each full tuple is one class, labelled by joining with '|'.
StateMetricsReport joint_state_metrics(std::span<const StateVector> predicted, std::span<const StateVector> truth);

// Metrics on a single 1-based level of the state vectors.
StateMetricsReport level_state_metrics(std::span<const StateVector> predicted, std::span<const StateVector> truth,
                                       std::size_t level);

std::string joint_label(const StateVector& state);

void to_json(nlohmann::json& j, const ClassMetrics& m);
void from_json(const nlohmann::json& j, ClassMetrics& m);
void to_json(nlohmann::json& j, const StateMetricsReport& r);
void from_json(const nlohmann::json& j, StateMetricsReport& r);

// Rows of "metric\tclass\tvalue"; macro rows use class "macro" and the
// accuracy row uses "all". `scope` is prefixed to the metric name when set.
std::string metrics_table(const StateMetricsReport& report, const std::string& scope = {});

}  // namespace mstp
