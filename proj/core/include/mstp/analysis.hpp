#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mstp {

struct Marginal {
  std::string name;
  double accuracy = 0;  // percent
};

// 100 * prod(m_i / 100). Throws InvalidArgument on an empty list or values
// outside [0, 100].
double product_bound(std::span<const double> accuracies);
double product_bound(std::span<const Marginal> marginals);

// mc - pi, in percentage points.
double mc_gap(double mc_accuracy, double pi);

// Rounds to `decimals` places, half away from zero.
double round_to(double value, int decimals);

/// FID = intercept - slope * accuracy, fitted by least squares.
struct RegressionFit {
  double intercept = 0;
  double slope = 0;
  double r = 0;
  std::size_t n = 0;
  double t_statistic = 0;  // two-sided test of r; infinite when |r| == 1
  double max_residual = 0;
};

// Throws DegenerateInput for fewer than two points or constant accuracy.
RegressionFit fit_accuracy_fid(std::span<const std::pair<double, double>> points);

// t = r * sqrt((n - 2) / (1 - r^2)).
double correlation_t_statistic(double r, std::size_t n);

struct ProductRow {
  std::string label;
  std::vector<double> marginals;
  std::optional<double> mc_accuracy;
};

// One row per non-blank line: optional "label:" prefix, comma or whitespace
// separated marginals, optional ";mc" suffix. '#' starts a comment.
std::vector<ProductRow> read_product_rows(const std::filesystem::path& path);

// Two numeric columns (accuracy, fid); a non-numeric first line is a header.
std::vector<std::pair<double, double>> read_accuracy_fid(const std::filesystem::path& path);

// CSV series for plotting: accuracy, fid, fitted.
void write_fit_plot(std::ostream& out, std::span<const std::pair<double, double>> points, const RegressionFit& fit);

}  // namespace mstp
