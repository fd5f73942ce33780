#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mstp {

/// n feature vectors of dimension d, row-major.
struct FeatureSet {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> values;
  std::string label;

  FeatureSet() = default;
  FeatureSet(std::size_t rows, std::size_t dims, std::vector<double> data, std::string name = {});

  std::span<const double> row(std::size_t i) const { return {values.data() + i * d, d}; }
};

// Text format: first line is a JSON header {"n":..,"d":..,"label":..}; then
// n lines of d whitespace-separated numbers. With "format":"f64le" in the
// header the matrix follows as raw little-endian doubles instead.
FeatureSet read_feature_set(const std::filesystem::path& path);
void write_feature_set(const FeatureSet& features, const std::filesystem::path& path, bool binary = false);

// Frechet distance between Gaussian fits (unbiased covariances). Small
// negative eigenvalues of the square-root product are clamped to zero, with a
// warning below -1e-8. Throws DimensionMismatch, EmptyInput (n < 2).
double fid(const FeatureSet& real, const FeatureSet& generated);

// Unbiased MMD^2 with kernel (x.y / d + 1)^3.
double kid(const FeatureSet& real, const FeatureSet& generated);

struct KidEstimate {
  double mean = 0;
  double standard_error = 0;
};

// KID averaged over random subsets of `subset_size` rows from each side.
KidEstimate kid_subsets(const FeatureSet& real, const FeatureSet& generated, std::size_t subsets,
                        std::size_t subset_size, std::uint64_t seed);

/// Per-layer activations of one image, channel-major: value(c, h, w) =
/// values[(c * H + h) * W + w].
struct ActivationLayer {
  std::string name;
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<double> values;
};

using Activations = std::vector<ActivationLayer>;

// One block per layer: a JSON header line {"layer","C","H","W"} followed by
// C*H*W numbers.
Activations read_activations(const std::filesystem::path& path);
void write_activations(const Activations& acts, const std::filesystem::path& path);

// Sum over layers of weight_l * spatial mean of the squared distance between
// unit-normalised channel vectors. Empty weights means 1 per layer. Throws
// ShapeMismatch.
double lpips(const Activations& a, const Activations& b, std::span<const double> weights = {});

// max(100 * cos(image, text), 0). Throws ZeroVector, DimensionMismatch.
double clipscore(std::span<const double> image_embedding, std::span<const double> text_embedding);

// |relevant ∩ top-R| / min(R, |relevant|). Throws EmptyRanking,
// InvalidArgument for R < 1.
double r_precision(std::span<const std::string> ranked, const std::set<std::string>& relevant, std::size_t r);

}  // namespace mstp
