#pragma once

#include <vector>

#include "mstp/image.hpp"

namespace mstp {

// 10*log10(MAX^2 / MSE) over all samples; +infinity when the images are equal.
// Throws DimensionMismatch.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;  // C1 = (k1 * MAX)^2
  double k2 = 0.03;  // C2 = (k2 * MAX)^2
};

// Mean local SSIM over valid window positions, averaged over channels.
// Throws DimensionMismatch, TooSmallForScales (image smaller than the window).
double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& options = {});

// Five-scale MS-SSIM with 2x2 average downsampling between scales. Negative
// contrast-structure terms are clamped to 0 so the result stays in [0, 1].
// Needs min(width, height) >= window * 16.
double ms_ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& options = {});

inline constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

}  // namespace mstp
