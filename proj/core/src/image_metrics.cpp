#include "mstp/image_metrics.hpp"

#include <cmath>
#include <limits>

#include "mstp/error.hpp"

namespace mstp {
namespace {

struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)]; }
};

Plane channel(const ImageBuffer& img, int c) {
  Plane p{img.width(), img.height(), {}};
  p.v.resize(static_cast<std::size_t>(p.w) * static_cast<std::size_t>(p.h));
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) p.at(x, y) = img.at(x, y, c);
  return p;
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const double mid = (size - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < size; ++i) {
    const double d = i - mid;
    k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2 * sigma * sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (auto& x : k) x /= sum;
  return k;
}

// Separable 'valid' filtering: output is (w-n+1) x (h-n+1).
Plane filter_valid(const Plane& in, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  Plane tmp{in.w - n + 1, in.h, {}};
  tmp.v.assign(static_cast<std::size_t>(tmp.w) * static_cast<std::size_t>(tmp.h), 0.0);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < tmp.w; ++x) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * in.at(x + i, y);
      tmp.at(x, y) = s;
    }
  Plane out{tmp.w, in.h - n + 1, {}};
  out.v.assign(static_cast<std::size_t>(out.w) * static_cast<std::size_t>(out.h), 0.0);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * tmp.at(x, y + i);
      out.at(x, y) = s;
    }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane p{a.w, a.h, a.v};
  for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] *= b.v[i];
  return p;
}

struct SsimTerms {
  double ssim = 0;  // mean of the full SSIM map
  double cs = 0;    // mean of the contrast-structure map
};

SsimTerms ssim_terms(const Plane& a, const Plane& b, const std::vector<double>& k, double c1, double c2) {
  const auto mu_a = filter_valid(a, k);
  const auto mu_b = filter_valid(b, k);
  const auto aa = filter_valid(product(a, a), k);
  const auto bb = filter_valid(product(b, b), k);
  const auto ab = filter_valid(product(a, b), k);
  double ssim_sum = 0, cs_sum = 0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double va = aa.v[i] - ma * ma;
    const double vb = bb.v[i] - mb * mb;
    const double cov = ab.v[i] - ma * mb;
    const double cs = (2 * cov + c2) / (va + vb + c2);
    const double lum = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    ssim_sum += lum * cs;
    cs_sum += cs;
  }
  const auto n = static_cast<double>(mu_a.v.size());
  return {ssim_sum / n, cs_sum / n};
}

Plane downsample(const Plane& p) {
  Plane out{p.w / 2, p.h / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.w) * static_cast<std::size_t>(out.h));
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      out.at(x, y) = (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) +
                      p.at(2 * x + 1, 2 * y + 1)) / 4.0;
  return out;
}

void check_window(const SsimOptions& o) {
  if (o.window < 1 || o.window % 2 == 0) throw Error(Errc::InvalidArgument, "SSIM window must be odd and positive");
  if (!(o.sigma > 0)) throw Error(Errc::InvalidArgument, "SSIM sigma must be positive");
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "psnr");
  double sse = 0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
    sse += d * d;
  }
  if (sse == 0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(da.size());
  const double max = a.max_value();
  return 10.0 * std::log10(max * max / mse);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& options) {
  require_same_shape(a, b, "ssim");
  check_window(options);
  if (a.width() < options.window || a.height() < options.window) {
    throw Error(Errc::TooSmallForScales, "image is smaller than the SSIM window");
  }
  const double max = a.max_value();
  const double c1 = std::pow(options.k1 * max, 2), c2 = std::pow(options.k2 * max, 2);
  const auto k = gaussian_kernel(options.window, options.sigma);
  double total = 0;
  for (int c = 0; c < a.channels(); ++c) total += ssim_terms(channel(a, c), channel(b, c), k, c1, c2).ssim;
  return total / a.channels();
}

double ms_ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& options) {
  require_same_shape(a, b, "ms_ssim");
  check_window(options);
  const int need = options.window * 16;
  if (a.width() < need || a.height() < need) {
    throw Error(Errc::TooSmallForScales,
                "MS-SSIM needs at least " + std::to_string(need) + " pixels per side for five scales");
  }
  const double max = a.max_value();
  const double c1 = std::pow(options.k1 * max, 2), c2 = std::pow(options.k2 * max, 2);
  const auto k = gaussian_kernel(options.window, options.sigma);
  double total = 0;
  for (int c = 0; c < a.channels(); ++c) {
    auto pa = channel(a, c), pb = channel(b, c);
    double value = 1;
    for (int s = 0; s < 5; ++s) {
      const auto t = ssim_terms(pa, pb, k, c1, c2);
      const double term = s == 4 ? t.ssim : t.cs;
      value *= std::pow(std::max(term, 0.0), kMsSsimWeights[s]);
      if (s < 4) {
        pa = downsample(pa);
        pb = downsample(pb);
      }
    }
    total += value;
  }
  return total / a.channels();
}

}  // namespace mstp
