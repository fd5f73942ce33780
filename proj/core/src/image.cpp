#include "mstp/image.hpp"

#include <algorithm>
#include <cmath>

#include "mstp/error.hpp"
#include "mstp/random.hpp"

namespace mstp {

ImageBuffer::ImageBuffer(int width, int height, int channels, int bit_depth)
    : ImageBuffer(width, height, channels, bit_depth,
                  std::vector<std::uint16_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                             std::max(height, 0) * std::max(channels, 0))) {}

ImageBuffer::ImageBuffer(int width, int height, int channels, int bit_depth,
                         std::vector<std::uint16_t> data)
    : width_(width), height_(height), channels_(channels), bit_depth_(bit_depth), data_(std::move(data)) {
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  if (channels != 1 && channels != 3) throw Error(Errc::InvalidArgument, "channels must be 1 or 3");
  if (bit_depth < 1 || bit_depth > 16) throw Error(Errc::InvalidArgument, "bit depth must be 1..16");
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(Errc::InvalidArgument, "pixel data length does not match dimensions");
  }
  const auto max = max_value();
  if (std::any_of(data_.begin(), data_.end(), [max](std::uint16_t v) { return v > max; })) {
    throw Error(Errc::InvalidArgument, "pixel value exceeds MAX_I");
  }
}

void ImageBuffer::set(int x, int y, int c, std::uint32_t value) {
  if (value > max_value()) throw Error(Errc::InvalidArgument, "pixel value exceeds MAX_I");
  data_[index(x, y, c)] = static_cast<std::uint16_t>(value);
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(Errc::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                    "x" + std::to_string(a.channels()) + "@" + std::to_string(a.bit_depth()) + " vs " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                    std::to_string(b.channels()) + "@" + std::to_string(b.bit_depth()));
  }
}

ImageBuffer add_uniform_noise(const ImageBuffer& image, double amplitude, std::uint64_t seed) {
  if (!(amplitude >= 0)) throw Error(Errc::InvalidArgument, "noise amplitude must be >= 0");
  ImageBuffer out = image;
  if (amplitude == 0) return out;
  RandomStream rng(seed);
  const double max = image.max_value();
  for (auto& v : out.data()) {
    const double noisy = std::round(v + rng.uniform(-amplitude, amplitude));
    v = static_cast<std::uint16_t>(std::clamp(noisy, 0.0, max));
  }
  return out;
}

void MemoryImageSource::put(const std::string& path, ImageBuffer image) {
  images_[path] = std::make_shared<const ImageBuffer>(std::move(image));
}

std::shared_ptr<const ImageBuffer> MemoryImageSource::load(const std::string& path) const {
  auto it = images_.find(path);
  if (it == images_.end()) throw Error(Errc::IoError, "no in-memory image '" + path + "'");
  return it->second;
}

PlaceholderImageSource::PlaceholderImageSource(std::shared_ptr<const ImageSource> inner, ImageBuffer placeholder)
    : inner_(std::move(inner)), placeholder_(std::make_shared<const ImageBuffer>(std::move(placeholder))) {}

std::shared_ptr<const ImageBuffer> PlaceholderImageSource::load(const std::string& path) const {
  if (path.empty() || !inner_) return placeholder_;
  return inner_->load(path);
}

}  // namespace mstp
