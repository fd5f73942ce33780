#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mstp {

/// Row-major interleaved raster, 1 or 3 channels, 1..16 bits per sample.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, int bit_depth = 8);
  ImageBuffer(int width, int height, int channels, int bit_depth, std::vector<std::uint16_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  int bit_depth() const noexcept { return bit_depth_; }
  std::uint32_t max_value() const noexcept { return (1u << bit_depth_) - 1u; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const std::uint16_t> data() const noexcept { return data_; }
  std::span<std::uint16_t> data() noexcept { return data_; }

  std::uint16_t at(int x, int y, int c) const { return data_[index(x, y, c)]; }
  void set(int x, int y, int c, std::uint32_t value);

  bool same_shape(const ImageBuffer& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_ &&
           bit_depth_ == other.bit_depth_;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  int bit_depth_ = 8;
  std::vector<std::uint16_t> data_;
};

// Throws DimensionMismatch unless shapes agree.
void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what);

// Adds seeded uniform noise in [-amplitude, +amplitude], rounded and clamped
// to [0, MAX_I].
ImageBuffer add_uniform_noise(const ImageBuffer& image, double amplitude, std::uint64_t seed);

/// Resolves image paths to buffers. Implementations must be thread-safe.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual std::shared_ptr<const ImageBuffer> load(const std::string& path) const = 0;
};

/// In-memory store keyed by arbitrary path strings (tests, synthetic data).
class MemoryImageSource : public ImageSource {
 public:
  void put(const std::string& path, ImageBuffer image);
  std::shared_ptr<const ImageBuffer> load(const std::string& path) const override;
  std::size_t size() const noexcept { return images_.size(); }

 private:
  std::unordered_map<std::string, std::shared_ptr<const ImageBuffer>> images_;
};

/// Serves `placeholder` for frames without an image path and defers to
/// `inner` (if any) for the rest. Lets image-free synthetic annotations run
/// through the loop.
class PlaceholderImageSource : public ImageSource {
 public:
  PlaceholderImageSource(std::shared_ptr<const ImageSource> inner, ImageBuffer placeholder);
  std::shared_ptr<const ImageBuffer> load(const std::string& path) const override;

 private:
  std::shared_ptr<const ImageSource> inner_;
  std::shared_ptr<const ImageBuffer> placeholder_;
};

}  // namespace mstp
