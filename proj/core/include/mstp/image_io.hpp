#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mstp/image.hpp"

namespace mstp {

// PNG (8/16-bit gray or RGB; palette and alpha are converted) via libpng.
std::vector<std::uint8_t> encode_png(const ImageBuffer& image);
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Chooses PNG or binary PNM (P5/P6) by extension.
ImageBuffer read_image(const std::filesystem::path& path);
void write_image(const ImageBuffer& image, const std::filesystem::path& path);

/// Loads images from disk, resolving relative paths against a base
/// directory. Decoded images are cached for the lifetime of the source.
class FileImageSource : public ImageSource {
 public:
  explicit FileImageSource(std::filesystem::path base_dir = {}) : base_(std::move(base_dir)) {}
  std::shared_ptr<const ImageBuffer> load(const std::string& path) const override;

 private:
  std::filesystem::path base_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const ImageBuffer>> cache_;
};

}  // namespace mstp
