#include "mstp/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>
#include <png.h>

#include "mstp/error.hpp"

namespace mstp {
namespace {

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + length > state->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, state->bytes.data() + state->offset, length);
  state->offset += length;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw(png_structp, png_const_charp message) {
  throw Error(Errc::ParseError, std::string("png: ") + message);
}

void png_warn_ignore(png_structp, png_const_charp) {}

std::string lower_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Binary PGM/PPM with maxval up to 65535.
ImageBuffer decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string token;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) token += static_cast<char>(bytes[pos++]);
    return token;
  };
  const std::string magic = next_token();
  if (magic != "P5" && magic != "P6") throw Error(Errc::ParseError, name + ": unsupported PNM type");
  int width = 0, height = 0;
  unsigned maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = static_cast<unsigned>(std::stoul(next_token()));
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, name + ": malformed PNM header");
  }
  if (maxval == 0 || maxval > 65535) throw Error(Errc::ParseError, name + ": bad PNM maxval");
  ++pos;  // single whitespace after maxval
  const int channels = magic == "P6" ? 3 : 1;
  int depth = 1;
  while ((1u << depth) - 1 < maxval) ++depth;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + count * sample_bytes) throw Error(Errc::ParseError, name + ": truncated PNM");
  std::vector<std::uint16_t> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = sample_bytes == 2
                  ? static_cast<std::uint16_t>(bytes[pos + 2 * i] << 8 | bytes[pos + 2 * i + 1])
                  : bytes[pos + i];
  }
  return ImageBuffer(width, height, channels, depth, std::move(data));
}

void write_pnm(const ImageBuffer& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << (image.channels() == 3 ? "P6" : "P5") << '\n'
      << image.width() << ' ' << image.height() << '\n'
      << image.max_value() << '\n';
  const bool wide = image.max_value() > 255;
  for (auto v : image.data()) {
    if (wide) out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xff));
  }
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  if (image.empty()) throw Error(Errc::InvalidArgument, "cannot encode an empty image");
  if (image.bit_depth() != 8 && image.bit_depth() != 16) {
    throw Error(Errc::InvalidArgument, "PNG encoding supports 8 or 16 bit images");
  }
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn_ignore);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, image.width(), image.height(), image.bit_depth(),
                 image.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t row_samples = static_cast<std::size_t>(image.width()) * image.channels();
    const std::size_t sample_bytes = image.bit_depth() == 16 ? 2 : 1;
    std::vector<std::uint8_t> row(row_samples * sample_bytes);
    const auto data = image.data();
    for (int y = 0; y < image.height(); ++y) {
      const auto* src = data.data() + static_cast<std::size_t>(y) * row_samples;
      for (std::size_t i = 0; i < row_samples; ++i) {
        if (sample_bytes == 2) {
          row[2 * i] = static_cast<std::uint8_t>(src[i] >> 8);  // PNG is big-endian
          row[2 * i + 1] = static_cast<std::uint8_t>(src[i] & 0xff);
        } else {
          row[i] = static_cast<std::uint8_t>(src[i]);
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(Errc::ParseError, "not a PNG stream");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn_ignore);
  png_infop info = png_create_info_struct(png);
  PngReadState state{bytes, 0};
  try {
    png_set_read_fn(png, &state, png_read_from_span);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<std::uint8_t> raw(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    std::vector<std::uint16_t> data(count);
    for (int y = 0; y < height; ++y) {
      const auto* src = rows[y];
      for (std::size_t i = 0; i < static_cast<std::size_t>(width) * channels; ++i) {
        data[static_cast<std::size_t>(y) * width * channels + i] =
            depth == 16 ? static_cast<std::uint16_t>(src[2 * i] << 8 | src[2 * i + 1]) : src[i];
      }
    }
    return ImageBuffer(width, height, channels, depth == 16 ? 16 : 8, std::move(data));
  } catch (...) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw Error(Errc::ParseError, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(Errc::ParseError, "invalid base64");
  // EVP_DecodeBlock counts padding bytes as output.
  std::size_t size = static_cast<std::size_t>(n);
  if (!text.empty() && text.back() == '=') --size;
  if (text.size() > 1 && text[text.size() - 2] == '=') --size;
  out.resize(size);
  return out;
}

ImageBuffer read_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const auto ext = lower_extension(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return decode_pnm(bytes, path.string());
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

void write_image(const ImageBuffer& image, const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    write_pnm(image, path);
    return;
  }
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::shared_ptr<const ImageBuffer> FileImageSource::load(const std::string& path) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(path); it != cache_.end()) return it->second;
  }
  std::filesystem::path resolved(path);
  if (resolved.is_relative() && !base_.empty()) resolved = base_ / resolved;
  auto image = std::make_shared<const ImageBuffer>(read_image(resolved));
  std::lock_guard lock(mutex_);
  return cache_.emplace(path, std::move(image)).first->second;
}

}  // namespace mstp
