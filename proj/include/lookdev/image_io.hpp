#pragma once

// PNG (8/16-bit) and binary PPM (P6) reading and writing.
//
// Files are always written to "<path>.tmp" first and renamed into place, so a
// failed write never leaves a partial image under the final name.

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <system_error>
#include <vector>

#include "lookdev/error.hpp"
#include "lookdev/image.hpp"

namespace lookdev {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

inline std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::missing_file, "no such image file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, "cannot open image file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct PngReadSource {
  const std::vector<unsigned char>* bytes;
  std::size_t offset;
};

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->offset + count > src->bytes->size()) {
    png_error(png, "unexpected end of data");
  }
  std::copy_n(src->bytes->data() + src->offset, count, out);
  src->offset += count;
}

inline void png_silent_warning(png_structp, png_const_charp) {}

[[noreturn]] inline void png_silent_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }

// Decodes into interleaved RGB samples. Returns false on any libpng error.
// All non-trivial locals live before setjmp so a longjmp skips no destructor.
inline bool decode_png(const std::vector<unsigned char>& bytes, std::vector<std::uint16_t>& samples,
                       png_uint_32& width, png_uint_32& height, int& bit_depth,
                       std::vector<png_bytep>& rows, std::vector<unsigned char>& raw) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_silent_error,
                                           png_silent_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  PngReadSource src{&bytes, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &src, png_read_from_memory);
  png_read_info(png, info);

  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  if (bit_depth < 8) bit_depth = 8;
  png_read_update_info(png, info);

  const png_size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = static_cast<std::size_t>(width) * height * 3;
  samples.resize(count);
  if (bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      samples[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) samples[i] = raw[i];
  }
  return true;
}

inline ImageF load_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::vector<std::uint16_t> samples;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> raw;
  png_uint_32 width = 0, height = 0;
  int depth = 0;
  if (!decode_png(bytes, samples, width, height, depth, rows, raw) || width == 0 || height == 0) {
    throw Error(ErrorCode::corrupt_data, "corrupt PNG data: " + name);
  }
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  ImageF img(static_cast<int>(width), static_cast<int>(height));
  auto dst = img.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = samples[i] / maxval;
  return img;
}

// Netpbm header token, skipping whitespace and '#' comments.
inline bool ppm_token(const std::vector<unsigned char>& b, std::size_t& pos, long& value) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= b.size() || !std::isdigit(b[pos])) return false;
  value = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    value = value * 10 + (b[pos] - '0');
    if (value > 1'000'000'000L) return false;
    ++pos;
  }
  return true;
}

inline ImageF load_ppm(const std::vector<unsigned char>& b, const std::string& name) {
  std::size_t pos = 2;
  long w = 0, h = 0, maxval = 0;
  if (!ppm_token(b, pos, w) || !ppm_token(b, pos, h) || !ppm_token(b, pos, maxval) ||
      pos >= b.size() || !std::isspace(b[pos]) || w <= 0 || h <= 0 || maxval <= 0 ||
      maxval > 65535) {
    throw Error(ErrorCode::corrupt_data, "corrupt PPM header: " + name);
  }
  ++pos;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (b.size() - pos < count * bytes_per) {
    throw Error(ErrorCode::corrupt_data, "truncated PPM data: " + name);
  }
  ImageF img(static_cast<int>(w), static_cast<int>(h));
  auto dst = img.data();
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes_per == 2 ? (b[pos + 2 * i] << 8) | b[pos + 2 * i + 1] : b[pos + i];
    dst[i] = std::min(1.0, v / static_cast<double>(maxval));
  }
  return img;
}

inline std::uint32_t quantize(double v, std::uint32_t maxcode) {
  // round half up
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint32_t>(std::floor(clamped * maxcode + 0.5));
}

inline bool encode_png(std::FILE* fp, const ImageF& img, int depth) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_silent_error,
                                            png_silent_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  const std::size_t bytes_per = depth == 16 ? 2 : 1;
  const std::size_t rowbytes = static_cast<std::size_t>(img.width()) * 3 * bytes_per;
  std::vector<unsigned char> raw(rowbytes * img.height());
  const auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (depth == 16) {
      const std::uint32_t code = quantize(src[i], 65535);
      raw[2 * i] = static_cast<unsigned char>(code >> 8);
      raw[2 * i + 1] = static_cast<unsigned char>(code & 0xff);
    } else {
      raw[i] = static_cast<unsigned char>(quantize(src[i], 255));
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) rows[y] = raw.data() + y * rowbytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), depth, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

inline bool encode_ppm(std::FILE* fp, const ImageF& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<unsigned char> raw(img.size());
  const auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    raw[i] = static_cast<unsigned char>(quantize(src[i], 255));
  }
  return std::fwrite(header.data(), 1, header.size(), fp) == header.size() &&
         std::fwrite(raw.data(), 1, raw.size(), fp) == raw.size();
}

}  // namespace detail

/// Loads PNG or P6 PPM (detected by content, not extension) into [0,1] floats.
/// Grayscale is expanded to RGB and alpha is dropped.
inline ImageF load_image(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = detail::read_all(path);
  static constexpr std::array<unsigned char, 8> kPngSig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= kPngSig.size() && std::equal(kPngSig.begin(), kPngSig.end(), bytes.begin())) {
    return detail::load_png(bytes, path.string());
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return detail::load_ppm(bytes, path.string());
  }
  if (bytes.empty()) throw Error(ErrorCode::corrupt_data, "empty image file: " + path.string());
  throw Error(ErrorCode::unsupported_format, "unsupported image format: " + path.string());
}

/// Writes PNG (depth 8 or 16) or PPM (depth 8), chosen by extension.
/// Codes are round-half-up quantized.
inline void save_image(const ImageF& img, const std::filesystem::path& path, int depth = 8) {
  if (img.empty()) throw Error(ErrorCode::invalid_argument, "save_image: empty image");
  if (depth != 8 && depth != 16) {
    throw Error(ErrorCode::invalid_argument, "save_image: depth must be 8 or 16");
  }
  const std::string ext = detail::lower_extension(path);
  const bool is_png = ext == ".png";
  if (!is_png && ext != ".ppm") {
    throw Error(ErrorCode::unsupported_format, "unsupported output format: " + path.string());
  }
  if (!is_png && depth != 8) {
    throw Error(ErrorCode::unsupported_format, "PPM output is 8-bit only: " + path.string());
  }

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  bool ok = false;
  {
    detail::FilePtr fp(std::fopen(tmp.string().c_str(), "wb"));
    if (!fp) throw Error(ErrorCode::unwritable_path, "cannot write image: " + path.string());
    ok = is_png ? detail::encode_png(fp.get(), img, depth) : detail::encode_ppm(fp.get(), img);
    ok = (std::fflush(fp.get()) == 0) && ok;
  }
  std::error_code ec;
  if (ok) std::filesystem::rename(tmp, path, ec);
  if (!ok || ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::unwritable_path, "failed writing image: " + path.string());
  }
}

}  // namespace lookdev
