#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lookdev/error.hpp"
#include "lookdev/image.hpp"

namespace lookdev {

/// Planar activation tensor, channels x height x width.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const noexcept { return data.size(); }

  double* channel(int c) noexcept { return data.data() + c * plane(); }
  const double* channel(int c) const noexcept { return data.data() + c * plane(); }

  double& at(int c, int y, int x) noexcept { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  double at(int c, int y, int x) const noexcept {
    return data[c * plane() + static_cast<std::size_t>(y) * width + x];
  }

  bool same_shape(const Tensor& o) const noexcept {
    return channels == o.channels && height == o.height && width == o.width;
  }

  std::string shape_string() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
  }

  bool operator==(const Tensor&) const = default;
};

inline Tensor to_planar(const ImageF& img) {
  Tensor t(ImageF::kChannels, img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < ImageF::kChannels; ++c) t.at(c, y, x) = img.at(x, y, c);
  return t;
}

/// Interleaves a 3-channel planar tensor back into image layout (no clamping).
inline std::vector<double> to_interleaved(const Tensor& t) {
  if (t.channels != ImageF::kChannels) {
    throw Error(ErrorCode::dimension_mismatch, "to_interleaved: expected 3 channels, got " +
                                                   std::to_string(t.channels));
  }
  std::vector<double> out(t.size());
  std::size_t i = 0;
  for (int y = 0; y < t.height; ++y)
    for (int x = 0; x < t.width; ++x)
      for (int c = 0; c < t.channels; ++c) out[i++] = t.at(c, y, x);
  return out;
}

}  // namespace lookdev
