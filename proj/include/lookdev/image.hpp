#pragma once

/**
 * @file image.hpp
 * @brief RGB float images and the pixel operations used by look development:
 *        resampling, cropping, block compositing, dissolves, blur and the
 *        style-image quality report.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lookdev/error.hpp"

namespace lookdev {

/// Linear-intensity RGB image, row-major, channel-interleaved.
class ImageF {
 public:
  static constexpr int kChannels = 3;

  ImageF() = default;
  ImageF(int width, int height, double fill = 0.0) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::invalid_argument,
                  "image dimensions must be positive, got " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  constexpr int channels() const noexcept { return kChannels; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }
  double& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }

  bool same_shape(const ImageF& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  /// True when every value is finite and inside [0,1].
  bool is_valid() const noexcept {
    return !data_.empty() && std::all_of(data_.begin(), data_.end(), [](double v) {
      return std::isfinite(v) && v >= 0.0 && v <= 1.0;
    });
  }

  void clamp01() noexcept {
    for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
  }

  bool operator==(const ImageF&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const Rect&) const = default;
};

inline bool rect_fits(const Rect& r, const ImageF& img) noexcept {
  return r.x >= 0 && r.y >= 0 && r.w > 0 && r.h > 0 &&
         static_cast<long long>(r.x) + r.w <= img.width() &&
         static_cast<long long>(r.y) + r.h <= img.height();
}

namespace detail {

inline std::string rect_string(const Rect& r) {
  return "(" + std::to_string(r.x) + "," + std::to_string(r.y) + " " + std::to_string(r.w) +
         "x" + std::to_string(r.h) + ")";
}

inline void require_same_shape(const ImageF& a, const ImageF& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
  }
}

// Source coordinate for a destination sample, pixel-center aligned and
// clamped to the valid range.
inline void bilinear_tap(int dst, int src_size, int dst_size, int& i0, int& i1, double& frac) {
  const double scale = static_cast<double>(src_size) / dst_size;
  double s = (dst + 0.5) * scale - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(src_size - 1));
  i0 = static_cast<int>(std::floor(s));
  i1 = std::min(i0 + 1, src_size - 1);
  frac = s - i0;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace detail

/// Bilinear resample with edge clamping. Constant images stay exactly constant.
inline ImageF resize(const ImageF& img, int new_w, int new_h) {
  if (new_w <= 0 || new_h <= 0) {
    throw Error(ErrorCode::invalid_argument, "resize: target dimensions must be positive");
  }
  ImageF out(new_w, new_h);
  std::vector<int> x0(new_w), x1(new_w);
  std::vector<double> fx(new_w);
  for (int x = 0; x < new_w; ++x) detail::bilinear_tap(x, img.width(), new_w, x0[x], x1[x], fx[x]);

  for (int y = 0; y < new_h; ++y) {
    int y0 = 0, y1 = 0;
    double fy = 0.0;
    detail::bilinear_tap(y, img.height(), new_h, y0, y1, fy);
    for (int x = 0; x < new_w; ++x) {
      for (int c = 0; c < ImageF::kChannels; ++c) {
        // a + f*(b-a) keeps equal neighbours exact
        const double p00 = img.at(x0[x], y0, c), p10 = img.at(x1[x], y0, c);
        const double p01 = img.at(x0[x], y1, c), p11 = img.at(x1[x], y1, c);
        const double top = p00 + fx[x] * (p10 - p00);
        const double bottom = p01 + fx[x] * (p11 - p01);
        out.at(x, y, c) = std::clamp(top + fy * (bottom - top), 0.0, 1.0);
      }
    }
  }
  return out;
}

inline ImageF crop(const ImageF& img, const Rect& r) {
  if (!rect_fits(r, img)) {
    throw Error(ErrorCode::out_of_bounds, "crop: rect " + detail::rect_string(r) +
                                              " outside " + std::to_string(img.width()) + "x" +
                                              std::to_string(img.height()) + " image");
  }
  ImageF out(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    const auto src = img.data().subspan(img.index(r.x, r.y + y, 0),
                                        static_cast<std::size_t>(r.w) * ImageF::kChannels);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(out.index(0, y, 0)));
  }
  return out;
}

/// Paste a block of color/texture into base. Pixels outside the rect are untouched.
inline ImageF composite_block(const ImageF& base, const ImageF& patch, const Rect& at) {
  if (at.w != patch.width() || at.h != patch.height()) {
    throw Error(ErrorCode::dimension_mismatch,
                "composite_block: patch is " + std::to_string(patch.width()) + "x" +
                    std::to_string(patch.height()) + " but rect is " + detail::rect_string(at));
  }
  if (!rect_fits(at, base)) {
    throw Error(ErrorCode::out_of_bounds,
                "composite_block: rect " + detail::rect_string(at) + " outside base image");
  }
  ImageF out = base;
  for (int y = 0; y < at.h; ++y) {
    const auto src = patch.data().subspan(patch.index(0, y, 0),
                                          static_cast<std::size_t>(at.w) * ImageF::kChannels);
    std::copy(src.begin(), src.end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(out.index(at.x, at.y + y, 0)));
  }
  return out;
}

/// Per-pixel (1-t)*a + t*b. Endpoints reproduce a and b exactly.
inline ImageF cross_dissolve(const ImageF& a, const ImageF& b, double t) {
  detail::require_same_shape(a, b, "cross_dissolve");
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "cross_dissolve: t must lie in [0,1]");
  }
  ImageF out(a.width(), a.height());
  const auto da = a.data();
  const auto db = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double v = (1.0 - t) * da[i] + t * db[i];
    dst[i] = std::clamp(v, std::min(da[i], db[i]), std::max(da[i], db[i]));
  }
  return out;
}

/// Separable Gaussian, radius ceil(3*sigma), edge clamped; sigma == 0 is identity.
inline ImageF gaussian_blur(const ImageF& img, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::invalid_argument, "gaussian_blur: sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return img;
  const std::vector<double> k = detail::gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width(), h = img.height();

  // Accumulate weighted differences from the centre sample so constant
  // regions come out bit-exact.
  ImageF tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ImageF::kChannels; ++c) {
        const double centre = img.at(x, y, c);
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sx = std::clamp(x + i, 0, w - 1);
          acc += k[static_cast<std::size_t>(i + radius)] * (img.at(sx, y, c) - centre);
        }
        tmp.at(x, y, c) = centre + acc;
      }
    }
  }
  ImageF out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ImageF::kChannels; ++c) {
        const double centre = tmp.at(x, y, c);
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sy = std::clamp(y + i, 0, h - 1);
          acc += k[static_cast<std::size_t>(i + radius)] * (tmp.at(x, sy, c) - centre);
        }
        out.at(x, y, c) = std::clamp(centre + acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

/// Mean squared residual between img and its blur: energy above the blur's passband.
inline double hf_energy(const ImageF& img, double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "hf_energy: sigma must be > 0");
  }
  const ImageF low = gaussian_blur(img, sigma);
  const auto a = img.data();
  const auto b = low.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

struct StyleImageReport {
  double clipped_highlight_fraction = 0.0;
  double clipped_shadow_fraction = 0.0;
  double hf_energy = 0.0;
};

inline constexpr double kHighlightClip = 0.99;
inline constexpr double kShadowClip = 0.01;

/// Quality diagnostics for a style photograph: blown highlights, crushed
/// shadows and how much fine texture survived.
inline StyleImageReport style_image_report(const ImageF& img) {
  std::size_t highlights = 0, shadows = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      bool hi = true, lo = true;
      for (int c = 0; c < ImageF::kChannels; ++c) {
        const double v = img.at(x, y, c);
        hi = hi && v >= kHighlightClip;
        lo = lo && v <= kShadowClip;
      }
      highlights += hi ? 1 : 0;
      shadows += lo ? 1 : 0;
    }
  }
  const double n = static_cast<double>(img.width()) * img.height();
  return {static_cast<double>(highlights) / n, static_cast<double>(shadows) / n,
          hf_energy(img, 2.0)};
}

}  // namespace lookdev
