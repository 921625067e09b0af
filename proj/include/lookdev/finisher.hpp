#pragma once

/**
 * @file finisher.hpp
 * @brief Delivery finishing: upscale past the compute resolution, blur away
 *        the upscaling and transfer noise, and dissolve against the plate.
 */

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lookdev/error.hpp"
#include "lookdev/image.hpp"

namespace lookdev {

/// Linear ramp in over [in_start, in_end], hold, ramp out over [out_start, out_end].
struct DissolveCurve {
  int in_start = 0;
  int in_end = 0;
  int out_start = 0;
  int out_end = 0;

  bool valid() const noexcept {
    return in_start <= in_end && in_end <= out_start && out_start <= out_end;
  }
  bool operator==(const DissolveCurve&) const = default;
};

struct FinishSpec {
  int delivery_width = 0;                // 0 = keep the source width
  std::optional<double> denoise_sigma;   // unset = 0.5 * upscale factor
  std::optional<DissolveCurve> dissolve; // unset = fully stylized throughout

  bool operator==(const FinishSpec&) const = default;
};

inline double dissolve_weight(int frame, const DissolveCurve& c) {
  if (!c.valid()) throw Error(ErrorCode::invalid_argument, "dissolve curve out of order");
  if (frame < c.in_start || frame > c.out_end) return 0.0;
  if (frame < c.in_end) {
    return static_cast<double>(frame - c.in_start) / static_cast<double>(c.in_end - c.in_start);
  }
  if (frame <= c.out_start) return 1.0;
  return static_cast<double>(c.out_end - frame) / static_cast<double>(c.out_end - c.out_start);
}

inline double dissolve_weight(int frame, const FinishSpec& spec) {
  return spec.dissolve ? dissolve_weight(frame, *spec.dissolve) : 1.0;
}

inline int delivery_width_for(const ImageF& src, const FinishSpec& spec) {
  return spec.delivery_width > 0 ? spec.delivery_width : src.width();
}

/// Height for a delivery width: aspect preserved, rounded to the nearest even
/// number. Unchanged when the width is unchanged.
inline int delivery_height(int src_w, int src_h, int dst_w) {
  if (dst_w == src_w) return src_h;
  const double h = static_cast<double>(src_h) * dst_w / src_w;
  return std::max(2, 2 * static_cast<int>(std::lround(h / 2.0)));
}

inline double resolved_denoise_sigma(const ImageF& src, const FinishSpec& spec) {
  if (spec.denoise_sigma) return *spec.denoise_sigma;
  return 0.5 * static_cast<double>(delivery_width_for(src, spec)) / src.width();
}

/// Plain bilinear upscale to the delivery size, without denoising.
inline ImageF upscale_for_delivery(const ImageF& stylized, const FinishSpec& spec) {
  const int w = delivery_width_for(stylized, spec);
  if (w < stylized.width()) {
    throw Error(ErrorCode::invalid_argument, "delivery width " + std::to_string(w) +
                                                 " is smaller than source width " +
                                                 std::to_string(stylized.width()));
  }
  if (w == stylized.width()) return stylized;
  return resize(stylized, w, delivery_height(stylized.width(), stylized.height(), w));
}

inline ImageF finish_frame(const ImageF& stylized, const FinishSpec& spec) {
  const double sigma = resolved_denoise_sigma(stylized, spec);
  if (!(sigma >= 0.0)) throw Error(ErrorCode::invalid_argument, "denoise sigma must be >= 0");
  return gaussian_blur(upscale_for_delivery(stylized, spec), sigma);
}

/// Frame i of the result blends original[i] toward finish_frame(stylized[i])
/// by dissolve_weight(first_frame + i).
inline std::vector<ImageF> finish_sequence(const std::vector<ImageF>& stylized,
                                           const std::vector<ImageF>& originals,
                                           const FinishSpec& spec, int first_frame = 0) {
  if (stylized.size() != originals.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "finish_sequence: " + std::to_string(stylized.size()) + " stylized frames vs " +
                    std::to_string(originals.size()) + " originals");
  }
  std::vector<ImageF> out;
  out.reserve(stylized.size());
  for (std::size_t i = 0; i < stylized.size(); ++i) {
    const ImageF finished = finish_frame(stylized[i], spec);
    const double t = dissolve_weight(first_frame + static_cast<int>(i), spec);
    out.push_back(cross_dissolve(originals[i], finished, t));
  }
  return out;
}

}  // namespace lookdev
