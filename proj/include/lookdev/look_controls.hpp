#pragma once

/**
 * @file look_controls.hpp
 * @brief Creative controls layered over the transfer: unrealness u and the
 *        style transfer ratio 10^u, resolution scaling for previews, parameter
 *        validation, sweeps and contact sheets.
 *
 * The style transfer ratio scales linearly with working width, so a preview
 * at half width uses half the ratio, i.e. u - log10(2).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lookdev/bitmap_font.hpp"
#include "lookdev/diagnostics.hpp"
#include "lookdev/error.hpp"
#include "lookdev/feature_net.hpp"
#include "lookdev/finisher.hpp"
#include "lookdev/image.hpp"

namespace lookdev {

inline double ratio_from_u(double u) { return std::pow(10.0, u); }

inline double scaled_ratio(double full_ratio, double full_width, double work_width) {
  if (!(full_width > 0.0) || !(work_width > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "scaled_ratio: widths must be positive");
  }
  return full_ratio * (work_width / full_width);
}

inline double scaled_u(double u_full, double full_width, double work_width) {
  if (!(full_width > 0.0) || !(work_width > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "scaled_u: widths must be positive");
  }
  return u_full + std::log10(work_width / full_width);
}

inline constexpr int kMinArtifactFreeIterations = 128;
inline constexpr int kDiminishingReturnsIterations = 1024;
inline constexpr int kDefaultMaxWidth = 1024;

struct LookSpec {
  double u = 0.0;
  int iterations = 256;
  int working_width = 512;
  double preview_scale = 1.0;
  FinishSpec finish;
  std::uint64_t seed = 0;

  bool operator==(const LookSpec&) const = default;
};

/// Caps what a look may ask of the renderer. max_width always applies; the
/// byte budget applies only when set, estimated for a frame of
/// working_width x (working_width * height_ratio).
struct MemoryGuard {
  int max_width = kDefaultMaxWidth;
  std::optional<std::uint64_t> max_bytes;
  NetConfig net;
  double height_ratio = 1.0;
};

/// Bytes for one optimization: for every block, the conv/relu activation and
/// the pooled activation, each held three times (value, gradient, workspace);
/// plus content, style and working image. All stored as double.
inline std::uint64_t memory_estimate(int width, int height, const NetConfig& cfg) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::invalid_argument, "memory_estimate: dimensions must be positive");
  }
  check_input_dims(width, height, cfg);
  constexpr std::uint64_t kScalar = sizeof(double);
  std::uint64_t h = static_cast<std::uint64_t>(height);
  std::uint64_t w = static_cast<std::uint64_t>(width);
  std::uint64_t elems = 3 * (3 * h * w);
  for (int c : cfg.block_channels) {
    const std::uint64_t ch = static_cast<std::uint64_t>(c);
    elems += 3 * (ch * h * w + ch * (h / 2) * (w / 2));
    h /= 2;
    w /= 2;
  }
  return elems * kScalar;
}

inline std::vector<Diagnostic> validate(const LookSpec& spec, const MemoryGuard& guard = {}) {
  std::vector<Diagnostic> out;
  if (!std::isfinite(spec.u)) out.push_back({Level::error, "invalid_u", "u must be finite"});
  if (spec.iterations < 0) {
    out.push_back({Level::error, "invalid_iterations", "iterations must be >= 0"});
  } else if (spec.iterations < kMinArtifactFreeIterations) {
    out.push_back({Level::warning, "low_iterations",
                   std::to_string(spec.iterations) + " iterations is below " +
                       std::to_string(kMinArtifactFreeIterations) +
                       "; expect visible artifacts in the content"});
  } else if (spec.iterations > kDiminishingReturnsIterations) {
    out.push_back({Level::warning, "diminishing_returns",
                   std::to_string(spec.iterations) + " iterations is past " +
                       std::to_string(kDiminishingReturnsIterations) +
                       "; further iterations change the look negligibly"});
  }
  if (!(spec.preview_scale > 0.0 && spec.preview_scale <= 1.0)) {
    out.push_back({Level::error, "invalid_preview_scale", "preview_scale must lie in (0,1]"});
  }
  if (spec.working_width <= 0) {
    out.push_back({Level::error, "invalid_width", "working_width must be positive"});
  } else if (spec.working_width > guard.max_width) {
    out.push_back({Level::error, "memory_guard",
                   "working width " + std::to_string(spec.working_width) + "px exceeds the " +
                       std::to_string(guard.max_width) + "px cap; render lower and finish upward"});
  } else if (guard.max_bytes) {
    const int step = 1 << guard.net.pool_count();
    const int w = std::max(step, spec.working_width / step * step);
    const int h = std::max(step, static_cast<int>(std::lround(w * guard.height_ratio / step)) * step);
    const std::uint64_t bytes = memory_estimate(w, h, guard.net);
    if (bytes > *guard.max_bytes) {
      out.push_back({Level::error, "memory_guard",
                     "estimated " + std::to_string(bytes) + " bytes exceeds budget of " +
                         std::to_string(*guard.max_bytes)});
    }
  }
  return out;
}

enum class SweepAxis { u, iterations };

inline std::string_view to_string(SweepAxis a) { return a == SweepAxis::u ? "u" : "iterations"; }

struct SweepSpec {
  SweepAxis axis = SweepAxis::u;
  std::vector<double> values;
  LookSpec base;
};

inline std::vector<LookSpec> make_sweep(const SweepSpec& s) {
  if (s.values.empty()) throw Error(ErrorCode::invalid_argument, "sweep needs at least one value");
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (!std::isfinite(s.values[i])) throw Error(ErrorCode::invalid_argument, "sweep values must be finite");
    if (i > 0 && !(s.values[i] > s.values[i - 1])) {
      throw Error(ErrorCode::invalid_argument, "sweep values must be strictly increasing");
    }
    if (s.axis == SweepAxis::iterations && (s.values[i] < 0 || s.values[i] != std::floor(s.values[i]))) {
      throw Error(ErrorCode::invalid_argument, "iteration sweep values must be non-negative integers");
    }
  }
  std::vector<LookSpec> out;
  for (double v : s.values) {
    LookSpec spec = s.base;
    if (s.axis == SweepAxis::u) {
      spec.u = v;
    } else {
      spec.iterations = static_cast<int>(v);
    }
    out.push_back(spec);
  }
  return out;
}

inline constexpr int kLabelBand = font::kGlyphHeight + 4;

/// Side-by-side strip of equally sized renders, each with a text label in a
/// band underneath.
inline ImageF contact_sheet(const std::vector<ImageF>& images, const std::vector<std::string>& labels) {
  if (images.empty()) throw Error(ErrorCode::invalid_argument, "contact_sheet: no images");
  if (labels.size() != images.size()) {
    throw Error(ErrorCode::invalid_argument, "contact_sheet: labels must parallel images");
  }
  const int cw = images.front().width();
  const int ch = images.front().height();
  for (const auto& img : images) {
    if (img.width() != cw || img.height() != ch) {
      throw Error(ErrorCode::dimension_mismatch, "contact_sheet: images differ in size");
    }
  }
  ImageF sheet(cw * static_cast<int>(images.size()), ch + kLabelBand, 0.0);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const int x0 = static_cast<int>(n) * cw;
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x)
        for (int c = 0; c < ImageF::kChannels; ++c) sheet.at(x0 + x, y, c) = images[n].at(x, y, c);
    int pen = x0 + 2;
    for (char letter : labels[n]) {
      if (pen + font::kGlyphWidth > x0 + cw) break;
      for (int row = 0; row < font::kGlyphHeight; ++row)
        for (int col = 0; col < font::kGlyphWidth; ++col)
          if (font::pixel(letter, col, row))
            for (int c = 0; c < ImageF::kChannels; ++c) sheet.at(pen + col, ch + 2 + row, c) = 1.0;
      pen += font::kAdvance;
    }
  }
  return sheet;
}

}  // namespace lookdev
