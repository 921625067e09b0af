#pragma once

// Procedural content/style pair used by the optimization and acceptance
// tests. Everything derives from kFixtureSeed through CounterRng, so the
// images are identical on every run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "lookdev/image.hpp"
#include "lookdev/random.hpp"

namespace lookdev::testing {

inline constexpr std::uint64_t kFixtureSeed = 2017;

/// Uniform noise image, handy for gradient checks.
inline ImageF random_image(int w, int h, std::uint64_t seed) {
  ImageF img(w, h);
  const CounterRng rng(seed, 1);
  auto d = img.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = rng.uniform(i);
  return img;
}

/// A "photograph": sky gradient over water, a bright disc and a dark figure.
inline ImageF fixture_content(int size = 64) {
  ImageF img(size, size);
  const double s = size;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double fx = x / s, fy = y / s;
      double r, g, b;
      if (fy < 0.55) {
        r = 0.55 + 0.35 * fy;
        g = 0.65 + 0.2 * fy;
        b = 0.9 - 0.2 * fy;
      } else {
        r = 0.1 + 0.1 * fx;
        g = 0.25 + 0.15 * (fy - 0.55);
        b = 0.45 + 0.1 * std::sin(12.0 * fx);
      }
      const double dx = fx - 0.7, dy = fy - 0.3;
      if (dx * dx + dy * dy < 0.012) r = g = b = 0.95;
      if (std::abs(fx - 0.35) < 0.06 && fy > 0.35 && fy < 0.8) {
        r = 0.15;
        g = 0.1;
        b = 0.08;
      }
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

/// A "painting": overlapping oriented brush strokes from a warm/cool palette
/// with high-frequency spatter.
inline ImageF fixture_style(int size = 64) {
  static constexpr double kPalette[5][3] = {
      {0.85, 0.55, 0.2}, {0.2, 0.35, 0.7}, {0.9, 0.85, 0.6}, {0.3, 0.6, 0.45}, {0.6, 0.2, 0.3}};
  const CounterRng rng(kFixtureSeed, 2);
  ImageF img(size, size, 0.5);
  std::uint64_t k = 0;
  for (int stroke = 0; stroke < 60; ++stroke) {
    const double cx = rng.uniform(k++) * size, cy = rng.uniform(k++) * size;
    const double angle = rng.uniform(k++) * std::numbers::pi;
    const double len = 4.0 + rng.uniform(k++) * 10.0, width = 1.0 + rng.uniform(k++) * 2.0;
    const auto& col = kPalette[static_cast<int>(rng.uniform(k++) * 5) % 5];
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double along = (x - cx) * ca + (y - cy) * sa;
        const double across = -(x - cx) * sa + (y - cy) * ca;
        if (std::abs(along) < len && std::abs(across) < width) {
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
        }
      }
    }
  }
  const CounterRng spatter(kFixtureSeed, 3);
  auto d = img.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = std::clamp(d[i] + 0.15 * (spatter.uniform(i) - 0.5), 0.0, 1.0);
  }
  return img;
}

}  // namespace lookdev::testing
