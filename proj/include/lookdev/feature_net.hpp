#pragma once

/**
 * @file feature_net.hpp
 * @brief Compact convolutional feature extractor with an exact input gradient.
 *
 * Each block is conv3x3 (stride 1, zero "same" padding) -> relu -> 2x2
 * average pool. Block k (1-based) exposes two taps: "blockk" is its post-relu
 * activation at input / 2^(k-1), and "blockk_pool" is that activation after
 * the pool, at input / 2^k. Weights are never stored; they are regenerated
 * from the config seed with He scaling.
 *
 * Convolutions accumulate in a fixed kernel-major order (output channel,
 * input channel, kernel row, kernel column, then pixels), which makes forward
 * and gradient bit-reproducible for a given build.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lookdev/error.hpp"
#include "lookdev/image.hpp"
#include "lookdev/random.hpp"
#include "lookdev/tensor.hpp"

namespace lookdev {

struct NetConfig {
  std::vector<int> block_channels{16, 32, 64};
  std::vector<std::string> tap_names{"block1", "block2", "block3"};  // see resolve_tap
  std::uint64_t seed = 0;

  int pool_count() const noexcept { return static_cast<int>(block_channels.size()); }

  bool operator==(const NetConfig&) const = default;
};

inline std::string block_name(int index) { return "block" + std::to_string(index + 1); }
inline std::string pool_name(int index) { return block_name(index) + "_pool"; }

struct TapRef {
  int block = -1;  // zero-based; -1 when the name is unknown
  bool pooled = false;
};

inline TapRef resolve_tap(const NetConfig& cfg, const std::string& name) {
  for (int i = 0; i < cfg.pool_count(); ++i) {
    if (block_name(i) == name) return {i, false};
    if (pool_name(i) == name) return {i, true};
  }
  return {};
}

/// Zero-based block a tap belongs to, or -1.
inline int block_index(const NetConfig& cfg, const std::string& name) {
  return resolve_tap(cfg, name).block;
}

inline void validate_config(const NetConfig& cfg) {
  if (cfg.block_channels.empty()) {
    throw Error(ErrorCode::invalid_argument, "network needs at least one block");
  }
  for (int c : cfg.block_channels) {
    if (c <= 0) throw Error(ErrorCode::invalid_argument, "block channel counts must be positive");
  }
  std::set<std::string> seen;
  for (const auto& tap : cfg.tap_names) {
    if (block_index(cfg, tap) < 0) {
      throw Error(ErrorCode::invalid_argument, "tap '" + tap + "' names no block");
    }
    if (!seen.insert(tap).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate tap '" + tap + "'");
    }
  }
}

/// Input width and height must both be divisible by 2^(number of pools).
inline void check_input_dims(int width, int height, const NetConfig& cfg) {
  const int step = 1 << cfg.pool_count();
  if (width % step != 0 || height % step != 0) {
    throw Error(ErrorCode::dimension_mismatch,
                "input " + std::to_string(width) + "x" + std::to_string(height) +
                    " must be divisible by " + std::to_string(step) + " for a " +
                    std::to_string(cfg.pool_count()) + "-block network");
  }
}

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<double> kernel;  // out x in x 3 x 3
  std::vector<double> bias;

  const double* taps(int oc, int ic) const noexcept {
    return kernel.data() + (static_cast<std::size_t>(oc) * in_channels + ic) * 9;
  }

  bool operator==(const ConvLayer&) const = default;
};

struct Weights {
  std::vector<ConvLayer> layers;
  bool operator==(const Weights&) const = default;
};

using FeatureMaps = std::map<std::string, Tensor>;

/// He-normal kernels (std = sqrt(2 / (in * 9))) from CounterRng(seed, layer), zero biases.
inline Weights init_weights(const NetConfig& cfg) {
  validate_config(cfg);
  Weights w;
  int in = ImageF::kChannels;
  for (int l = 0; l < cfg.pool_count(); ++l) {
    ConvLayer layer;
    layer.in_channels = in;
    layer.out_channels = cfg.block_channels[static_cast<std::size_t>(l)];
    layer.kernel.resize(static_cast<std::size_t>(layer.out_channels) * in * 9);
    layer.bias.assign(static_cast<std::size_t>(layer.out_channels), 0.0);
    const double scale = std::sqrt(2.0 / (in * 9.0));
    const CounterRng rng(cfg.seed, static_cast<std::uint64_t>(l));
    for (std::size_t i = 0; i < layer.kernel.size(); ++i) layer.kernel[i] = scale * rng.normal(i);
    w.layers.push_back(std::move(layer));
    in = cfg.block_channels[static_cast<std::size_t>(l)];
  }
  return w;
}

namespace detail {

inline Tensor conv3x3_forward(const Tensor& in, const ConvLayer& layer) {
  const int h = in.height, w = in.width;
  Tensor out(layer.out_channels, h, w);
  for (int oc = 0; oc < layer.out_channels; ++oc) {
    double* dst = out.channel(oc);
    std::fill(dst, dst + out.plane(), layer.bias[static_cast<std::size_t>(oc)]);
    for (int ic = 0; ic < layer.in_channels; ++ic) {
      const double* src = in.channel(ic);
      const double* k = layer.taps(oc, ic);
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y_begin = std::max(0, -dy), y_end = std::min(h, h - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const int x_begin = std::max(0, -dx), x_end = std::min(w, w - dx);
          const double wt = k[ky * 3 + kx];
          for (int y = y_begin; y < y_end; ++y) {
            double* drow = dst + static_cast<std::size_t>(y) * w;
            const double* srow = src + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x_begin; x < x_end; ++x) drow[x] += wt * srow[x];
          }
        }
      }
    }
  }
  return out;
}

// Transposed convolution: gradient of conv3x3_forward w.r.t. its input.
inline Tensor conv3x3_input_grad(const Tensor& grad_out, const ConvLayer& layer) {
  const int h = grad_out.height, w = grad_out.width;
  Tensor grad_in(layer.in_channels, h, w);
  for (int oc = 0; oc < layer.out_channels; ++oc) {
    const double* g = grad_out.channel(oc);
    for (int ic = 0; ic < layer.in_channels; ++ic) {
      double* dst = grad_in.channel(ic);
      const double* k = layer.taps(oc, ic);
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y_begin = std::max(0, -dy), y_end = std::min(h, h - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const int x_begin = std::max(0, -dx), x_end = std::min(w, w - dx);
          const double wt = k[ky * 3 + kx];
          for (int y = y_begin; y < y_end; ++y) {
            const double* grow = g + static_cast<std::size_t>(y) * w;
            double* drow = dst + static_cast<std::size_t>(y + dy) * w + dx;
            for (int x = x_begin; x < x_end; ++x) drow[x] += wt * grow[x];
          }
        }
      }
    }
  }
  return grad_in;
}

inline void relu_inplace(Tensor& t) noexcept {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}

inline Tensor avg_pool2(const Tensor& in) {
  Tensor out(in.channels, in.height / 2, in.width / 2);
  for (int c = 0; c < in.channels; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        out.at(c, y, x) = 0.25 * (in.at(c, 2 * y, 2 * x) + in.at(c, 2 * y, 2 * x + 1) +
                                  in.at(c, 2 * y + 1, 2 * x) + in.at(c, 2 * y + 1, 2 * x + 1));
  return out;
}

// Pool backward fused with the relu mask of the pre-pool activation.
inline Tensor avg_pool2_relu_grad(const Tensor& grad_out, const Tensor& relu_out) {
  Tensor g(relu_out.channels, relu_out.height, relu_out.width);
  for (int c = 0; c < g.channels; ++c)
    for (int y = 0; y < g.height; ++y)
      for (int x = 0; x < g.width; ++x)
        g.at(c, y, x) = relu_out.at(c, y, x) > 0.0 ? 0.25 * grad_out.at(c, y / 2, x / 2) : 0.0;
  return g;
}

}  // namespace detail

/// Intermediate activations kept for the reverse pass.
struct ForwardTrace {
  std::vector<Tensor> relu_out;  // per computed block, before pooling
  std::vector<Tensor> pooled;    // per computed block

  const Tensor& tap(const TapRef& ref) const {
    if (ref.block < 0 || ref.block >= static_cast<int>(relu_out.size())) {
      throw Error(ErrorCode::invalid_argument, "trace does not reach the requested tap");
    }
    return ref.pooled ? pooled[static_cast<std::size_t>(ref.block)]
                      : relu_out[static_cast<std::size_t>(ref.block)];
  }
};

/// Runs blocks [0, depth) on img. depth defaults to every block.
inline ForwardTrace forward_trace(const ImageF& img, const Weights& w, const NetConfig& cfg,
                                  int depth = -1) {
  validate_config(cfg);
  check_input_dims(img.width(), img.height(), cfg);
  if (static_cast<int>(w.layers.size()) != cfg.pool_count()) {
    throw Error(ErrorCode::dimension_mismatch, "weights do not match network config");
  }
  if (depth < 0 || depth > cfg.pool_count()) depth = cfg.pool_count();
  ForwardTrace trace;
  Tensor x = to_planar(img);
  for (int b = 0; b < depth; ++b) {
    Tensor a = detail::conv3x3_forward(x, w.layers[static_cast<std::size_t>(b)]);
    detail::relu_inplace(a);
    x = detail::avg_pool2(a);
    trace.relu_out.push_back(std::move(a));
    trace.pooled.push_back(x);
  }
  return trace;
}

inline int deepest_tap(const NetConfig& cfg, const std::vector<std::string>& taps) {
  int depth = 0;
  for (const auto& t : taps) depth = std::max(depth, block_index(cfg, t) + 1);
  return depth;
}

inline FeatureMaps forward(const ImageF& img, const Weights& w, const NetConfig& cfg) {
  const ForwardTrace trace = forward_trace(img, w, cfg, deepest_tap(cfg, cfg.tap_names));
  FeatureMaps maps;
  for (const auto& tap : cfg.tap_names) maps.emplace(tap, trace.tap(resolve_tap(cfg, tap)));
  return maps;
}

/// Vector-Jacobian product of the tap outputs at a recorded trace, summed
/// over every tap present in cotangents. Returns a 3 x H x W tensor.
inline Tensor input_gradient(const ForwardTrace& trace, const Weights& w, const NetConfig& cfg,
                             const FeatureMaps& cotangents) {
  int depth = 0;
  for (const auto& [name, cot] : cotangents) {
    const TapRef ref = resolve_tap(cfg, name);
    if (ref.block < 0) throw Error(ErrorCode::invalid_argument, "cotangent for unknown tap '" + name + "'");
    const Tensor& value = trace.tap(ref);
    if (!cot.same_shape(value)) {
      throw Error(ErrorCode::dimension_mismatch, "cotangent for '" + name + "' is " +
                                                     cot.shape_string() + ", tap is " +
                                                     value.shape_string());
    }
    depth = std::max(depth, ref.block + 1);
  }
  const Tensor& first = trace.relu_out.front();
  if (depth == 0) return Tensor(ImageF::kChannels, first.height, first.width);

  // g holds d/d(pooled output of block b) on entry to iteration b
  const Tensor& deepest = trace.pooled[static_cast<std::size_t>(depth - 1)];
  Tensor g(deepest.channels, deepest.height, deepest.width);
  for (int b = depth - 1; b >= 0; --b) {
    if (auto it = cotangents.find(pool_name(b)); it != cotangents.end()) {
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += it->second.data[i];
    }
    const Tensor& relu = trace.relu_out[static_cast<std::size_t>(b)];
    Tensor pre = detail::avg_pool2_relu_grad(g, relu);
    if (auto it = cotangents.find(block_name(b)); it != cotangents.end()) {
      for (std::size_t i = 0; i < pre.size(); ++i) {
        if (relu.data[i] > 0.0) pre.data[i] += it->second.data[i];
      }
    }
    g = detail::conv3x3_input_grad(pre, w.layers[static_cast<std::size_t>(b)]);
  }
  return g;
}

inline Tensor input_gradient(const ImageF& img, const Weights& w, const NetConfig& cfg,
                             const FeatureMaps& cotangents) {
  std::vector<std::string> names;
  for (const auto& [name, cot] : cotangents) names.push_back(name);
  const ForwardTrace trace = forward_trace(img, w, cfg, std::max(1, deepest_tap(cfg, names)));
  return input_gradient(trace, w, cfg, cotangents);
}

}  // namespace lookdev
