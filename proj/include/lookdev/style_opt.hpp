#pragma once

/**
 * @file style_opt.hpp
 * @brief Gram-matrix style loss, feature content loss and the Adam pixel
 *        optimization that redraws a content image in a style.
 *
 * Normalization used throughout:
 *   gram(F)      = F F^T / (H W)
 *   content_loss = mean over taps of mean((F - F_target)^2)
 *   style_loss   = sum over taps of w_tap * mean((gram(F) - G_target)^2)
 *   total        = content_loss + 10^u * style_loss
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lookdev/error.hpp"
#include "lookdev/feature_net.hpp"
#include "lookdev/image.hpp"
#include "lookdev/look_controls.hpp"
#include "lookdev/random.hpp"
#include "lookdev/tensor.hpp"

namespace lookdev {

/// Square C x C matrix, row-major.
struct Matrix {
  int n = 0;
  std::vector<double> v;

  Matrix() = default;
  explicit Matrix(int size) : n(size), v(static_cast<std::size_t>(size) * size, 0.0) {}

  double& operator()(int i, int j) noexcept { return v[static_cast<std::size_t>(i) * n + j]; }
  double operator()(int i, int j) const noexcept { return v[static_cast<std::size_t>(i) * n + j]; }

  bool operator==(const Matrix&) const = default;
};

/// G = F F^T / (H W). Each entry sums pixels in ascending order; the lower
/// triangle is mirrored so G is exactly symmetric.
inline Matrix gram(const Tensor& f) {
  const std::size_t m = f.plane();
  if (m == 0) throw Error(ErrorCode::invalid_argument, "gram: activation has no pixels");
  Matrix g(f.channels);
  for (int i = 0; i < f.channels; ++i) {
    const double* fi = f.channel(i);
    for (int j = i; j < f.channels; ++j) {
      const double* fj = f.channel(j);
      double s = 0.0;
      for (std::size_t p = 0; p < m; ++p) s += fi[p] * fj[p];
      g(i, j) = s / static_cast<double>(m);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

using ContentTargets = std::map<std::string, Tensor>;
using StyleTargets = std::map<std::string, Matrix>;

enum class InitMode { content_copy, seeded_noise };

inline std::string_view to_string(InitMode m) {
  return m == InitMode::content_copy ? "content-copy" : "seeded-noise";
}

struct TransferParams {
  double u = 0.0;
  int iterations = 256;
  std::vector<std::string> content_taps{"block1"};
  std::vector<std::string> style_taps{"block1", "block2", "block3"};
  std::vector<double> style_tap_weights{};  // empty = equal weights
  double learning_rate = 0.02;
  std::uint64_t seed = 0;
  InitMode init_mode = InitMode::content_copy;
  int snapshot_every = 0;  // 0 = no snapshots

  bool operator==(const TransferParams&) const = default;
};

/// Style weights normalized to sum 1 (equal weights when none are given).
inline std::vector<double> normalized_style_weights(const TransferParams& p) {
  if (p.style_tap_weights.empty()) {
    return std::vector<double>(p.style_taps.size(), p.style_taps.empty() ? 0.0 : 1.0 / p.style_taps.size());
  }
  if (p.style_tap_weights.size() != p.style_taps.size()) {
    throw Error(ErrorCode::invalid_argument, "style_tap_weights must parallel style_taps");
  }
  double sum = 0.0;
  for (double w : p.style_tap_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::invalid_argument, "style tap weights must be finite and >= 0");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::invalid_argument, "style tap weights sum to zero");
  std::vector<double> out;
  for (double w : p.style_tap_weights) out.push_back(w / sum);
  return out;
}

inline void validate_params(const TransferParams& p, const NetConfig& cfg) {
  if (p.iterations < 0) throw Error(ErrorCode::invalid_argument, "iterations must be >= 0");
  if (!(p.learning_rate > 0.0) || !std::isfinite(p.learning_rate)) {
    throw Error(ErrorCode::invalid_argument, "learning_rate must be > 0");
  }
  if (!std::isfinite(p.u)) throw Error(ErrorCode::invalid_argument, "u must be finite");
  if (p.snapshot_every < 0) throw Error(ErrorCode::invalid_argument, "snapshot_every must be >= 0");
  for (const auto* list : {&p.content_taps, &p.style_taps}) {
    for (const auto& tap : *list) {
      if (block_index(cfg, tap) < 0) {
        throw Error(ErrorCode::invalid_argument, "tap '" + tap + "' names no block");
      }
    }
  }
  normalized_style_weights(p);
}

namespace detail {

inline const Tensor& find_tap(const FeatureMaps& f, const std::string& tap) {
  auto it = f.find(tap);
  if (it == f.end()) throw Error(ErrorCode::invalid_argument, "missing activation for tap '" + tap + "'");
  return it->second;
}

template <typename Map>
const typename Map::mapped_type& find_target(const Map& m, const std::string& tap) {
  auto it = m.find(tap);
  if (it == m.end()) throw Error(ErrorCode::invalid_argument, "missing target for tap '" + tap + "'");
  return it->second;
}

inline double mean_sq_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

}  // namespace detail

inline double content_loss(const FeatureMaps& f, const ContentTargets& targets,
                           const std::vector<std::string>& taps) {
  if (taps.empty()) return 0.0;
  double total = 0.0;
  for (const auto& tap : taps) {
    const Tensor& a = detail::find_tap(f, tap);
    const Tensor& t = detail::find_target(targets, tap);
    if (!a.same_shape(t)) {
      throw Error(ErrorCode::dimension_mismatch, "content tap '" + tap + "': " + a.shape_string() +
                                                     " vs target " + t.shape_string());
    }
    total += detail::mean_sq_diff(a.data, t.data);
  }
  return total / static_cast<double>(taps.size());
}

inline double style_loss(const FeatureMaps& f, const StyleTargets& targets,
                         const std::vector<std::string>& taps, const std::vector<double>& weights) {
  if (weights.size() != taps.size()) {
    throw Error(ErrorCode::invalid_argument, "style_loss: weights must parallel taps");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const Matrix g = gram(detail::find_tap(f, taps[k]));
    const Matrix& t = detail::find_target(targets, taps[k]);
    if (g.n != t.n) {
      throw Error(ErrorCode::dimension_mismatch, "style tap '" + taps[k] + "': gram size " +
                                                     std::to_string(g.n) + " vs target " +
                                                     std::to_string(t.n));
    }
    total += weights[k] * detail::mean_sq_diff(g.v, t.v);
  }
  return total;
}

inline ContentTargets make_content_targets(const FeatureMaps& f, const std::vector<std::string>& taps) {
  ContentTargets t;
  for (const auto& tap : taps) t.emplace(tap, detail::find_tap(f, tap));
  return t;
}

inline StyleTargets make_style_targets(const FeatureMaps& f, const std::vector<std::string>& taps) {
  StyleTargets t;
  for (const auto& tap : taps) t.emplace(tap, gram(detail::find_tap(f, tap)));
  return t;
}

/// Network config whose taps are exactly the union of the transfer taps.
inline NetConfig with_transfer_taps(NetConfig cfg, const TransferParams& p) {
  std::vector<std::string> taps;
  for (int b = 0; b < cfg.pool_count(); ++b) {
    for (const std::string& name : {block_name(b), pool_name(b)}) {
      const bool used = std::find(p.content_taps.begin(), p.content_taps.end(), name) != p.content_taps.end() ||
                        std::find(p.style_taps.begin(), p.style_taps.end(), name) != p.style_taps.end();
      if (used) taps.push_back(name);
    }
  }
  cfg.tap_names = std::move(taps);
  return cfg;
}

struct LossValue {
  double content = 0.0;
  double style = 0.0;
  double total = 0.0;
  std::vector<double> gradient;  // image layout (interleaved RGB)
};

/// Total loss and its exact pixel gradient from one forward and one reverse pass.
inline LossValue total_loss_and_grad(const ImageF& x, const ContentTargets& content_t,
                                     const StyleTargets& style_t, const TransferParams& p,
                                     const Weights& w, const NetConfig& cfg) {
  const NetConfig net = with_transfer_taps(cfg, p);
  const std::vector<double> sw = normalized_style_weights(p);
  const ForwardTrace trace = forward_trace(x, w, net, std::max(1, deepest_tap(net, net.tap_names)));
  FeatureMaps f;
  for (const auto& tap : net.tap_names) f.emplace(tap, trace.tap(resolve_tap(net, tap)));

  LossValue out;
  out.content = content_loss(f, content_t, p.content_taps);
  out.style = style_loss(f, style_t, p.style_taps, sw);
  const double ratio = ratio_from_u(p.u);
  out.total = out.content + ratio * out.style;

  FeatureMaps cot;
  auto cot_for = [&](const std::string& tap) -> Tensor& {
    auto it = cot.find(tap);
    if (it == cot.end()) {
      const Tensor& a = f.at(tap);
      it = cot.emplace(tap, Tensor(a.channels, a.height, a.width)).first;
    }
    return it->second;
  };

  // d/dF of mean((F - T)^2), averaged over content taps
  for (const auto& tap : p.content_taps) {
    const Tensor& a = f.at(tap);
    const Tensor& t = content_t.at(tap);
    Tensor& c = cot_for(tap);
    const double scale = 2.0 / (static_cast<double>(a.size()) * p.content_taps.size());
    for (std::size_t i = 0; i < a.size(); ++i) c.data[i] += scale * (a.data[i] - t.data[i]);
  }
  // d/dF of w * mean((G - A)^2) with G = F F^T / M is 4 w / (C^2 M) * (G - A) F
  for (std::size_t k = 0; k < p.style_taps.size(); ++k) {
    const std::string& tap = p.style_taps[k];
    const Tensor& a = f.at(tap);
    const Matrix g = gram(a);
    const Matrix& target = style_t.at(tap);
    const int n = a.channels;
    const std::size_t m = a.plane();
    const double scale = ratio * 4.0 * sw[k] / (static_cast<double>(n) * n * static_cast<double>(m));
    Tensor& c = cot_for(tap);
    for (int i = 0; i < n; ++i) {
      double* dst = c.channel(i);
      for (int j = 0; j < n; ++j) {
        const double d = scale * (g(i, j) - target(i, j));
        const double* fj = a.channel(j);
        for (std::size_t q = 0; q < m; ++q) dst[q] += d * fj[q];
      }
    }
  }

  out.gradient = to_interleaved(input_gradient(trace, w, net, cot));
  return out;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int t = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// One bias-corrected Adam descent step on x, followed by a clamp to [0,1].
inline void adam_step(std::span<double> x, std::span<const double> g, AdamState& state, double lr) {
  if (x.size() != g.size()) {
    throw Error(ErrorCode::dimension_mismatch, "adam_step: gradient size does not match image");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw Error(ErrorCode::non_finite, "adam_step: non-finite gradient at element " + std::to_string(i));
    }
  }
  if (state.m.empty()) {
    state.m.assign(x.size(), 0.0);
    state.v.assign(x.size(), 0.0);
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(kAdamBeta1, state.t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, state.t);
  for (std::size_t i = 0; i < x.size(); ++i) {
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g[i];
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    x[i] = std::clamp(x[i] - lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon), 0.0, 1.0);
  }
}

struct TraceRow {
  int step = 0;
  double content_loss = 0.0;
  double style_loss = 0.0;
  double total_loss = 0.0;

  bool operator==(const TraceRow&) const = default;
};

/// Row k holds the losses of the image after k updates (row 0 is the start).
using LossTrace = std::vector<TraceRow>;

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_trace_csv(std::ostream& out, const LossTrace& trace) {
  out << "step,content_loss,style_loss,total_loss\n";
  for (const auto& r : trace) {
    out << r.step << ',' << format_double(r.content_loss) << ',' << format_double(r.style_loss)
        << ',' << format_double(r.total_loss) << '\n';
  }
}

struct Snapshot {
  int step = 0;
  ImageF image;
};

struct TransferResult {
  ImageF image;
  LossTrace trace;
  std::vector<Snapshot> snapshots;
};

/// Raised when the loss or gradient stops being finite; carries the last
/// image whose loss evaluated cleanly.
class TransferAborted : public Error {
 public:
  TransferAborted(int step, ImageF last_good, LossTrace trace)
      : Error(ErrorCode::non_finite, "non-finite loss at step " + std::to_string(step)),
        step_(step), last_good_(std::move(last_good)), trace_(std::move(trace)) {}

  int step() const noexcept { return step_; }
  const ImageF& last_good() const noexcept { return last_good_; }
  const LossTrace& trace() const noexcept { return trace_; }

 private:
  int step_;
  ImageF last_good_;
  LossTrace trace_;
};

inline constexpr std::uint64_t kNoiseStream = 0x4E4F495345ULL;

inline ImageF initial_image(const ImageF& content, const TransferParams& p) {
  if (p.init_mode == InitMode::content_copy) return content;
  ImageF x(content.width(), content.height());
  const CounterRng rng(p.seed, kNoiseStream);
  auto d = x.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = rng.uniform(i);
  return x;
}

/// Redraws content in the style of style. The style image is resampled to the
/// content size before its Gram targets are taken.
inline TransferResult run_transfer(const ImageF& content, const ImageF& style,
                                   const TransferParams& p, const NetConfig& cfg) {
  validate_config(cfg);
  validate_params(p, cfg);
  check_input_dims(content.width(), content.height(), cfg);
  const NetConfig net = with_transfer_taps(cfg, p);
  const Weights w = init_weights(cfg);

  const ImageF style_work =
      style.same_shape(content) ? style : resize(style, content.width(), content.height());
  const ContentTargets content_t = make_content_targets(forward(content, w, net), p.content_taps);
  const StyleTargets style_t = make_style_targets(forward(style_work, w, net), p.style_taps);

  TransferResult result;
  ImageF x = initial_image(content, p);
  AdamState adam;
  for (int step = 0;; ++step) {
    LossValue lv = total_loss_and_grad(x, content_t, style_t, p, w, net);
    const bool finite = std::isfinite(lv.total) && std::isfinite(lv.content) && std::isfinite(lv.style) &&
                        std::all_of(lv.gradient.begin(), lv.gradient.end(), [](double g) { return std::isfinite(g); });
    if (!finite) {
      const ImageF last = result.snapshots.empty() ? initial_image(content, p) : result.snapshots.back().image;
      throw TransferAborted(step, last, std::move(result.trace));
    }
    result.trace.push_back({step, lv.content, lv.style, lv.total});
    if (step > 0 && p.snapshot_every > 0 && step % p.snapshot_every == 0) {
      result.snapshots.push_back({step, x});
    }
    if (step == p.iterations) break;
    adam_step(x.data(), lv.gradient, adam, p.learning_rate);
  }
  result.image = std::move(x);
  return result;
}

}  // namespace lookdev
