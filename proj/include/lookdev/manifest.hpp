#pragma once

/**
 * @file manifest.hpp
 * @brief Job manifests: flat `key = value` text describing a frame, sequence
 *        or sweep job.
 *
 * Grammar, one entry per line:
 *
 *     # comment
 *     key = value
 *     list_key = a, b, c
 *
 * Blank lines are ignored. '#' starts a comment at the beginning of a line or
 * after whitespace. Keys may appear once. List items are trimmed and may not
 * contain commas. See kManifestKeys for the accepted keys.
 */

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lookdev/error.hpp"
#include "lookdev/feature_net.hpp"
#include "lookdev/finisher.hpp"
#include "lookdev/look_controls.hpp"
#include "lookdev/style_opt.hpp"

namespace lookdev {

struct JobManifest {
  // Inputs. Exactly one of content / content_pattern is set. Frames from a
  // list are numbered frame_start, frame_start + 1, ...
  std::vector<std::string> content;
  std::string content_pattern;  // printf-style, e.g. plate.%04d.png
  int frame_start = 0;
  std::optional<int> frame_end;  // inclusive; required with a pattern
  std::string style;
  std::string out;

  NetConfig net;  // tap_names are derived from the transfer taps
  TransferParams transfer;

  int working_width = 0;  // 0 = width of the content frames
  double preview_scale = 1.0;
  int max_width = kDefaultMaxWidth;
  int depth = 8;

  FinishSpec finish;
  std::vector<std::string> stylized;
  std::string stylized_pattern;
  std::vector<std::string> original;
  std::string original_pattern;

  bool operator==(const JobManifest&) const = default;
};

inline constexpr std::string_view kManifestKeys[] = {
    "content",        "content_pattern", "frame_start",       "frame_end",     "style",
    "out",            "net_blocks",      "net_seed",          "u",             "iterations",
    "learning_rate",  "seed",            "init",              "content_taps",  "style_taps",
    "style_tap_weights", "snapshot_every", "working_width",   "preview_scale", "max_width",
    "depth",          "delivery_width",  "denoise_sigma",     "dissolve",      "stylized",
    "stylized_pattern", "original",      "original_pattern",
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(std::string_view line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

struct ManifestLine {
  int number;
  std::string key;
  std::string value;
};

[[noreturn]] inline void parse_fail(int line, const std::string& msg) {
  throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_number(const ManifestLine& l) {
  T v{};
  const char* first = l.value.data();
  const char* last = first + l.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    parse_fail(l.number, "invalid number '" + l.value + "' for key '" + l.key + "'");
  }
  return v;
}

inline std::vector<std::string> parse_list(const ManifestLine& l) {
  std::vector<std::string> out;
  std::string_view rest = l.value;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    if (item.empty()) parse_fail(l.number, "empty list item in '" + l.key + "'");
    out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

template <typename T>
std::vector<T> parse_number_list(const ManifestLine& l) {
  std::vector<T> out;
  for (const auto& item : parse_list(l)) out.push_back(parse_number<T>({l.number, l.key, item}));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_same_v<T, std::string>) {
      s += items[i];
    } else if constexpr (std::is_floating_point_v<T>) {
      s += format_double(items[i]);
    } else {
      s += std::to_string(items[i]);
    }
  }
  return s;
}

}  // namespace detail

/// Parses manifest text and applies defaults. Unknown or repeated keys,
/// malformed values and missing required keys are parse errors.
inline JobManifest parse_manifest(std::string_view text) {
  using detail::parse_fail;
  std::vector<detail::ManifestLine> lines;
  std::istringstream in{std::string(text)};
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const std::string line = detail::strip_comment(raw);
    const std::string_view body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) parse_fail(number, "expected 'key = value'");
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string value(detail::trim(body.substr(eq + 1)));
    if (key.empty()) parse_fail(number, "missing key before '='");
    if (std::find(std::begin(kManifestKeys), std::end(kManifestKeys), key) == std::end(kManifestKeys)) {
      parse_fail(number, "unknown key '" + key + "'");
    }
    for (const auto& prev : lines) {
      if (prev.key == key) parse_fail(number, "duplicate key '" + key + "'");
    }
    if (value.empty()) parse_fail(number, "missing value for '" + key + "'");
    lines.push_back({number, key, value});
  }

  JobManifest m;
  for (const auto& l : lines) {
    const std::string& k = l.key;
    if (k == "content") m.content = detail::parse_list(l);
    else if (k == "content_pattern") m.content_pattern = l.value;
    else if (k == "frame_start") m.frame_start = detail::parse_number<int>(l);
    else if (k == "frame_end") m.frame_end = detail::parse_number<int>(l);
    else if (k == "style") m.style = l.value;
    else if (k == "out") m.out = l.value;
    else if (k == "net_blocks") m.net.block_channels = detail::parse_number_list<int>(l);
    else if (k == "net_seed") m.net.seed = detail::parse_number<std::uint64_t>(l);
    else if (k == "u") m.transfer.u = detail::parse_number<double>(l);
    else if (k == "iterations") m.transfer.iterations = detail::parse_number<int>(l);
    else if (k == "learning_rate") m.transfer.learning_rate = detail::parse_number<double>(l);
    else if (k == "seed") m.transfer.seed = detail::parse_number<std::uint64_t>(l);
    else if (k == "init") {
      if (l.value == "content-copy") m.transfer.init_mode = InitMode::content_copy;
      else if (l.value == "seeded-noise") m.transfer.init_mode = InitMode::seeded_noise;
      else parse_fail(l.number, "init must be content-copy or seeded-noise");
    }
    else if (k == "content_taps") m.transfer.content_taps = detail::parse_list(l);
    else if (k == "style_taps") m.transfer.style_taps = detail::parse_list(l);
    else if (k == "style_tap_weights") m.transfer.style_tap_weights = detail::parse_number_list<double>(l);
    else if (k == "snapshot_every") m.transfer.snapshot_every = detail::parse_number<int>(l);
    else if (k == "working_width") m.working_width = detail::parse_number<int>(l);
    else if (k == "preview_scale") m.preview_scale = detail::parse_number<double>(l);
    else if (k == "max_width") m.max_width = detail::parse_number<int>(l);
    else if (k == "depth") m.depth = detail::parse_number<int>(l);
    else if (k == "delivery_width") m.finish.delivery_width = detail::parse_number<int>(l);
    else if (k == "denoise_sigma") m.finish.denoise_sigma = detail::parse_number<double>(l);
    else if (k == "dissolve") {
      const auto v = detail::parse_number_list<int>(l);
      if (v.size() != 4) parse_fail(l.number, "dissolve takes in_start, in_end, out_start, out_end");
      m.finish.dissolve = DissolveCurve{v[0], v[1], v[2], v[3]};
      if (!m.finish.dissolve->valid()) parse_fail(l.number, "dissolve frames must be non-decreasing");
    }
    else if (k == "stylized") m.stylized = detail::parse_list(l);
    else if (k == "stylized_pattern") m.stylized_pattern = l.value;
    else if (k == "original") m.original = detail::parse_list(l);
    else if (k == "original_pattern") m.original_pattern = l.value;
  }

  auto line_of = [&](std::string_view key) {
    for (const auto& l : lines)
      if (l.key == key) return l.number;
    return number;
  };
  if (m.content.empty() && m.content_pattern.empty()) parse_fail(number, "missing required key 'content'");
  if (!m.content.empty() && !m.content_pattern.empty()) {
    parse_fail(line_of("content_pattern"), "use either 'content' or 'content_pattern', not both");
  }
  if (!m.content_pattern.empty() && !m.frame_end) {
    parse_fail(line_of("content_pattern"), "'content_pattern' requires 'frame_end'");
  }
  if (m.frame_end && *m.frame_end < m.frame_start) {
    parse_fail(line_of("frame_end"), "frame_end is before frame_start");
  }
  if (m.style.empty()) parse_fail(number, "missing required key 'style'");
  if (m.out.empty()) parse_fail(number, "missing required key 'out'");
  if (m.depth != 8 && m.depth != 16) parse_fail(line_of("depth"), "depth must be 8 or 16");
  if (m.working_width < 0) parse_fail(line_of("working_width"), "working_width must be >= 0");
  if (m.finish.delivery_width < 0) parse_fail(line_of("delivery_width"), "delivery_width must be >= 0");

  m.net.tap_names = with_transfer_taps(m.net, m.transfer).tap_names;
  try {
    validate_config(m.net);
    validate_params(m.transfer, m.net);
  } catch (const Error& e) {
    parse_fail(number, e.what());
  }
  return m;
}

/// Manifest text that parses back to an equal manifest. Every key with a
/// value is written, defaults included.
inline std::string to_text(const JobManifest& m) {
  std::ostringstream os;
  auto put = [&os](std::string_view key, const std::string& value) { os << key << " = " << value << '\n'; };
  if (!m.content.empty()) put("content", detail::join(m.content));
  if (!m.content_pattern.empty()) put("content_pattern", m.content_pattern);
  put("frame_start", std::to_string(m.frame_start));
  if (m.frame_end) put("frame_end", std::to_string(*m.frame_end));
  put("style", m.style);
  put("out", m.out);
  put("net_blocks", detail::join(m.net.block_channels));
  put("net_seed", std::to_string(m.net.seed));
  put("u", format_double(m.transfer.u));
  put("iterations", std::to_string(m.transfer.iterations));
  put("learning_rate", format_double(m.transfer.learning_rate));
  put("seed", std::to_string(m.transfer.seed));
  put("init", std::string(to_string(m.transfer.init_mode)));
  put("content_taps", detail::join(m.transfer.content_taps));
  put("style_taps", detail::join(m.transfer.style_taps));
  if (!m.transfer.style_tap_weights.empty()) put("style_tap_weights", detail::join(m.transfer.style_tap_weights));
  put("snapshot_every", std::to_string(m.transfer.snapshot_every));
  put("working_width", std::to_string(m.working_width));
  put("preview_scale", format_double(m.preview_scale));
  put("max_width", std::to_string(m.max_width));
  put("depth", std::to_string(m.depth));
  put("delivery_width", std::to_string(m.finish.delivery_width));
  if (m.finish.denoise_sigma) put("denoise_sigma", format_double(*m.finish.denoise_sigma));
  if (const auto& d = m.finish.dissolve) {
    put("dissolve", detail::join(std::vector<int>{d->in_start, d->in_end, d->out_start, d->out_end}));
  }
  if (!m.stylized.empty()) put("stylized", detail::join(m.stylized));
  if (!m.stylized_pattern.empty()) put("stylized_pattern", m.stylized_pattern);
  if (!m.original.empty()) put("original", detail::join(m.original));
  if (!m.original_pattern.empty()) put("original_pattern", m.original_pattern);
  return os.str();
}

/// Substitutes frame into the first %d / %0Nd in pattern.
inline std::string expand_pattern(const std::string& pattern, int frame) {
  const auto pos = pattern.find('%');
  if (pos == std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "frame pattern has no %d field: " + pattern);
  }
  std::size_t i = pos + 1;
  int width = 0;
  while (i < pattern.size() && pattern[i] >= '0' && pattern[i] <= '9') width = width * 10 + (pattern[i++] - '0');
  if (i >= pattern.size() || pattern[i] != 'd') {
    throw Error(ErrorCode::invalid_argument, "frame pattern field must be %d or %0Nd: " + pattern);
  }
  std::string digits = std::to_string(frame < 0 ? -frame : frame);
  if (static_cast<int>(digits.size()) < width - (frame < 0 ? 1 : 0)) {
    digits.insert(0, static_cast<std::size_t>(width - (frame < 0 ? 1 : 0)) - digits.size(), '0');
  }
  if (frame < 0) digits.insert(0, 1, '-');
  return pattern.substr(0, pos) + digits + pattern.substr(i + 1);
}

struct FrameRef {
  int index = 0;
  std::string path;
};

/// Resolves a list or pattern source over the manifest's frame numbering.
inline std::vector<FrameRef> frames_from(const std::vector<std::string>& list, const std::string& pattern,
                                         int frame_start, int count) {
  std::vector<FrameRef> out;
  if (!pattern.empty()) {
    for (int i = 0; i < count; ++i) out.push_back({frame_start + i, expand_pattern(pattern, frame_start + i)});
  } else {
    for (std::size_t i = 0; i < list.size(); ++i) out.push_back({frame_start + static_cast<int>(i), list[i]});
  }
  return out;
}

inline std::vector<FrameRef> content_frames(const JobManifest& m) {
  const int count = m.content_pattern.empty() ? static_cast<int>(m.content.size())
                                              : *m.frame_end - m.frame_start + 1;
  return frames_from(m.content, m.content_pattern, m.frame_start, count);
}

}  // namespace lookdev
