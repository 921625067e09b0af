#pragma once

/**
 * @file commands.hpp
 * @brief The batch commands behind the `lookdev` CLI: prep-style, preview,
 *        render, sweep and finish.
 *
 * Every command returns a process exit code (0 success, 1 failure, 2 usage
 * error) and writes `level:code:message` diagnostics to the given stream.
 * Images and text files are written via temp file + rename, so a failed frame
 * never leaves a partial output under its final name.
 */

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lookdev/diagnostics.hpp"
#include "lookdev/error.hpp"
#include "lookdev/finisher.hpp"
#include "lookdev/image.hpp"
#include "lookdev/image_io.hpp"
#include "lookdev/look_controls.hpp"
#include "lookdev/manifest.hpp"
#include "lookdev/style_opt.hpp"
#include "lookdev/worker_pool.hpp"

namespace lookdev {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct CommandOptions {
  int workers = 1;
  std::optional<fs::path> out;  // overrides the manifest's out directory
};

namespace detail {

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::unwritable_path, "cannot write " + path.string());
    os << text;
    os.flush();
    if (!os) throw Error(ErrorCode::unwritable_path, "failed writing " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::unwritable_path, "cannot move " + tmp.string() + " into place");
  }
}

inline fs::path with_suffix(const fs::path& image_path, std::string_view suffix) {
  fs::path p = image_path;
  p.replace_extension();
  p += suffix;
  return p;
}

inline int snap_to_step(double v, int step) {
  return std::max(step, static_cast<int>(std::lround(v / step)) * step);
}

inline void emit(std::ostream& diag, const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) diag << d << '\n';
}

inline fs::path output_dir(const JobManifest& m, const CommandOptions& opts) {
  fs::path dir = opts.out ? *opts.out : fs::path(m.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::unwritable_path, "cannot create output directory " + dir.string());
  }
  return dir;
}

inline std::vector<Diagnostic> missing_inputs(const std::vector<std::string>& paths) {
  std::vector<Diagnostic> out;
  for (const auto& p : paths) {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) out.push_back({Level::error, "missing_input", "no such file: " + p});
  }
  return out;
}

inline nlohmann::json frame_json(const FrameResult& r) {
  nlohmann::json j = {{"frame", r.frame},
                      {"status", r.status == JobStatus::ok ? "ok" : "failed"},
                      {"wall_seconds", r.wall_seconds},
                      {"output", r.output}};
  if (!r.message.empty()) j["message"] = r.message;
  if (r.status == JobStatus::ok) {
    j["content_loss"] = r.content_loss;
    j["style_loss"] = r.style_loss;
    j["total_loss"] = r.total_loss;
  }
  for (const auto& [k, v] : r.metrics) j[k] = v;
  return j;
}

inline int finish_report(const RunReport& report, std::string_view what, std::ostream& diag) {
  for (const auto& r : report.frames) {
    if (r.status == JobStatus::failed) {
      diag << Diagnostic{Level::error, "frame_failed", std::string(what) + " frame " + std::to_string(r.frame) + ": " + r.message}
           << '\n';
    }
  }
  diag << Diagnostic{Level::info, "summary",
                     std::string(what) + ": " + std::to_string(report.frames.size() - report.failures()) + " ok, " +
                         std::to_string(report.failures()) + " failed"}
       << '\n';
  return report.ok() ? kExitOk : kExitFailure;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

/// Frame size for the network: width snapped to a multiple of 2^pools, height
/// from the content aspect, snapped the same way.
struct WorkingSize {
  int width = 0;
  int height = 0;
};

inline WorkingSize working_size(int content_w, int content_h, double target_w, const NetConfig& cfg) {
  const int step = 1 << cfg.pool_count();
  const int w = detail::snap_to_step(target_w, step);
  const int h = detail::snap_to_step(static_cast<double>(w) * content_h / content_w, step);
  return {w, h};
}

struct FramePlan {
  std::vector<FrameJob> jobs;
  std::vector<Diagnostic> diagnostics;
  int full_width = 0;  // working width the manifest's u refers to
  int width = 0;       // width actually rendered
  int height = 0;
  double u_effective = 0.0;
};

/// Resolves the manifest into per-frame jobs at `scale` x working width.
/// u is rescaled with the width so the preview keeps the full-size look.
inline FramePlan plan_frames(const JobManifest& m, const fs::path& out_dir, double scale,
                             std::string_view prefix) {
  FramePlan plan;
  const auto frames = content_frames(m);
  if (frames.empty()) throw Error(ErrorCode::invalid_argument, "manifest lists no content frames");
  const ImageF first = load_image(frames.front().path);
  const double target = m.working_width > 0 ? m.working_width : first.width();
  const WorkingSize full = working_size(first.width(), first.height(), target, m.net);
  const WorkingSize work = scale == 1.0 ? full : working_size(first.width(), first.height(), scale * full.width, m.net);
  plan.full_width = full.width;
  plan.width = work.width;
  plan.height = work.height;
  plan.u_effective = work.width == full.width ? m.transfer.u : scaled_u(m.transfer.u, full.width, work.width);

  LookSpec look{m.transfer.u, m.transfer.iterations, work.width, scale, m.finish, m.transfer.seed};
  MemoryGuard guard;
  guard.max_width = m.max_width;
  plan.diagnostics = validate(look, guard);

  for (const auto& f : frames) {
    FrameJob job;
    job.frame = f.index;
    job.input = f.path;
    job.output = out_dir / expand_pattern(std::string(prefix) + ".%04d.png", f.index);
    job.params = m.transfer;
    job.params.u = plan.u_effective;
    job.params.seed = m.transfer.seed + static_cast<std::uint64_t>(f.index);
    job.width = work.width;
    job.height = work.height;
    job.u_full = m.transfer.u;
    plan.jobs.push_back(std::move(job));
  }
  return plan;
}

/// Runs the transfer for every job. Writes the frame, its loss trace CSV and
/// any snapshots next to job.output.
inline RunReport render_jobs(const std::vector<FrameJob>& jobs, const ImageF& style, const NetConfig& net,
                             int depth, int workers) {
  return run_pool(jobs, workers, [&](const FrameJob& job) {
    ImageF content = load_image(job.input);
    if (content.width() != job.width || content.height() != job.height) {
      content = resize(content, job.width, job.height);
    }
    TransferResult result;
    try {
      result = run_transfer(content, style, job.params, net);
    } catch (const TransferAborted& e) {
      save_image(e.last_good(), detail::with_suffix(job.output, ".lastgood.png"), depth);
      throw;
    }
    std::ostringstream csv;
    write_trace_csv(csv, result.trace);
    detail::write_text_atomic(detail::with_suffix(job.output, ".trace.csv"), csv.str());
    for (const auto& snap : result.snapshots) {
      save_image(snap.image, detail::with_suffix(job.output, expand_pattern(".step%04d.png", snap.step)), depth);
    }
    save_image(result.image, job.output, depth);

    FrameResult r;
    r.output = job.output.string();
    r.content_loss = result.trace.back().content_loss;
    r.style_loss = result.trace.back().style_loss;
    r.total_loss = result.trace.back().total_loss;
    r.metrics = {{"u", job.params.u}, {"u_full", job.u_full}, {"width", job.width},
                 {"height", job.height}, {"seed", static_cast<double>(job.params.seed)},
                 {"iterations", job.params.iterations}};
    return r;
  });
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline int run_plan(const JobManifest& m, const CommandOptions& opts, std::ostream& diag, double scale,
                    std::string_view prefix) {
  const fs::path out = output_dir(m, opts);
  std::vector<std::string> inputs{m.style};
  for (const auto& f : content_frames(m)) inputs.push_back(f.path);
  if (auto missing = missing_inputs(inputs); !missing.empty()) {
    emit(diag, missing);
    return kExitFailure;
  }
  FramePlan plan = plan_frames(m, out, scale, prefix);
  emit(diag, plan.diagnostics);
  if (has_errors(plan.diagnostics)) return kExitFailure;
  if (plan.width != plan.full_width) {
    diag << Diagnostic{Level::info, "preview_scale",
                       "width " + std::to_string(plan.full_width) + " -> " + std::to_string(plan.width) +
                           ", u " + format_double(m.transfer.u) + " -> " + format_double(plan.u_effective)}
         << '\n';
  }

  const ImageF style = load_image(m.style);
  const RunReport report = render_jobs(plan.jobs, style, m.net, m.depth, opts.workers);

  nlohmann::json j = {{"command", prefix},
                      {"full_width", plan.full_width},
                      {"width", plan.width},
                      {"height", plan.height},
                      {"scale", scale},
                      {"u_full", m.transfer.u},
                      {"u_effective", plan.u_effective},
                      {"frames", nlohmann::json::array()}};
  for (const auto& r : report.frames) j["frames"].push_back(frame_json(r));
  write_text_atomic(out / (std::string(prefix) + "_report.json"), j.dump(2) + "\n");
  return finish_report(report, prefix, diag);
}

template <typename Fn>
int guarded(std::ostream& diag, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    diag << Diagnostic{Level::error, std::string(to_string(e.code())), e.what()} << '\n';
  } catch (const std::exception& e) {
    diag << Diagnostic{Level::error, "internal", e.what()} << '\n';
  }
  return kExitFailure;
}

}  // namespace detail

/// Renders every content frame at the working width.
inline int cmd_render(const JobManifest& m, const CommandOptions& opts, std::ostream& diag) {
  return detail::guarded(diag, [&] { return detail::run_plan(m, opts, diag, 1.0, "render"); });
}

/// Renders at scale x working width with u rescaled to match.
inline int cmd_preview(const JobManifest& m, double scale, const CommandOptions& opts, std::ostream& diag) {
  if (!(scale > 0.0 && scale <= 1.0)) {
    diag << Diagnostic{Level::error, "invalid_scale", "preview scale must lie in (0,1], got " + format_double(scale)}
         << '\n';
    return kExitUsage;
  }
  return detail::guarded(diag, [&] { return detail::run_plan(m, opts, diag, scale, "preview"); });
}

inline std::string sweep_label(SweepAxis axis, double value) {
  return (axis == SweepAxis::u ? "u=" : "iter=") + format_double(value);
}

/// Renders the first content frame once per sweep value (at the manifest's
/// preview_scale) and assembles a labeled contact sheet in value order.
inline int cmd_sweep(const JobManifest& m, SweepAxis axis, const std::vector<double>& values,
                     const CommandOptions& opts, std::ostream& diag) {
  if (values.empty()) {
    diag << Diagnostic{Level::error, "usage", "sweep needs at least one value"} << '\n';
    return kExitUsage;
  }
  SweepSpec sweep{axis, values, LookSpec{m.transfer.u, m.transfer.iterations, m.working_width, m.preview_scale, m.finish, m.transfer.seed}};
  std::vector<LookSpec> looks;
  try {
    looks = make_sweep(sweep);
  } catch (const Error& e) {
    diag << Diagnostic{Level::error, "usage", e.what()} << '\n';
    return kExitUsage;
  }

  return detail::guarded(diag, [&] {
    const fs::path out = detail::output_dir(m, opts);
    const auto frames = content_frames(m);
    if (auto missing = detail::missing_inputs({m.style, frames.front().path}); !missing.empty()) {
      detail::emit(diag, missing);
      return kExitFailure;
    }
    JobManifest single = m;
    single.content = {frames.front().path};
    single.content_pattern.clear();
    single.frame_start = frames.front().index;
    single.frame_end.reset();

    std::vector<FrameJob> jobs;
    std::vector<Diagnostic> diags;
    const std::string stem = "sweep_" + std::string(to_string(axis));
    for (std::size_t k = 0; k < looks.size(); ++k) {
      JobManifest variant = single;
      variant.transfer.u = looks[k].u;
      variant.transfer.iterations = looks[k].iterations;
      FramePlan plan = plan_frames(variant, out, m.preview_scale, stem);
      for (auto& d : plan.diagnostics) {
        d.message = sweep_label(axis, values[k]) + ": " + d.message;
        diags.push_back(d);
      }
      FrameJob job = plan.jobs.front();
      job.frame = static_cast<int>(k);
      job.output = out / (stem + "_" + std::to_string(k) + ".png");
      jobs.push_back(std::move(job));
    }
    detail::emit(diag, diags);
    if (has_errors(diags)) return kExitFailure;

    const ImageF style = load_image(m.style);
    const RunReport report = render_jobs(jobs, style, m.net, m.depth, opts.workers);
    nlohmann::json j = {{"command", "sweep"}, {"axis", to_string(axis)}, {"values", values},
                        {"frames", nlohmann::json::array()}};
    for (const auto& r : report.frames) j["frames"].push_back(detail::frame_json(r));

    int code = detail::finish_report(report, "sweep", diag);
    if (code == kExitOk) {
      std::vector<ImageF> cells;
      std::vector<std::string> labels;
      for (std::size_t k = 0; k < jobs.size(); ++k) {
        cells.push_back(load_image(jobs[k].output));
        labels.push_back(sweep_label(axis, values[k]));
      }
      const fs::path sheet = out / (stem + "_sheet.png");
      save_image(contact_sheet(cells, labels), sheet, m.depth);
      j["contact_sheet"] = sheet.string();
    }
    detail::write_text_atomic(out / "sweep_report.json", j.dump(2) + "\n");
    return code;
  });
}

struct FinishJob {
  int frame = 0;
  std::string stylized;
  std::string original;
  fs::path output;
};

/// Upscales, denoises and dissolves stylized frames against the originals.
/// Stylized frames default to the render outputs; originals default to the
/// content frames. Originals not already at delivery size are resampled to it.
inline int cmd_finish(const JobManifest& m, const CommandOptions& opts, std::ostream& diag) {
  return detail::guarded(diag, [&] {
    const auto frames = content_frames(m);
    const fs::path out_root = opts.out ? *opts.out : fs::path(m.out);
    const int count = static_cast<int>(frames.size());
    const std::string default_stylized = (out_root / "render.%04d.png").string();
    const auto stylized = frames_from(m.stylized, m.stylized.empty() && m.stylized_pattern.empty() ? default_stylized : m.stylized_pattern,
                                      m.frame_start, count);
    std::vector<FrameRef> originals;
    if (!m.original.empty() || !m.original_pattern.empty()) {
      originals = frames_from(m.original, m.original_pattern, m.frame_start, count);
    } else {
      originals = frames;
    }
    if (stylized.size() != frames.size() || originals.size() != frames.size()) {
      diag << Diagnostic{Level::error, "frame_count_mismatch",
                         std::to_string(stylized.size()) + " stylized vs " + std::to_string(originals.size()) +
                             " original frames for " + std::to_string(frames.size()) + " shot frames"}
           << '\n';
      return kExitFailure;
    }
    std::vector<std::string> inputs;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      inputs.push_back(stylized[i].path);
      inputs.push_back(originals[i].path);
    }
    if (auto missing = detail::missing_inputs(inputs); !missing.empty()) {
      detail::emit(diag, missing);
      return kExitFailure;
    }

    const fs::path out = detail::output_dir(m, opts);
    std::vector<FinishJob> jobs;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      jobs.push_back({frames[i].index, stylized[i].path, originals[i].path,
                      out / expand_pattern("final.%04d.png", frames[i].index)});
    }
    const RunReport report = run_pool(jobs, opts.workers, [&](const FinishJob& job) {
      const ImageF src = load_image(job.stylized);
      const ImageF upscaled = upscale_for_delivery(src, m.finish);
      const ImageF finished = gaussian_blur(upscaled, resolved_denoise_sigma(src, m.finish));
      ImageF original = load_image(job.original);
      if (!original.same_shape(finished)) original = resize(original, finished.width(), finished.height());
      const double t = dissolve_weight(job.frame, m.finish);
      save_image(cross_dissolve(original, finished, t), job.output, m.depth);
      FrameResult r;
      r.output = job.output.string();
      r.metrics = {{"dissolve_weight", t},
                   {"hf_energy_upscaled", hf_energy(upscaled, 1.0)},
                   {"hf_energy_finished", hf_energy(finished, 1.0)},
                   {"width", finished.width()},
                   {"height", finished.height()}};
      return r;
    });
    nlohmann::json j = {{"command", "finish"}, {"frames", nlohmann::json::array()}};
    for (const auto& r : report.frames) j["frames"].push_back(detail::frame_json(r));
    detail::write_text_atomic(out / "finish_report.json", j.dump(2) + "\n");
    return detail::finish_report(report, "finish", diag);
  });
}

struct CompositeSpec {
  std::string path;
  int x = 0;
  int y = 0;
};

struct PrepStyleArgs {
  std::string style;
  std::optional<Rect> crop;
  std::vector<CompositeSpec> composites;
  std::string out;
  int depth = 8;
};

struct PrepStyleResult {
  ImageF image;
  StyleImageReport report;
  std::vector<Diagnostic> diagnostics;
};

inline constexpr double kClippedFractionWarning = 0.01;

/// Crop, then paste blocks of color/texture in order, then report quality.
inline PrepStyleResult prep_style(const PrepStyleArgs& args) {
  PrepStyleResult r;
  r.image = load_image(args.style);
  if (args.crop) r.image = crop(r.image, *args.crop);
  for (const auto& c : args.composites) {
    const ImageF patch = load_image(c.path);
    r.image = composite_block(r.image, patch, Rect{c.x, c.y, patch.width(), patch.height()});
  }
  r.report = style_image_report(r.image);
  r.diagnostics.push_back({Level::info, "style_report",
                           "clipped_highlight_fraction=" + format_double(r.report.clipped_highlight_fraction) +
                               " clipped_shadow_fraction=" + format_double(r.report.clipped_shadow_fraction) +
                               " hf_energy=" + format_double(r.report.hf_energy)});
  if (r.report.clipped_highlight_fraction > kClippedFractionWarning) {
    r.diagnostics.push_back({Level::warning, "blown_highlights",
                             format_double(100.0 * r.report.clipped_highlight_fraction) +
                                 "% of pixels are clipped white; highlights and paint texture will not transfer"});
  }
  if (r.report.clipped_shadow_fraction > kClippedFractionWarning) {
    r.diagnostics.push_back({Level::warning, "crushed_shadows",
                             format_double(100.0 * r.report.clipped_shadow_fraction) +
                                 "% of pixels are clipped black"});
  }
  return r;
}

inline int cmd_prep_style(const PrepStyleArgs& args, std::ostream& diag) {
  return detail::guarded(diag, [&] {
    const PrepStyleResult r = prep_style(args);
    save_image(r.image, args.out, args.depth);
    detail::emit(diag, r.diagnostics);
    return kExitOk;
  });
}

}  // namespace lookdev
