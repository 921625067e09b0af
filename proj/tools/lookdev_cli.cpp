// lookdev: batch front end for style-transfer look development.
//
//   lookdev prep-style --style in.png [--crop x,y,w,h] [--composite patch.png@x,y]... --out out.png
//   lookdev preview    --manifest job.txt --scale 0.5 [--workers N] [--out DIR]
//   lookdev render     --manifest job.txt [--workers N] [--out DIR]
//   lookdev sweep      --manifest job.txt --axis u|iterations --values -1,0,1 [--workers N] [--out DIR]
//   lookdev finish     --manifest job.txt [--workers N] [--out DIR]

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lookdev/lookdev.hpp"

namespace {

using namespace lookdev;

bool parse_ints(const std::string& text, std::vector<int>& out) {
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    const char* b = item.data();
    const char* e = b + item.size();
    while (b < e && *b == ' ') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) return false;
    out.push_back(v);
  }
  return true;
}

bool parse_doubles(const std::string& text, std::vector<double>& out) {
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0;
    const char* b = item.data();
    const char* e = b + item.size();
    while (b < e && *b == ' ') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) return false;
    out.push_back(v);
  }
  return true;
}

int usage_error(const std::string& msg) {
  std::cerr << Diagnostic{Level::error, "usage", msg} << '\n';
  return kExitUsage;
}

int load_manifest(const std::string& path, JobManifest& m) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << Diagnostic{Level::error, "missing_file", "cannot read manifest " + path} << '\n';
    return kExitFailure;
  }
  std::stringstream text;
  text << in.rdbuf();
  try {
    m = parse_manifest(text.str());
  } catch (const Error& e) {
    std::cerr << Diagnostic{Level::error, "manifest", path + ": " + e.what()} << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Look development for neural style transfer"};
  app.require_subcommand(1);

  std::string manifest_path;
  double scale = 0.0;
  std::string axis;
  std::string values;
  int workers = 1;
  std::string out;

  auto add_job_flags = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path, "Job manifest")->required();
    cmd->add_option("--workers", workers, "Frames rendered in parallel")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Output directory (overrides the manifest)");
  };

  CLI::App* prep = app.add_subcommand("prep-style", "Crop and composite a style image, then report its quality");
  std::string style_in, crop_text, prep_out;
  std::vector<std::string> composites;
  int depth = 8;
  prep->add_option("--style", style_in, "Input style image")->required();
  prep->add_option("--crop", crop_text, "Crop rect x,y,w,h");
  prep->add_option("--composite", composites, "Patch image pasted at PATH@x,y (repeatable, applied in order)");
  prep->add_option("--out", prep_out, "Output image")->required();
  prep->add_option("--depth", depth, "Output bit depth (8 or 16)")->check(CLI::IsMember({8, 16}));

  CLI::App* preview = app.add_subcommand("preview", "Render at a fraction of the working width with u rescaled");
  add_job_flags(preview);
  preview->add_option("--scale", scale, "Fraction of the working width, in (0,1]")->required();

  CLI::App* render = app.add_subcommand("render", "Render every frame at the working width");
  add_job_flags(render);

  CLI::App* sweep = app.add_subcommand("sweep", "Render one frame per value and build a contact sheet");
  add_job_flags(sweep);
  sweep->add_option("--axis", axis, "u or iterations")->required()->check(CLI::IsMember({"u", "iterations"}));
  sweep->add_option("--values", values, "Comma-separated, strictly increasing values")->required();

  CLI::App* finish = app.add_subcommand("finish", "Upscale, denoise and cross-dissolve into delivery frames");
  add_job_flags(finish);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  CommandOptions opts;
  opts.workers = workers;
  if (!out.empty()) opts.out = out;

  if (*prep) {
    PrepStyleArgs args;
    args.style = style_in;
    args.out = prep_out;
    args.depth = depth;
    if (!crop_text.empty()) {
      std::vector<int> r;
      if (!parse_ints(crop_text, r) || r.size() != 4) return usage_error("--crop expects x,y,w,h");
      args.crop = Rect{r[0], r[1], r[2], r[3]};
    }
    for (const auto& c : composites) {
      const auto at = c.rfind('@');
      std::vector<int> xy;
      if (at == std::string::npos || !parse_ints(c.substr(at + 1), xy) || xy.size() != 2) {
        return usage_error("--composite expects PATH@x,y, got '" + c + "'");
      }
      args.composites.push_back({c.substr(0, at), xy[0], xy[1]});
    }
    return cmd_prep_style(args, std::cerr);
  }

  JobManifest m;
  if (const int rc = load_manifest(manifest_path, m); rc != kExitOk) return rc;

  if (*preview) return cmd_preview(m, scale, opts, std::cerr);
  if (*render) return cmd_render(m, opts, std::cerr);
  if (*finish) return cmd_finish(m, opts, std::cerr);
  if (*sweep) {
    std::vector<double> v;
    if (!parse_doubles(values, v)) return usage_error("--values expects comma-separated numbers");
    return cmd_sweep(m, axis == "u" ? SweepAxis::u : SweepAxis::iterations, v, opts, std::cerr);
  }
  return kExitUsage;
}
