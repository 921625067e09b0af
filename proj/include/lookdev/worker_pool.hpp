#pragma once

// Frame-parallel job runner. Jobs are independent: each reads shared inputs
// and writes only its own output paths, so results do not depend on the
// worker count or on scheduling.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lookdev/error.hpp"
#include "lookdev/style_opt.hpp"

namespace lookdev {

struct FrameJob {
  int frame = 0;
  std::string input;
  std::filesystem::path output;
  TransferParams params;  // resolved: effective u, per-frame seed
  int width = 0;          // working resolution
  int height = 0;
  double u_full = 0.0;    // u before any preview scaling
};

enum class JobStatus { ok, failed };

struct FrameResult {
  int frame = 0;
  JobStatus status = JobStatus::ok;
  std::string message;
  double wall_seconds = 0.0;
  std::string output;
  double content_loss = 0.0;
  double style_loss = 0.0;
  double total_loss = 0.0;
  std::vector<std::pair<std::string, double>> metrics;  // command-specific extras
};

/// One entry per job, ordered by frame index.
struct RunReport {
  std::vector<FrameResult> frames;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(), [](const FrameResult& r) {
      return r.status == JobStatus::failed;
    }));
  }
  bool ok() const { return failures() == 0; }
};

/// Runs fn(job) for every job with at most `workers` jobs in flight. fn fills
/// the loss and output fields; the pool stamps frame, timing and status, and
/// turns an exception into a failed entry.
template <typename Job, typename Fn>
RunReport run_pool(std::span<const Job> jobs, int workers, Fn&& fn) {
  if (workers < 1) throw Error(ErrorCode::invalid_argument, "run_pool: workers must be >= 1");
  std::vector<FrameResult> results(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
      const auto start = std::chrono::steady_clock::now();
      FrameResult r;
      try {
        r = fn(jobs[i]);
        r.status = JobStatus::ok;
      } catch (const std::exception& e) {
        r = FrameResult{};
        r.status = JobStatus::failed;
        r.message = e.what();
      }
      r.frame = jobs[i].frame;
      r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      results[i] = std::move(r);
    }
  };

  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(workers), jobs.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(n);
    for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  }

  RunReport report{std::move(results)};
  std::stable_sort(report.frames.begin(), report.frames.end(),
                   [](const FrameResult& a, const FrameResult& b) { return a.frame < b.frame; });
  return report;
}

template <typename Job, typename Fn>
RunReport run_pool(const std::vector<Job>& jobs, int workers, Fn&& fn) {
  return run_pool(std::span<const Job>(jobs), workers, std::forward<Fn>(fn));
}

}  // namespace lookdev
