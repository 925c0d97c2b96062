// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/sweep.hpp"

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "glitchscope/csv.hpp"
#include "glitchscope/error.hpp"

namespace glitchscope {

int WorkerCountFromEnv() {
  const char* value = std::getenv("GLITCHSCOPE_WORKERS");
  if (value == nullptr || *value == '\0') return 1;
  const std::string_view text(value);
  int parsed = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed);
  if (ec != std::errc() || end != text.data() + text.size() || parsed < 1) {
    throw ValidationError("GLITCHSCOPE_WORKERS must be a positive integer, got '" + std::string(text) + "'");
  }
  return std::min(parsed, 256);
}

SweepResult RatioSweep(const ExperimentConfig& config, std::span<const double> ratios,
                       std::span<const std::uint64_t> seeds, const std::function<void(const ResultRow&)>& sink,
                       int workers) {
  if (ratios.empty() || seeds.empty()) throw ValidationError("sweep needs at least one ratio and one seed");
  config.Validate();

  struct Job {
    ExperimentConfig config;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < config.glitches.size(); ++g) {
    for (const double ratio : ratios) {
      for (const auto seed : seeds) {
        ExperimentConfig single = config;
        single.glitches = {config.glitches[g]};
        single.glitches.front().epsilon = ratio;
        single.per_epoch = false;
        single.Validate();
        jobs.push_back({std::move(single), seed});
      }
    }
  }

  std::vector<std::optional<std::vector<ResultRow>>> done(jobs.size());
  std::exception_ptr failure;
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::size_t emitted = 0;
  SweepResult result;

  // Single serialized writer: flushes finished jobs in job order.
  auto flush = [&]() {
    while (emitted < jobs.size() && done[emitted]) {
      for (const auto& row : *done[emitted]) {
        if (sink) sink(row);
        result.rows.push_back(row);
      }
      ++emitted;
    }
  };
  auto work = [&]() {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= jobs.size()) return;
      {
        std::lock_guard lock(mutex);
        if (failure) return;
      }
      try {
        auto rows = RunExperiment(jobs[index].config, jobs[index].seed).rows;
        std::lock_guard lock(mutex);
        done[index] = std::move(rows);
        flush();
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::map<std::tuple<std::string, double, std::string>, std::pair<double, std::size_t>> sums;
  std::vector<std::tuple<std::string, double, std::string>> first_seen;
  for (const auto& row : result.rows) {
    const auto key = std::make_tuple(row.glitch_type, row.ratio, row.signal);
    auto [it, inserted] = sums.try_emplace(key, 0.0, 0);
    if (inserted) first_seen.push_back(key);
    it->second.first += row.f1;
    ++it->second.second;
  }
  for (const auto& key : first_seen) {
    const auto& [total, count] = sums[key];
    result.cells.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), total / static_cast<double>(count), count});
  }
  return result;
}

void WritePlotData(const std::vector<SweepCell>& cells, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << "glitch_type,ratio,signal,mean_f1,runs\n";
  for (const auto& cell : cells) {
    out << cell.glitch_type << ',' << csv::FormatDouble(cell.ratio) << ',' << cell.signal << ','
        << csv::FormatDouble(cell.mean_f1) << ',' << cell.runs << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

}  // namespace glitchscope
