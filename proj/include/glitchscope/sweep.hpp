// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_SWEEP_HPP_
#define GLITCHSCOPE_SWEEP_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "glitchscope/experiment.hpp"

namespace glitchscope {

// Mean F1 of one (glitch type, ratio, signal) cell over the sweep seeds.
struct SweepCell {
  std::string glitch_type;
  double ratio = 0.0;
  std::string signal;
  double mean_f1 = 0.0;
  std::size_t runs = 0;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SweepCell> cells;
};

// Worker count from GLITCHSCOPE_WORKERS (default 1).
int WorkerCountFromEnv();

// Runs the full pipeline for every (glitch spec, ratio, seed), one glitch spec
// at a time with its epsilon replaced by the ratio, and scores the cumulative
// signals. Experiments fan out to `workers` threads; rows reach `sink` in the
// fixed (glitch, ratio, seed) order as soon as their predecessors are done, so
// the output does not depend on the worker count.
SweepResult RatioSweep(const ExperimentConfig& config, std::span<const double> ratios,
                       std::span<const std::uint64_t> seeds,
                       const std::function<void(const ResultRow&)>& sink = {}, int workers = 1);

// Long-format plot data: glitch_type,ratio,signal,mean_f1,runs.
void WritePlotData(const std::vector<SweepCell>& cells, const std::filesystem::path& path);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_SWEEP_HPP_
