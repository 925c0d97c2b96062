// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_ORCHESTRATOR_HPP_
#define GLITCHSCOPE_ORCHESTRATOR_HPP_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "glitchscope/experiment.hpp"

namespace glitchscope {

struct StageReport {
  std::string name;
  bool skipped = false;
  std::vector<std::string> artifacts;  // file names relative to the output directory
};

struct PipelineReport {
  std::vector<StageReport> stages;
  std::vector<ResultRow> rows;
};

// Stage names in execution order.
const std::vector<std::string>& PipelineStages();

// Runs ingest -> subsample -> split -> inject -> train -> influence -> signals
// -> evaluate for `config.seed`, every stage reading its inputs from and
// writing its artifacts to `config.output_dir`. A stage whose key (hash of its
// config sections chained with the upstream key) and artifact hashes match the
// record in `.stages/` is skipped. Errors are rethrown with the stage name
// prefixed; artifacts written so far stay on disk.
PipelineReport RunPipeline(const ExperimentConfig& config,
                           const std::function<void(const StageReport&)>& on_stage = {});

// Scores a rankings file against an error table. Both must carry the same
// upstream dataset digest, otherwise ValidationError.
std::vector<ResultRow> EvaluateArtifacts(const std::filesystem::path& rankings_path,
                                         const std::filesystem::path& errors_path, const std::string& dataset_name,
                                         const std::string& model_name, std::uint64_t seed, double ratio);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_ORCHESTRATOR_HPP_
