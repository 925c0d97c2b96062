// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_EXPERIMENT_HPP_
#define GLITCHSCOPE_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glitchscope/dataset.hpp"
#include "glitchscope/evaluation.hpp"
#include "glitchscope/glitch.hpp"
#include "glitchscope/influence.hpp"
#include "glitchscope/model.hpp"
#include "glitchscope/signals.hpp"

namespace glitchscope {

enum class SubsampleOrder { kBeforeSplit, kAfterSplit };

struct DataSourceConfig {
  enum class Kind { kBlobs, kCsv } kind = Kind::kBlobs;
  // blobs
  std::size_t n = 200;
  std::size_t d = 2;
  int k = 2;
  double separation = 6.0;
  std::optional<std::uint64_t> seed;  // defaults to the run seed
  // csv
  std::filesystem::path path;
  std::string label_column = "label";
};

// Source of far-cluster anomalies: a generated tight cluster placed `distance`
// beyond the farthest host sample, or a class of a CSV file.
struct ForeignConfig {
  enum class Kind { kCluster, kCsv } kind = Kind::kCluster;
  std::size_t n = 500;
  double distance = 20.0;
  double spread = 0.3;
  std::filesystem::path path;
  std::string label_column = "label";
  int foreign_class = 0;
};

// Declarative description of one experiment (and, through `ratios`/`seeds`,
// of a sweep). Serialized as JSON; see ToJson for the canonical layout.
struct ExperimentConfig {
  std::string name = "experiment";
  DataSourceConfig data;
  double subsample_fraction = 1.0;
  SubsampleOrder subsample_order = SubsampleOrder::kBeforeSplit;
  double train_fraction = 0.8;
  std::vector<GlitchSpec> glitches;  // chained in order by `run`; swept one at a time
  std::optional<ForeignConfig> foreign;
  ModelConfig model;
  InfluenceMode influence_mode = InfluenceMode::kPaper;
  std::vector<SignalKind> signals{std::begin(kAllSignals), std::end(kAllSignals)};
  bool gd_class_condition_on_train_label = false;
  bool per_epoch = true;
  std::uint64_t seed = 0;
  std::vector<double> ratios;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "glitchscope-out";
  bool record_runtime = false;

  // Throws ValidationError; checks every value range and that referenced
  // files exist.
  void Validate() const;
};

ExperimentConfig ParseConfig(const std::string& json_text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);
// Canonical form: every field present, fixed key order, two-space indent,
// trailing newline. Parsing this text and serializing again is byte-stable.
std::string ToJson(const ExperimentConfig& config);

// Stage-level seeds, all derived from the run seed.
struct StageSeeds {
  std::uint64_t data;
  std::uint64_t subsample;
  std::uint64_t split;
  std::uint64_t foreign;
  std::uint64_t model;
  std::uint64_t run;

  std::uint64_t Glitch(std::size_t index) const;
};
StageSeeds SeedsFor(const ExperimentConfig& config, std::uint64_t run_seed);

// One row of the result table.
struct ResultRow {
  std::string dataset;
  std::string model;
  std::string glitch_type;
  double ratio = 0.0;  // injected glitch count / contaminated training size
  std::uint64_t seed = 0;
  std::string signal;
  std::string epoch_scope;
  double f1 = 0.0;
  std::int64_t runtime_ms = 0;
};

// Columns: dataset,model,glitch_type,ratio,seed,signal,epoch_scope,f1,runtime_ms
void WriteResultsCsv(const std::vector<ResultRow>& rows, const std::filesystem::path& path,
                     const std::string& upstream_digest = {});
std::vector<ResultRow> ReadResultsCsv(const std::filesystem::path& path);
std::string ResultsHeader();
std::string FormatResultRow(const ResultRow& row);

// Pipeline stages; the in-memory runner and the file-backed orchestrator both
// go through these.
Dataset IngestSource(const ExperimentConfig& config, const StageSeeds& seeds);
Dataset SubsampleSource(const Dataset& source, const ExperimentConfig& config, const StageSeeds& seeds);
SplitPair SplitSource(const Dataset& subsampled, const ExperimentConfig& config, const StageSeeds& seeds);
std::optional<Dataset> BuildForeign(const ExperimentConfig& config, const Dataset& host, const StageSeeds& seeds);
Contaminated ContaminateTrain(const Dataset& train, const ExperimentConfig& config, const StageSeeds& seeds,
                              const Dataset* foreign);
ModelConfig ModelConfigFor(const ExperimentConfig& config, const StageSeeds& seeds);
std::vector<SignalRanking> ComputeRankings(const InfluenceTensor& tensor, const Dataset& train,
                                           const Dataset& validation, const ExperimentConfig& config);
std::vector<ResultRow> ScoreRankings(const std::vector<SignalRanking>& rankings, const ErrorTable& truth,
                                     const ExperimentConfig& config, std::uint64_t run_seed);

struct ExperimentOutcome {
  SplitPair split;
  Contaminated contaminated;
  CheckpointTrail trail;
  InfluenceTensor tensor;
  std::vector<SignalRanking> rankings;
  std::vector<ResultRow> rows;
};

// All stages in memory for one run seed.
ExperimentOutcome RunExperiment(const ExperimentConfig& config, std::uint64_t run_seed);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_EXPERIMENT_HPP_
