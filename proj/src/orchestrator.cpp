// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/orchestrator.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include "glitchscope/digest.hpp"
#include "glitchscope/error.hpp"
#include "json.hpp"

namespace glitchscope {
namespace {

namespace fs = std::filesystem;
using OrderedJson = nlohmann::ordered_json;

const std::map<std::string, std::vector<std::string>>& StageSections() {
  static const std::map<std::string, std::vector<std::string>> sections = {
      {"ingest", {"data", "seed"}},   {"subsample", {"subsample"}},   {"split", {"split"}},
      {"inject", {"glitches", "foreign"}}, {"train", {"model"}},     {"influence", {"influence"}},
      {"signals", {"signals"}},       {"evaluate", {"output"}},
  };
  return sections;
}

const std::map<std::string, std::vector<std::string>>& StageArtifacts() {
  static const std::map<std::string, std::vector<std::string>> artifacts = {
      {"ingest", {"source.csv"}},
      {"subsample", {"subsampled.csv"}},
      {"split", {"train.csv", "validation.csv"}},
      {"inject", {"train_glitched.csv", "errors.csv"}},
      {"train", {"trail.bin"}},
      {"influence", {"influence.bin", "influence.csv"}},
      {"signals", {"rankings.csv"}},
      {"evaluate", {"results.csv"}},
  };
  return artifacts;
}

struct StageRecord {
  std::string key;
  std::map<std::string, std::string> hashes;
};

fs::path RecordPath(const fs::path& out, const std::string& stage) { return out / ".stages" / (stage + ".json"); }

bool StageIsCurrent(const fs::path& out, const std::string& stage, const std::string& key) {
  std::ifstream in(RecordPath(out, stage));
  if (!in) return false;
  nlohmann::json record;
  try {
    in >> record;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  if (record.value("key", std::string()) != key) return false;
  const auto artifacts = record.find("artifacts");
  if (artifacts == record.end() || !artifacts->is_object() || artifacts->empty()) return false;
  for (const auto& [name, hash] : artifacts->items()) {
    const auto path = out / name;
    if (!fs::exists(path) || FileSha256Hex(path) != hash.get<std::string>()) return false;
  }
  return true;
}

void WriteRecord(const fs::path& out, const std::string& stage, const std::string& key,
                 const std::vector<std::string>& artifacts) {
  OrderedJson record;
  record["stage"] = stage;
  record["key"] = key;
  OrderedJson hashes;
  for (const auto& name : artifacts) hashes[name] = FileSha256Hex(out / name);
  record["artifacts"] = hashes;
  fs::create_directories(out / ".stages");
  std::ofstream file(RecordPath(out, stage), std::ios::binary);
  file << record.dump(2) << '\n';
  if (!file) throw RuntimeFailure("cannot write stage record for " + stage);
}

}  // namespace

const std::vector<std::string>& PipelineStages() {
  static const std::vector<std::string> stages = {"ingest", "subsample", "split", "inject",
                                                  "train",  "influence", "signals", "evaluate"};
  return stages;
}

std::vector<ResultRow> EvaluateArtifacts(const fs::path& rankings_path, const fs::path& errors_path,
                                         const std::string& dataset_name, const std::string& model_name,
                                         std::uint64_t seed, double ratio) {
  std::string rankings_upstream;
  std::string errors_upstream;
  const auto rankings = ReadRankingsCsv(rankings_path, &rankings_upstream);
  const auto truth = ReadErrorTableCsv(errors_path, &errors_upstream);
  if (rankings_upstream.empty() || errors_upstream.empty() || rankings_upstream != errors_upstream) {
    throw ValidationError("artifact chain mismatch: rankings were computed on dataset '" + rankings_upstream +
                          "' but the error table annotates '" + errors_upstream + "'");
  }
  std::vector<ResultRow> rows;
  for (const auto& ranking : rankings) {
    const auto detection = F1AtKnownRatio(ranking, truth, seed);
    ResultRow row;
    row.dataset = dataset_name;
    row.model = model_name;
    row.glitch_type = detection.glitch_type;
    row.ratio = ratio > 0.0 ? ratio : detection.glitch_ratio;
    row.seed = seed;
    row.signal = std::string(ToString(ranking.signal));
    row.epoch_scope = ranking.scope.ToString();
    row.f1 = detection.f1;
    rows.push_back(row);
  }
  return rows;
}

PipelineReport RunPipeline(const ExperimentConfig& config, const std::function<void(const StageReport&)>& on_stage) {
  config.Validate();
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  const auto canonical = OrderedJson::parse(ToJson(config));
  const auto seeds = SeedsFor(config, config.seed);
  const auto start = std::chrono::steady_clock::now();

  PipelineReport report;
  std::string upstream_key = Sha256Hex("glitchscope.pipeline.v1");
  std::string failing_stage;

  // Each stage reads what it needs from disk so that a skipped upstream stage
  // leaves nothing to reconstruct in memory.
  const std::map<std::string, std::function<void()>> runners = {
      {"ingest",
       [&] {
         const auto source = IngestSource(config, seeds);
         WriteDatasetCsv(source, out / "source.csv");
       }},
      {"subsample",
       [&] {
         const auto source = ReadDatasetCsv(out / "source.csv");
         WriteDatasetCsv(SubsampleSource(source, config, seeds), out / "subsampled.csv", DatasetDigest(source));
       }},
      {"split",
       [&] {
         const auto subsampled = ReadDatasetCsv(out / "subsampled.csv");
         const auto split = SplitSource(subsampled, config, seeds);
         const auto digest = DatasetDigest(subsampled);
         WriteDatasetCsv(split.train, out / "train.csv", digest);
         WriteDatasetCsv(split.validation, out / "validation.csv", digest);
       }},
      {"inject",
       [&] {
         const auto train = ReadDatasetCsv(out / "train.csv");
         const auto foreign = BuildForeign(config, train, seeds);
         const auto contaminated = ContaminateTrain(train, config, seeds, foreign ? &*foreign : nullptr);
         contaminated.errors.Validate(contaminated.data);
         WriteDatasetCsv(contaminated.data, out / "train_glitched.csv", DatasetDigest(train));
         WriteErrorTableCsv(contaminated.errors, out / "errors.csv", DatasetDigest(contaminated.data));
       }},
      {"train",
       [&] {
         const auto train = ReadDatasetCsv(out / "train_glitched.csv");
         WriteTrail(Train(train, ModelConfigFor(config, seeds)), out / "trail.bin");
       }},
      {"influence",
       [&] {
         const auto train = ReadDatasetCsv(out / "train_glitched.csv");
         const auto validation = ReadDatasetCsv(out / "validation.csv");
         const auto trail = ReadTrail(out / "trail.bin");
         if (trail.train_digest != DatasetDigest(train)) {
           throw ValidationError("artifact chain mismatch: trail.bin was not trained on train_glitched.csv");
         }
         const auto tensor = TracIn(trail, train, validation, config.influence_mode);
         WriteInfluenceTensor(tensor, out / "influence.bin");
         WriteInfluenceCsv(tensor, out / "influence.csv");
       }},
      {"signals",
       [&] {
         const auto train = ReadDatasetCsv(out / "train_glitched.csv");
         const auto validation = ReadDatasetCsv(out / "validation.csv");
         const auto tensor = ReadInfluenceTensor(out / "influence.bin");
         if (tensor.train_digest != DatasetDigest(train) || tensor.validation_digest != DatasetDigest(validation)) {
           throw ValidationError("artifact chain mismatch: influence.bin does not belong to these datasets");
         }
         WriteRankingsCsv(ComputeRankings(tensor, train, validation, config), out / "rankings.csv", tensor.train_digest);
       }},
      {"evaluate",
       [&] {
         const double ratio = config.glitches.size() == 1 ? config.glitches.front().epsilon : 0.0;
         const std::string dataset_name = config.data.kind == DataSourceConfig::Kind::kCsv
                                              ? config.data.path.stem().string()
                                              : std::string("blobs");
         auto rows = EvaluateArtifacts(out / "rankings.csv", out / "errors.csv", dataset_name,
                                       std::string(ToString(config.model.architecture)), config.seed, ratio);
         if (config.record_runtime) {
           const auto elapsed =
               std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
           for (auto& row : rows) row.runtime_ms = elapsed.count();
         }
         std::string upstream;
         ReadErrorTableCsv(out / "errors.csv", &upstream);
         WriteResultsCsv(rows, out / "results.csv", upstream);
       }},
  };

  for (const auto& stage : PipelineStages()) {
    std::string material = upstream_key + "\n" + stage + "\n";
    for (const auto& section : StageSections().at(stage)) material += canonical.at(section).dump() + "\n";
    const auto key = Sha256Hex(material);
    upstream_key = key;
    StageReport stage_report{stage, false, StageArtifacts().at(stage)};
    if (StageIsCurrent(out, stage, key)) {
      stage_report.skipped = true;
    } else {
      fs::remove(RecordPath(out, stage));
      try {
        runners.at(stage)();
      } catch (const ValidationError& e) {
        throw ValidationError("stage '" + stage + "': " + e.what());
      } catch (const RuntimeFailure& e) {
        throw RuntimeFailure("stage '" + stage + "': " + e.what());
      } catch (const std::exception& e) {
        throw RuntimeFailure("stage '" + stage + "': " + e.what());
      }
      WriteRecord(out, stage, key, stage_report.artifacts);
    }
    if (on_stage) on_stage(stage_report);
    report.stages.push_back(std::move(stage_report));
  }
  report.rows = ReadResultsCsv(out / "results.csv");
  return report;
}

}  // namespace glitchscope
