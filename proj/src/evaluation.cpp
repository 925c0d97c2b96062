// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "glitchscope/error.hpp"

namespace glitchscope {
namespace {

std::string GlitchTypeName(const ErrorTable& truth) {
  std::set<std::string_view> types;
  for (const auto& e : truth.entries) {
    if (e.is_glitched) types.insert(ToString(e.glitch_type));
  }
  std::string name;
  for (const auto type : types) {
    if (!name.empty()) name += '+';
    name += type;
  }
  return name;
}

void CheckSameIds(const SignalRanking& ranking, const ErrorTable& truth) {
  std::vector<SampleId> a = ranking.ids;
  std::vector<SampleId> b;
  b.reserve(truth.entries.size());
  for (const auto& e : truth.entries) b.push_back(e.sample_id);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) throw ValidationError("ranking ids do not match the error table ids");
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<std::size_t> index(values.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  std::sort(index.begin(), index.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < index.size();) {
    std::size_t j = i;
    while (j + 1 < index.size() && values[index[j + 1]] == values[index[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[index[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

DetectionResult F1AtKnownRatio(const SignalRanking& ranking, const ErrorTable& truth, std::uint64_t seed) {
  CheckSameIds(ranking, truth);
  const auto glitched = truth.GlitchedIds();
  if (glitched.empty()) throw ValidationError("F1 needs at least one glitched sample");
  const std::unordered_set<SampleId> positive(glitched.begin(), glitched.end());
  const auto k = glitched.size();

  DetectionResult result;
  result.signal = ranking.signal;
  result.glitch_type = GlitchTypeName(truth);
  result.glitch_ratio = static_cast<double>(k) / static_cast<double>(truth.entries.size());
  result.scope = ranking.scope;
  result.seed = seed;
  result.flagged_ids.assign(ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(k));
  const auto hits = std::count_if(result.flagged_ids.begin(), result.flagged_ids.end(),
                                  [&](SampleId id) { return positive.contains(id); });
  result.f1 = static_cast<double>(hits) / static_cast<double>(k);
  return result;
}

double F1AtFraction(const SignalRanking& ranking, const ErrorTable& truth, double fraction) {
  CheckSameIds(ranking, truth);
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("fraction must be in (0, 1]");
  const auto glitched = truth.GlitchedIds();
  if (glitched.empty()) throw ValidationError("F1 needs at least one glitched sample");
  const std::unordered_set<SampleId> positive(glitched.begin(), glitched.end());
  const auto flagged = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ranking.order.size()))));
  const auto hits = std::count_if(ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(flagged),
                                  [&](SampleId id) { return positive.contains(id); });
  const double precision = static_cast<double>(hits) / static_cast<double>(flagged);
  const double recall = static_cast<double>(hits) / static_cast<double>(glitched.size());
  return hits == 0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

EpochDetection PerEpochDetection(const InfluenceTensor& tensor, const ErrorTable& truth, SignalKind signal,
                                 std::span<const int> train_labels, std::span<const int> val_labels,
                                 std::uint64_t seed) {
  EpochDetection detection;
  for (int t = 0; t < tensor.epochs(); ++t) {
    const auto ranking = ComputeSignal(signal, tensor, EpochScope::Epoch(t), train_labels, val_labels);
    detection.per_epoch.push_back(F1AtKnownRatio(ranking, truth, seed));
    if (t == 0 || detection.per_epoch.back().f1 > detection.max_epoch_f1) {
      detection.max_epoch_f1 = detection.per_epoch.back().f1;
      detection.best_epoch = t;
    }
  }
  detection.cumulative =
      F1AtKnownRatio(ComputeSignal(signal, tensor, EpochScope::Cumulative(), train_labels, val_labels), truth, seed);
  return detection;
}

std::vector<LoorRecord> LoorOracle(const Dataset& train, const Dataset& validation, const ModelConfig& config) {
  if (train.size() > kLoorMaxSamples) {
    throw ValidationError("LOOR oracle is limited to " + std::to_string(kLoorMaxSamples) + " training samples, got " +
                          std::to_string(train.size()));
  }
  if (config.architecture != Architecture::kLogistic) throw ValidationError("LOOR oracle needs a logistic model");
  if (train.size() < 2) throw ValidationError("LOOR oracle needs at least 2 training samples");

  ModelConfig full_batch = config;
  full_batch.batch_size = static_cast<int>(train.size());
  const auto baseline = Train(train, full_batch);
  const Network base_net(baseline.shape, baseline.final_parameters);

  std::vector<LoorRecord> records;
  for (std::size_t removed = 0; removed < train.size(); ++removed) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (i != removed) rows.push_back(i);
    }
    const Dataset reduced = train.Select(rows);
    ModelConfig reduced_config = full_batch;
    reduced_config.batch_size = static_cast<int>(reduced.size());
    // The model seed fixes initialization; with full batches the shuffle does
    // not affect the updates.
    const auto retrained = Train(reduced, reduced_config);
    if (retrained.checkpoints.front().parameters != baseline.checkpoints.front().parameters) {
      throw RuntimeFailure("LOOR retraining did not reproduce the baseline initialization");
    }
    const Network net(retrained.shape, retrained.final_parameters);
    for (std::size_t j = 0; j < validation.size(); ++j) {
      const auto x = validation.features.row(static_cast<Eigen::Index>(j)).transpose();
      const int y = validation.labels[j];
      records.push_back({train.sample_ids[removed], validation.sample_ids[j], net.Loss(x, y) - base_net.Loss(x, y)});
    }
    const auto x = train.features.row(static_cast<Eigen::Index>(removed)).transpose();
    const int y = train.labels[removed];
    records.push_back({train.sample_ids[removed], train.sample_ids[removed], net.Loss(x, y) - base_net.Loss(x, y)});
  }
  return records;
}

double SpearmanCorrelation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("Spearman needs two equal-length samples (n >= 2)");
  const auto ra = AverageRanks(a);
  const auto rb = AverageRanks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    va += (ra[i] - mean) * (ra[i] - mean);
    vb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace glitchscope
