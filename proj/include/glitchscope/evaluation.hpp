// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_EVALUATION_HPP_
#define GLITCHSCOPE_EVALUATION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "glitchscope/dataset.hpp"
#include "glitchscope/glitch.hpp"
#include "glitchscope/influence.hpp"
#include "glitchscope/model.hpp"
#include "glitchscope/signals.hpp"

namespace glitchscope {

struct DetectionResult {
  SignalKind signal = SignalKind::kSelfInfluence;
  std::string glitch_type;  // type of the glitched entries, "+"-joined when mixed
  double glitch_ratio = 0.0;
  EpochScope scope;
  double f1 = 0.0;
  std::vector<SampleId> flagged_ids;
  std::uint64_t seed = 0;
};

// Known-ratio protocol: with k glitched samples in `truth`, the top k of the
// ranking are flagged, so precision = recall = F1 = overlap / k. Throws
// ValidationError when the ids differ or nothing is glitched.
DetectionResult F1AtKnownRatio(const SignalRanking& ranking, const ErrorTable& truth, std::uint64_t seed = 0);

// Exploratory alternative: flags the top `fraction` of the ranking and returns
// the ordinary F1 against `truth`. Not part of the known-ratio protocol.
double F1AtFraction(const SignalRanking& ranking, const ErrorTable& truth, double fraction);

struct EpochDetection {
  std::vector<DetectionResult> per_epoch;
  DetectionResult cumulative;
  int best_epoch = 0;
  double max_epoch_f1 = 0.0;
};

// Re-scores `signal` on each epoch slice alone and on the cumulative tensor.
EpochDetection PerEpochDetection(const InfluenceTensor& tensor, const ErrorTable& truth, SignalKind signal,
                                 std::span<const int> train_labels = {}, std::span<const int> val_labels = {},
                                 std::uint64_t seed = 0);

struct LoorRecord {
  SampleId removed_id = 0;
  SampleId probe_id = 0;
  double loss_delta = 0.0;  // probe loss after retraining without removed_id, minus baseline
};

// Leave-one-out retraining ground truth for tiny convex problems. One baseline
// run plus one retraining per training sample, every run full batch from the
// same initialization. Probes are the validation samples plus the removed
// sample itself (probe_id == removed_id). Requires n <= 64 and a logistic
// model.
std::vector<LoorRecord> LoorOracle(const Dataset& train, const Dataset& validation, const ModelConfig& config);

inline constexpr std::size_t kLoorMaxSamples = 64;

// Spearman rank correlation with average ranks for ties.
double SpearmanCorrelation(std::span<const double> a, std::span<const double> b);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_EVALUATION_HPP_
