// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_SIGNALS_HPP_
#define GLITCHSCOPE_SIGNALS_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glitchscope/dataset.hpp"
#include "glitchscope/influence.hpp"

namespace glitchscope {

enum class SignalKind { kSelfInfluence, kMarginalInfluence, kAverageAbsoluteInfluence, kGdClass };

std::string_view ToString(SignalKind kind);  // "SI", "MI", "AAI", "GDclass"
SignalKind ParseSignalKind(std::string_view name);
inline constexpr SignalKind kAllSignals[] = {SignalKind::kSelfInfluence, SignalKind::kMarginalInfluence,
                                             SignalKind::kAverageAbsoluteInfluence, SignalKind::kGdClass};

// Which part of the tensor a signal reads: the cumulative sums or one epoch.
struct EpochScope {
  std::optional<int> epoch;

  static EpochScope Cumulative() { return {}; }
  static EpochScope Epoch(int t) { return {t}; }
  std::string ToString() const;  // "cumulative" or "epoch_<t>"
  static EpochScope Parse(std::string_view text);
  bool operator==(const EpochScope&) const = default;
};

// Per-sample scores (aligned with `ids`) and the ids in descending score order,
// ties broken by ascending id. Higher means more likely glitched.
struct SignalRanking {
  SignalKind signal = SignalKind::kSelfInfluence;
  EpochScope scope;
  std::vector<SampleId> ids;
  std::vector<double> scores;
  std::vector<SampleId> order;
};

// Stable descending order of `ids` by `scores`, ascending id on ties.
std::vector<SampleId> Rank(std::span<const SampleId> ids, std::span<const double> scores);

SignalRanking SelfInfluence(const InfluenceTensor& tensor, EpochScope scope = {});

// Signed sum of each row over the validation columns.
SignalRanking MarginalInfluence(const InfluenceTensor& tensor, EpochScope scope = {});

// Mean absolute value of each row over the validation columns.
SignalRanking AverageAbsoluteInfluence(const InfluenceTensor& tensor, EpochScope scope = {});

// For each class c present in validation, partial_c(i) sums row i over the
// validation columns labelled c; the score is the minimum partial. With
// `condition_on_train_label` the score is instead the partial of train sample
// i's own class (zero when that class is absent from validation).
SignalRanking GdClass(const InfluenceTensor& tensor, std::span<const int> train_labels,
                      std::span<const int> val_labels, EpochScope scope = {},
                      bool condition_on_train_label = false);

// Labels are needed for GD-class only.
SignalRanking ComputeSignal(SignalKind kind, const InfluenceTensor& tensor, EpochScope scope,
                            std::span<const int> train_labels = {}, std::span<const int> val_labels = {},
                            bool condition_on_train_label = false);

// Columns: sample_id,signal,epoch_scope,score,rank (rank 1 = most suspicious),
// rows in rank order.
void WriteRankingsCsv(const std::vector<SignalRanking>& rankings, const std::filesystem::path& path,
                      const std::string& upstream_digest = {});
std::vector<SignalRanking> ReadRankingsCsv(const std::filesystem::path& path,
                                           std::string* upstream_digest = nullptr);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_SIGNALS_HPP_
