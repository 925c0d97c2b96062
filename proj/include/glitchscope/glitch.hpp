// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_GLITCH_HPP_
#define GLITCHSCOPE_GLITCH_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glitchscope/dataset.hpp"

namespace glitchscope {

enum class GlitchType { kClean, kUniformNoise, kClassDependentNoise, kNearCa, kFarCa, kOutlier };

std::string_view ToString(GlitchType type);
GlitchType ParseGlitchType(std::string_view name);

enum class Corruption { kBrightness, kStripe };

std::string_view ToString(Corruption corruption);
Corruption ParseCorruption(std::string_view name);

struct ErrorEntry {
  SampleId sample_id = 0;
  bool is_glitched = false;
  GlitchType glitch_type = GlitchType::kClean;
  std::optional<int> original_label;  // set for label flips only

  bool operator==(const ErrorEntry&) const = default;
};

// Ground truth produced at injection time: one entry per sample of the
// contaminated training set, in the same row order.
struct ErrorTable {
  std::vector<ErrorEntry> entries;

  std::size_t GlitchedCount() const;
  std::vector<SampleId> GlitchedIds() const;
  std::optional<ErrorEntry> Find(SampleId id) const;

  // Checks one entry per row of `data` (matching ids), the glitched/type
  // equivalence, and original_label != observed label for flips.
  void Validate(const Dataset& data) const;
};

// Columns: sample_id,is_glitched,glitch_type,original_label (empty unless a
// flip). An optional "# upstream: <digest>" line names the dataset the table
// annotates.
void WriteErrorTableCsv(const ErrorTable& table, const std::filesystem::path& path,
                        const std::string& upstream_digest = {});
ErrorTable ReadErrorTableCsv(const std::filesystem::path& path, std::string* upstream_digest = nullptr);

struct Contaminated {
  Dataset data;
  ErrorTable errors;
};

// Each label independently flips with probability epsilon; a flipped label is
// uniform over the other k - 1 classes.
Contaminated InjectUniformNoise(const Dataset& train, double epsilon, std::uint64_t seed);

// Only samples of `source_class` may flip, each to `target_class` with
// probability epsilon. Empty optionals pick distinct classes at random.
Contaminated InjectClassDependentNoise(const Dataset& train, double epsilon,
                                       std::optional<int> source_class,
                                       std::optional<int> target_class, std::uint64_t seed);

// Downsamples the victim class so its retained samples make up `target_ratio`
// of the result: retained = round(ratio * n_rest / (1 - ratio)). Retained
// victims are flagged near_ca.
Contaminated InjectNearCa(const Dataset& train, double target_ratio, std::optional<int> victim_class,
                          std::uint64_t seed);

// Appends round(ratio * n / (1 - ratio)) samples drawn without replacement from
// `foreign`'s class `foreign_class`, all relabelled with one class drawn from
// train's label set, with fresh ids above train's maximum id.
Contaminated InjectFarCa(const Dataset& train, const Dataset& foreign, int foreign_class, double ratio,
                         std::uint64_t seed);

// Corrupts round(ratio * n) uniformly chosen samples. Brightness adds
// `magnitude` to every feature; stripe sets a block of round(d / 4) contiguous
// features, at one seeded offset shared by all corrupted rows, to `magnitude`.
Contaminated InjectOutliers(const Dataset& train, double ratio, Corruption corruption, double magnitude,
                            std::uint64_t seed);

struct GlitchSpec {
  GlitchType glitch_type = GlitchType::kUniformNoise;
  double epsilon = 0.1;  // flip probability, or target ratio for the others
  std::optional<int> source_class;
  std::optional<int> target_class;
  std::optional<Corruption> corruption;
  double corruption_magnitude = 5.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Dispatches on spec.glitch_type. Far-CA needs `foreign` (class 0 of it is
// used unless spec.source_class is set).
Contaminated Inject(const Dataset& train, const GlitchSpec& spec, const Dataset* foreign = nullptr);

// Combines the tables of two chained injections: `later` annotates the final
// dataset; a sample already glitched by the earlier injection keeps that entry
// unless the later one glitches it again.
ErrorTable ChainErrorTables(const ErrorTable& earlier, const ErrorTable& later);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_GLITCH_HPP_
