// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/glitch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "glitchscope/csv.hpp"
#include "glitchscope/error.hpp"
#include "glitchscope/rng.hpp"

namespace glitchscope {
namespace {

ErrorTable CleanTable(const Dataset& data) {
  ErrorTable table;
  table.entries.reserve(data.size());
  for (const auto id : data.sample_ids) table.entries.push_back({id, false, GlitchType::kClean, std::nullopt});
  return table;
}

void CheckEpsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ValidationError("epsilon must be in [0, 1), got " + std::to_string(epsilon));
  }
}

void CheckRatio(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("glitch ratio must be in (0, 1), got " + std::to_string(ratio));
}

void CheckClass(int c, const Dataset& data, const char* what) {
  if (c < 0 || c >= data.class_count) {
    throw ValidationError(std::string(what) + " class " + std::to_string(c) + " outside [0, " +
                          std::to_string(data.class_count) + ")");
  }
}

std::size_t Round(double value) { return static_cast<std::size_t>(std::llround(value)); }

}  // namespace

std::string_view ToString(GlitchType type) {
  switch (type) {
    case GlitchType::kClean: return "clean";
    case GlitchType::kUniformNoise: return "uniform_noise";
    case GlitchType::kClassDependentNoise: return "class_dependent_noise";
    case GlitchType::kNearCa: return "near_ca";
    case GlitchType::kFarCa: return "far_ca";
    case GlitchType::kOutlier: return "outlier";
  }
  return "clean";
}

GlitchType ParseGlitchType(std::string_view name) {
  for (auto type : {GlitchType::kClean, GlitchType::kUniformNoise, GlitchType::kClassDependentNoise,
                    GlitchType::kNearCa, GlitchType::kFarCa, GlitchType::kOutlier}) {
    if (ToString(type) == name) return type;
  }
  throw ValidationError("unknown glitch type '" + std::string(name) + "'");
}

std::string_view ToString(Corruption corruption) {
  return corruption == Corruption::kBrightness ? "brightness" : "stripe";
}

Corruption ParseCorruption(std::string_view name) {
  if (name == "brightness") return Corruption::kBrightness;
  if (name == "stripe") return Corruption::kStripe;
  throw ValidationError("unknown corruption '" + std::string(name) + "'");
}

std::size_t ErrorTable::GlitchedCount() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const ErrorEntry& e) { return e.is_glitched; }));
}

std::vector<SampleId> ErrorTable::GlitchedIds() const {
  std::vector<SampleId> ids;
  for (const auto& e : entries) {
    if (e.is_glitched) ids.push_back(e.sample_id);
  }
  return ids;
}

std::optional<ErrorEntry> ErrorTable::Find(SampleId id) const {
  for (const auto& e : entries) {
    if (e.sample_id == id) return e;
  }
  return std::nullopt;
}

void ErrorTable::Validate(const Dataset& data) const {
  if (entries.size() != data.size()) {
    throw ValidationError("error table has " + std::to_string(entries.size()) + " entries for " +
                          std::to_string(data.size()) + " samples");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.sample_id != data.sample_ids[i]) throw ValidationError("error table ids do not match dataset rows");
    if (e.is_glitched != (e.glitch_type != GlitchType::kClean)) {
      throw ValidationError("error table entry " + std::to_string(e.sample_id) + ": flag and type disagree");
    }
    if (e.original_label && *e.original_label == data.labels[i]) {
      throw ValidationError("error table entry " + std::to_string(e.sample_id) +
                            ": original label equals observed label");
    }
  }
}

void WriteErrorTableCsv(const ErrorTable& table, const std::filesystem::path& path,
                        const std::string& upstream_digest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  if (!upstream_digest.empty()) out << "# upstream: " << upstream_digest << '\n';
  out << "sample_id,is_glitched,glitch_type,original_label\n";
  for (const auto& e : table.entries) {
    out << e.sample_id << ',' << (e.is_glitched ? 1 : 0) << ',' << ToString(e.glitch_type) << ',';
    if (e.original_label) out << *e.original_label;
    out << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

ErrorTable ReadErrorTableCsv(const std::filesystem::path& path, std::string* upstream_digest) {
  const auto table = csv::Read(path);
  const int id = table.ColumnIndex("sample_id");
  const int flag = table.ColumnIndex("is_glitched");
  const int type = table.ColumnIndex("glitch_type");
  const int original = table.ColumnIndex("original_label");
  if (id < 0 || flag < 0 || type < 0 || original < 0) {
    throw ValidationError(path.string() + " is not an error table");
  }
  ErrorTable out;
  for (const auto& row : table.rows) {
    ErrorEntry e;
    e.sample_id = csv::ParseInt(row[static_cast<std::size_t>(id)], "sample_id");
    e.is_glitched = csv::ParseInt(row[static_cast<std::size_t>(flag)], "is_glitched") != 0;
    e.glitch_type = ParseGlitchType(row[static_cast<std::size_t>(type)]);
    const auto& label = row[static_cast<std::size_t>(original)];
    if (!label.empty()) e.original_label = static_cast<int>(csv::ParseInt(label, "original_label"));
    out.entries.push_back(e);
  }
  if (upstream_digest) {
    const auto it = table.meta.find("upstream");
    *upstream_digest = it == table.meta.end() ? std::string() : it->second;
  }
  return out;
}

Contaminated InjectUniformNoise(const Dataset& train, double epsilon, std::uint64_t seed) {
  train.Validate();
  CheckEpsilon(epsilon);
  Rng rng(Rng::Derive(seed, "uniform_noise"));
  Contaminated result{train, CleanTable(train)};
  const auto others = static_cast<std::uint64_t>(train.class_count - 1);
  for (std::size_t i = 0; i < train.size(); ++i) {
    // Both draws are taken for every sample so the flip set for a given seed
    // does not depend on earlier outcomes.
    const double u = rng.uniform();
    const auto r = static_cast<int>(rng.below(others));
    if (u >= epsilon) continue;
    const int original = train.labels[i];
    result.data.labels[i] = r < original ? r : r + 1;
    result.errors.entries[i] = {train.sample_ids[i], true, GlitchType::kUniformNoise, original};
  }
  return result;
}

Contaminated InjectClassDependentNoise(const Dataset& train, double epsilon, std::optional<int> source_class,
                                       std::optional<int> target_class, std::uint64_t seed) {
  train.Validate();
  CheckEpsilon(epsilon);
  Rng rng(Rng::Derive(seed, "class_dependent_noise"));
  const auto k = static_cast<std::uint64_t>(train.class_count);
  int source = source_class ? *source_class : static_cast<int>(rng.below(k));
  int target = 0;
  if (target_class) {
    target = *target_class;
  } else {
    const auto r = static_cast<int>(rng.below(k - 1));
    target = r < source ? r : r + 1;
  }
  CheckClass(source, train, "source");
  CheckClass(target, train, "target");
  if (source == target) throw ValidationError("source and target class must differ");
  if (train.ClassCounts()[static_cast<std::size_t>(source)] == 0) {
    throw ValidationError("source class " + std::to_string(source) + " is empty");
  }
  Contaminated result{train, CleanTable(train)};
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.labels[i] != source) continue;
    if (rng.uniform() >= epsilon) continue;
    result.data.labels[i] = target;
    result.errors.entries[i] = {train.sample_ids[i], true, GlitchType::kClassDependentNoise, source};
  }
  return result;
}

Contaminated InjectNearCa(const Dataset& train, double target_ratio, std::optional<int> victim_class,
                          std::uint64_t seed) {
  train.Validate();
  CheckRatio(target_ratio);
  Rng rng(Rng::Derive(seed, "near_ca"));
  const int victim = victim_class ? *victim_class : static_cast<int>(rng.below(static_cast<std::uint64_t>(train.class_count)));
  CheckClass(victim, train, "victim");
  const auto victim_size = train.ClassCounts()[static_cast<std::size_t>(victim)];
  const auto rest = train.size() - victim_size;
  const auto retained = Round(target_ratio * static_cast<double>(rest) / (1.0 - target_ratio));
  if (retained < 1) throw ValidationError("near_ca ratio retains no victim samples");
  if (retained >= victim_size) {
    throw ValidationError("victim class " + std::to_string(victim) + " is already at or below ratio " +
                          std::to_string(target_ratio));
  }
  std::vector<std::size_t> victims;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.labels[i] == victim) victims.push_back(i);
  }
  rng.shuffle(std::span<std::size_t>(victims));
  std::vector<bool> keep(train.size(), true);
  for (std::size_t v = retained; v < victims.size(); ++v) keep[victims[v]] = false;

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (keep[i]) rows.push_back(i);
  }
  Contaminated result{train.Select(rows), {}};
  result.errors = CleanTable(result.data);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (result.data.labels[r] == victim) result.errors.entries[r] = {result.data.sample_ids[r], true, GlitchType::kNearCa, std::nullopt};
  }
  return result;
}

Contaminated InjectFarCa(const Dataset& train, const Dataset& foreign, int foreign_class, double ratio,
                         std::uint64_t seed) {
  train.Validate();
  CheckRatio(ratio);
  if (foreign.dims() != train.dims()) {
    throw ValidationError("far_ca dimension mismatch: train has " + std::to_string(train.dims()) +
                          " features, foreign has " + std::to_string(foreign.dims()));
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < foreign.size(); ++i) {
    if (foreign.labels[i] == foreign_class) pool.push_back(i);
  }
  if (pool.empty()) throw ValidationError("foreign class " + std::to_string(foreign_class) + " is empty");
  const auto count = Round(ratio * static_cast<double>(train.size()) / (1.0 - ratio));
  if (count < 1) throw ValidationError("far_ca ratio adds no samples");
  if (count > pool.size()) {
    throw ValidationError("far_ca needs " + std::to_string(count) + " foreign samples, class has " +
                          std::to_string(pool.size()));
  }
  Rng rng(Rng::Derive(seed, "far_ca"));
  rng.shuffle(std::span<std::size_t>(pool));
  const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(train.class_count)));
  SampleId next_id = *std::max_element(train.sample_ids.begin(), train.sample_ids.end()) + 1;

  Contaminated result{train, CleanTable(train)};
  const auto n = static_cast<Eigen::Index>(train.size());
  result.data.features.conservativeResize(n + static_cast<Eigen::Index>(count), Eigen::NoChange);
  for (std::size_t a = 0; a < count; ++a) {
    result.data.features.row(n + static_cast<Eigen::Index>(a)) = foreign.features.row(static_cast<Eigen::Index>(pool[a]));
    result.data.labels.push_back(label);
    result.data.sample_ids.push_back(next_id);
    result.errors.entries.push_back({next_id, true, GlitchType::kFarCa, std::nullopt});
    ++next_id;
  }
  return result;
}

Contaminated InjectOutliers(const Dataset& train, double ratio, Corruption corruption, double magnitude,
                            std::uint64_t seed) {
  train.Validate();
  CheckRatio(ratio);
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) throw ValidationError("outlier magnitude must be > 0");
  const auto d = train.dims();
  if (corruption == Corruption::kStripe && d < 4) throw ValidationError("stripe corruption needs d >= 4");
  const auto count = Round(ratio * static_cast<double>(train.size()));
  if (count < 1) throw ValidationError("outlier ratio corrupts no samples");

  Rng rng(Rng::Derive(seed, "outliers"));
  std::vector<std::size_t> rows(train.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(rows));
  rows.resize(count);
  std::sort(rows.begin(), rows.end());

  const auto width = static_cast<Eigen::Index>(Round(static_cast<double>(d) / 4.0));
  const auto start = static_cast<Eigen::Index>(rng.below(d - static_cast<std::size_t>(width) + 1));

  Contaminated result{train, CleanTable(train)};
  for (const auto r : rows) {
    auto row = result.data.features.row(static_cast<Eigen::Index>(r));
    if (corruption == Corruption::kBrightness) {
      row.array() += magnitude;
    } else {
      row.segment(start, width).setConstant(magnitude);
    }
    result.errors.entries[r] = {train.sample_ids[r], true, GlitchType::kOutlier, std::nullopt};
  }
  return result;
}

void GlitchSpec::Validate() const {
  if (glitch_type == GlitchType::kClean) throw ValidationError("glitch spec needs a glitch type");
  if (glitch_type == GlitchType::kUniformNoise || glitch_type == GlitchType::kClassDependentNoise) {
    CheckEpsilon(epsilon);
  } else {
    CheckRatio(epsilon);
  }
  if (source_class && target_class && *source_class == *target_class) {
    throw ValidationError("source and target class must differ");
  }
  if (glitch_type == GlitchType::kOutlier && !(corruption_magnitude > 0.0)) {
    throw ValidationError("outlier magnitude must be > 0");
  }
}

Contaminated Inject(const Dataset& train, const GlitchSpec& spec, const Dataset* foreign) {
  spec.Validate();
  switch (spec.glitch_type) {
    case GlitchType::kUniformNoise:
      return InjectUniformNoise(train, spec.epsilon, spec.seed);
    case GlitchType::kClassDependentNoise:
      return InjectClassDependentNoise(train, spec.epsilon, spec.source_class, spec.target_class, spec.seed);
    case GlitchType::kNearCa:
      return InjectNearCa(train, spec.epsilon, spec.source_class, spec.seed);
    case GlitchType::kFarCa:
      if (foreign == nullptr) throw ValidationError("far_ca needs a foreign dataset");
      return InjectFarCa(train, *foreign, spec.source_class.value_or(0), spec.epsilon, spec.seed);
    case GlitchType::kOutlier:
      return InjectOutliers(train, spec.epsilon, spec.corruption.value_or(Corruption::kBrightness),
                            spec.corruption_magnitude, spec.seed);
    case GlitchType::kClean:
      break;
  }
  throw ValidationError("glitch spec needs a glitch type");
}

ErrorTable ChainErrorTables(const ErrorTable& earlier, const ErrorTable& later) {
  std::unordered_map<SampleId, const ErrorEntry*> previous;
  for (const auto& e : earlier.entries) previous.emplace(e.sample_id, &e);
  ErrorTable out = later;
  for (auto& e : out.entries) {
    if (e.is_glitched) continue;
    const auto it = previous.find(e.sample_id);
    if (it != previous.end() && it->second->is_glitched) e = *it->second;
  }
  return out;
}

}  // namespace glitchscope
