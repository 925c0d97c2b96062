// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "glitchscope/csv.hpp"
#include "glitchscope/digest.hpp"
#include "glitchscope/error.hpp"
#include "glitchscope/rng.hpp"

namespace glitchscope {
namespace {

constexpr const char* kIdColumn = "__sample_id__";
constexpr const char* kLabelColumn = "__label__";

std::vector<std::vector<std::size_t>> RowsByClass(const Dataset& data) {
  std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(data.class_count));
  for (std::size_t i = 0; i < data.size(); ++i) {
    rows[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  return rows;
}

std::size_t RoundCount(double fraction, std::size_t size) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(size)));
}

}  // namespace

void Dataset::Validate() const {
  if (class_count < 2) throw ValidationError("dataset needs at least 2 classes");
  const auto n = labels.size();
  if (static_cast<std::size_t>(features.rows()) != n || sample_ids.size() != n) {
    throw ValidationError("dataset shape mismatch: features/labels/ids disagree on row count");
  }
  for (const int label : labels) {
    if (label < 0 || label >= class_count) {
      throw ValidationError("label " + std::to_string(label) + " outside [0, " +
                            std::to_string(class_count) + ")");
    }
  }
  std::unordered_set<SampleId> seen;
  seen.reserve(n);
  for (const SampleId id : sample_ids) {
    if (id < 0) throw ValidationError("negative sample id " + std::to_string(id));
    if (!seen.insert(id).second) throw ValidationError("duplicate sample id " + std::to_string(id));
  }
  if (!features.allFinite()) throw ValidationError("dataset contains non-finite feature values");
}

std::vector<std::size_t> Dataset::ClassCounts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(class_count), 0);
  for (const int label : labels) ++counts[static_cast<std::size_t>(label)];
  return counts;
}

Dataset Dataset::Select(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.class_count = class_count;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.sample_ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(rows[r]));
    out.labels.push_back(labels[rows[r]]);
    out.sample_ids.push_back(sample_ids[rows[r]]);
  }
  return out;
}

void Standardize(FeatureMatrix& features) {
  const auto n = features.rows();
  if (n == 0) return;
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    auto column = features.col(c);
    const double mean = column.sum() / static_cast<double>(n);
    column.array() -= mean;
    const double variance = column.squaredNorm() / static_cast<double>(n);
    const double stddev = std::sqrt(variance);
    if (stddev > 0.0) column /= stddev;
  }
}

Dataset LoadCsv(const std::filesystem::path& path, const std::string& label_column) {
  if (!std::filesystem::exists(path)) throw ValidationError("no such file: " + path.string());
  const auto table = csv::Read(path);
  const int label_index = table.ColumnIndex(label_column);
  if (label_index < 0) throw ValidationError("label column '" + label_column + "' not found");
  if (table.rows.empty()) throw ValidationError("CSV file has no data rows: " + path.string());

  const auto n = table.rows.size();
  const auto d = table.header.size() - 1;
  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.labels.reserve(n);
  data.sample_ids.reserve(n);
  std::unordered_map<std::string, int> codes;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    Eigen::Index c = 0;
    for (std::size_t f = 0; f < row.size(); ++f) {
      if (static_cast<int>(f) == label_index) continue;
      const double value =
          csv::ParseDouble(row[f], "row " + std::to_string(r + 1) + ", column '" + table.header[f] + "'");
      if (!std::isfinite(value)) {
        throw ValidationError("NaN or infinite value at row " + std::to_string(r + 1) + ", column '" +
                              table.header[f] + "'");
      }
      data.features(static_cast<Eigen::Index>(r), c++) = value;
    }
    const auto [it, inserted] =
        codes.try_emplace(row[static_cast<std::size_t>(label_index)], static_cast<int>(codes.size()));
    data.labels.push_back(it->second);
    data.sample_ids.push_back(static_cast<SampleId>(r));
  }
  data.class_count = static_cast<int>(codes.size());
  if (data.class_count < 2) throw ValidationError("CSV has a single class; need at least 2");
  Standardize(data.features);
  data.Validate();
  return data;
}

void WriteDatasetCsv(const Dataset& data, const std::filesystem::path& path,
                     const std::string& upstream_digest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  if (!upstream_digest.empty()) out << "# upstream: " << upstream_digest << '\n';
  out << "# class_count: " << data.class_count << '\n';
  out << kIdColumn;
  for (std::size_t c = 0; c < data.dims(); ++c) out << ",f" << c;
  out << ',' << kLabelColumn << '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.sample_ids[r];
    for (std::size_t c = 0; c < data.dims(); ++c) {
      out << ',' << csv::FormatDouble(data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    out << ',' << data.labels[r] << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

Dataset ReadDatasetCsv(const std::filesystem::path& path) {
  const auto table = csv::Read(path);
  const int id_index = table.ColumnIndex(kIdColumn);
  const int label_index = table.ColumnIndex(kLabelColumn);
  if (id_index < 0 || label_index < 0) {
    throw ValidationError(path.string() + " is not a persisted dataset (missing " + kIdColumn + " or " +
                          kLabelColumn + ")");
  }
  const auto n = table.rows.size();
  const auto d = table.header.size() - 2;
  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  int max_label = -1;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    Eigen::Index c = 0;
    for (std::size_t f = 0; f < row.size(); ++f) {
      const std::string context = path.string() + " row " + std::to_string(r + 1);
      if (static_cast<int>(f) == id_index) {
        data.sample_ids.push_back(csv::ParseInt(row[f], context));
      } else if (static_cast<int>(f) == label_index) {
        data.labels.push_back(static_cast<int>(csv::ParseInt(row[f], context)));
        max_label = std::max(max_label, data.labels.back());
      } else {
        data.features(static_cast<Eigen::Index>(r), c++) = csv::ParseDouble(row[f], context);
      }
    }
  }
  const auto it = table.meta.find("class_count");
  data.class_count = it != table.meta.end() ? static_cast<int>(csv::ParseInt(it->second, "class_count"))
                                            : max_label + 1;
  data.Validate();
  return data;
}

Dataset MakeBlobs(std::size_t n, std::size_t d, int k, double separation, std::uint64_t seed) {
  if (k < 2) throw ValidationError("make_blobs needs k >= 2");
  if (d < 1) throw ValidationError("make_blobs needs d >= 1");
  if (n < 2 * static_cast<std::size_t>(k)) throw ValidationError("make_blobs needs n >= 2k");
  if (!(separation > 0.0)) throw ValidationError("make_blobs needs separation > 0");

  Rng rng(Rng::Derive(seed, "make_blobs"));
  // Box half-width grows with the number of centers per axis so placement stays
  // feasible; rejection sampling is bounded.
  const double half_width =
      separation * std::max(1.0, std::pow(static_cast<double>(k), 1.0 / static_cast<double>(d)));
  constexpr int kRestarts = 200;
  constexpr int kTriesPerCenter = 1000;
  std::vector<Eigen::VectorXd> centers;
  bool placed = false;
  for (int restart = 0; restart < kRestarts && !placed; ++restart) {
    centers.clear();
    for (int c = 0; c < k; ++c) {
      bool ok = false;
      for (int attempt = 0; attempt < kTriesPerCenter && !ok; ++attempt) {
        Eigen::VectorXd candidate(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < d; ++j) candidate[static_cast<Eigen::Index>(j)] = (2.0 * rng.uniform() - 1.0) * half_width;
        ok = std::all_of(centers.begin(), centers.end(), [&](const Eigen::VectorXd& other) {
          return (other - candidate).norm() >= separation;
        });
        if (ok) centers.push_back(std::move(candidate));
      }
      if (!ok) break;
    }
    placed = centers.size() == static_cast<std::size_t>(k);
  }
  if (!placed) throw RuntimeFailure("make_blobs: could not place centers after bounded retries");

  std::vector<int> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<int>(i % static_cast<std::size_t>(k)));
  rng.shuffle(std::span<int>(labels));

  Dataset data;
  data.class_count = k;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.labels = labels;
  data.sample_ids.resize(n);
  std::iota(data.sample_ids.begin(), data.sample_ids.end(), SampleId{0});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& center = centers[static_cast<std::size_t>(labels[i])];
    for (std::size_t j = 0; j < d; ++j) {
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          center[static_cast<Eigen::Index>(j)] + rng.normal();
    }
  }
  return data;
}

Dataset MakeCluster(std::size_t n, const std::vector<double>& center, double spread,
                    std::uint64_t seed, SampleId first_id) {
  if (n == 0 || center.empty()) throw ValidationError("make_cluster needs n >= 1 and d >= 1");
  if (!(spread >= 0.0)) throw ValidationError("make_cluster needs spread >= 0");
  Rng rng(Rng::Derive(seed, "make_cluster"));
  Dataset data;
  data.class_count = 2;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(center.size()));
  data.labels.assign(n, 0);
  data.sample_ids.resize(n);
  std::iota(data.sample_ids.begin(), data.sample_ids.end(), first_id);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < center.size(); ++j) {
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = center[j] + spread * rng.normal();
    }
  }
  return data;
}

Dataset StratifiedSubsample(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("subsample fraction must be in (0, 1]");
  data.Validate();
  Rng rng(Rng::Derive(seed, "stratified_subsample"));
  std::vector<std::size_t> keep;
  auto by_class = RowsByClass(data);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    const auto count = RoundCount(fraction, rows.size());
    if (count < 1) {
      throw ValidationError("subsample fraction " + std::to_string(fraction) + " empties class " +
                            std::to_string(c));
    }
    rng.shuffle(std::span<std::size_t>(rows));
    keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(count));
  }
  std::sort(keep.begin(), keep.end());
  return data.Select(keep);
}

SplitPair StratifiedSplit(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must be in (0, 1)");
  }
  data.Validate();
  Rng rng(Rng::Derive(seed, "stratified_split"));
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  auto by_class = RowsByClass(data);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    const auto count = RoundCount(train_fraction, rows.size());
    if (count < 1 || count >= rows.size()) {
      throw ValidationError("train fraction " + std::to_string(train_fraction) + " empties class " +
                            std::to_string(c) + " in one part (class size " + std::to_string(rows.size()) + ")");
    }
    rng.shuffle(std::span<std::size_t>(rows));
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(count));
    validation_rows.insert(validation_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(count), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(validation_rows.begin(), validation_rows.end());
  return {data.Select(train_rows), data.Select(validation_rows)};
}

std::string DatasetDigest(const Dataset& data) {
  Sha256 hasher;
  hasher.Update("glitchscope.dataset.v1");
  hasher.UpdateScalar(static_cast<std::int64_t>(data.class_count));
  hasher.UpdateScalar(static_cast<std::uint64_t>(data.size()));
  hasher.UpdateScalar(static_cast<std::uint64_t>(data.dims()));
  for (const auto id : data.sample_ids) hasher.UpdateScalar(static_cast<std::int64_t>(id));
  for (const auto label : data.labels) hasher.UpdateScalar(static_cast<std::int32_t>(label));
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) hasher.UpdateScalar(data.features(r, c));
  }
  return hasher.HexDigest();
}

}  // namespace glitchscope
