// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_DATASET_HPP_
#define GLITCHSCOPE_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace glitchscope {

using SampleId = std::int64_t;
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Labelled feature table. Row i of `features` belongs to `sample_ids[i]` and
// carries label `labels[i]` in [0, class_count). Sample ids are unique and
// survive every transform, so they are the join key between datasets, error
// tables, checkpoint trails and influence tensors.
struct Dataset {
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<SampleId> sample_ids;
  int class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }

  // Throws ValidationError on any broken invariant (shape mismatch, label out
  // of range, duplicate or negative id, non-finite feature, k < 2).
  void Validate() const;

  std::vector<std::size_t> ClassCounts() const;

  // Rows at the given positions, in the given order.
  Dataset Select(const std::vector<std::size_t>& rows) const;
};

struct SplitPair {
  Dataset train;
  Dataset validation;
};

// Per-column standardization to zero mean / unit variance (population
// variance). Columns with zero variance are centered and divided by one.
void Standardize(FeatureMatrix& features);

// Reads a CSV with a header row. `label_column` names the class column; every
// other column must be numeric. Labels are re-encoded densely in order of first
// appearance, ids assigned by row order, features standardized. Lines starting
// with '#' are skipped.
Dataset LoadCsv(const std::filesystem::path& path, const std::string& label_column);

// Persisted form: `__sample_id__,f0..f{d-1},__label__`, values printed with
// round-trip precision. Reading restores the dataset bit-exactly and does not
// re-standardize. `class_count` is written as a comment line.
void WriteDatasetCsv(const Dataset& data, const std::filesystem::path& path,
                     const std::string& upstream_digest = {});
Dataset ReadDatasetCsv(const std::filesystem::path& path);

// k isotropic unit-variance Gaussian clusters in d dimensions. Centers are
// placed by seeded rejection sampling so every pair is at least `separation`
// apart; class sizes differ by at most one; rows are shuffled. Features are not
// standardized (the clusters are already on a unit scale).
Dataset MakeBlobs(std::size_t n, std::size_t d, int k, double separation, std::uint64_t seed);

// One Gaussian cluster around `center` with per-axis standard deviation
// `spread`. Every sample gets `label`; `class_count` is label + 1. Used to build
// foreign data for far-cluster anomalies.
Dataset MakeCluster(std::size_t n, const std::vector<double>& center, double spread,
                    std::uint64_t seed, SampleId first_id = 0);

// Per class, keeps round(fraction * class size) samples chosen uniformly at
// random. Surviving rows keep their original relative order.
Dataset StratifiedSubsample(const Dataset& data, double fraction, std::uint64_t seed);

// Per class, round(train_fraction * class size) samples go to train and the
// rest to validation. Both parts must keep every class.
SplitPair StratifiedSplit(const Dataset& data, double train_fraction, std::uint64_t seed);

// SHA-256 hex digest over a canonical little-endian encoding of the dataset
// (k, n, d, ids, labels, features). Used to chain persisted artifacts.
std::string DatasetDigest(const Dataset& data);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_DATASET_HPP_
