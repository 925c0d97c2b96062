// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_INFLUENCE_HPP_
#define GLITCHSCOPE_INFLUENCE_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "glitchscope/dataset.hpp"
#include "glitchscope/model.hpp"

namespace glitchscope {

// kPaper weights each epoch's gradient product by eta_t / |B_t(i)|, the size of
// the batch holding train sample i. kCheckpoint drops the batch factor and
// weights by eta_t alone.
enum class InfluenceMode { kPaper, kCheckpoint };

std::string_view ToString(InfluenceMode mode);
InfluenceMode ParseInfluenceMode(std::string_view name);

// Dynamic influence of every training sample on every validation sample, per
// epoch and summed, plus the self-influence diagonal.
struct InfluenceTensor {
  InfluenceMode mode = InfluenceMode::kPaper;
  std::vector<SampleId> train_ids;
  std::vector<SampleId> val_ids;
  std::vector<Eigen::MatrixXd> per_epoch;       // T x (n x m)
  std::vector<Eigen::VectorXd> per_epoch_self;  // T x n
  Eigen::MatrixXd cumulative;                   // n x m
  Eigen::VectorXd cumulative_self;              // n
  std::string train_digest;
  std::string validation_digest;

  int epochs() const { return static_cast<int>(per_epoch.size()); }
  bool has_self() const { return per_epoch_self.size() == per_epoch.size() && cumulative_self.size() > 0; }
};

// Flattened last-layer gradients, one row per sample of `data`.
Eigen::MatrixXd LastLayerGradients(const ModelShape& shape, const Eigen::VectorXd& parameters,
                                   const Dataset& data);

// Row weights for epoch t: eta_t / |B_t(i)| (paper) or eta_t (checkpoint).
Eigen::VectorXd EpochWeights(const CheckpointTrail& trail, int epoch, InfluenceMode mode);

// n_train x m matrix: entry (i, j) = weight_i * <g(z_j, theta_t), g(z_i, theta_t)>.
Eigen::MatrixXd EpochInfluence(const CheckpointTrail& trail, const Dataset& train, const Dataset& probes,
                               int epoch, InfluenceMode mode);

// Diagonal of EpochInfluence(train, train): weight_i * ||g(z_i, theta_t)||^2.
Eigen::VectorXd EpochSelfInfluence(const CheckpointTrail& trail, const Dataset& train, int epoch,
                                   InfluenceMode mode);

// Fills every epoch slice and sums them in epoch order. Throws
// ValidationError when `train` does not carry the trail's ids.
InfluenceTensor TracIn(const CheckpointTrail& trail, const Dataset& train, const Dataset& validation,
                       InfluenceMode mode = InfluenceMode::kPaper);

// Binary container, little-endian:
//   magic "GSINFL\0\0", u32 version = 1, u32 mode (0 paper, 1 checkpoint)
//   u32 T, u64 n, u64 m, 64 bytes train digest, 64 bytes validation digest
//   n x i64 train ids, m x i64 validation ids
//   T x { n*m f64 row-major slice, n f64 self }
//   n*m f64 cumulative, n f64 cumulative self
void WriteInfluenceTensor(const InfluenceTensor& tensor, const std::filesystem::path& path);
InfluenceTensor ReadInfluenceTensor(const std::filesystem::path& path);

// Inspection export: sample_id,self_influence,val_<id>... with the cumulative
// values.
void WriteInfluenceCsv(const InfluenceTensor& tensor, const std::filesystem::path& path);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_INFLUENCE_HPP_
