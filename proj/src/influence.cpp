// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/influence.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "glitchscope/csv.hpp"
#include "glitchscope/error.hpp"

namespace glitchscope {
namespace {

constexpr char kTensorMagic[8] = {'G', 'S', 'I', 'N', 'F', 'L', '\0', '\0'};
constexpr std::uint32_t kTensorVersion = 1;

void CheckEpoch(const CheckpointTrail& trail, int epoch) {
  if (epoch < 0 || epoch >= trail.epochs()) {
    throw ValidationError("epoch " + std::to_string(epoch) + " out of range [0, " + std::to_string(trail.epochs()) + ")");
  }
}

void CheckTrainIds(const CheckpointTrail& trail, const Dataset& train) {
  if (train.sample_ids != trail.train_ids) {
    throw ValidationError("training set ids do not match the checkpoint trail");
  }
}

}  // namespace

std::string_view ToString(InfluenceMode mode) {
  return mode == InfluenceMode::kCheckpoint ? "checkpoint" : "paper";
}

InfluenceMode ParseInfluenceMode(std::string_view name) {
  if (name == "paper") return InfluenceMode::kPaper;
  if (name == "checkpoint") return InfluenceMode::kCheckpoint;
  throw ValidationError("unknown influence mode '" + std::string(name) + "'");
}

Eigen::MatrixXd LastLayerGradients(const ModelShape& shape, const Eigen::VectorXd& parameters,
                                   const Dataset& data) {
  const auto width = static_cast<Eigen::Index>(shape.last_layer_size());
  Eigen::MatrixXd gradients(static_cast<Eigen::Index>(data.size()), width);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::MatrixXd g = LastLayerGradient(shape, parameters, data.features.row(static_cast<Eigen::Index>(i)).transpose(),
                                                data.labels[i]);
    gradients.row(static_cast<Eigen::Index>(i)) = g.reshaped<Eigen::RowMajor>().transpose();
  }
  return gradients;
}

Eigen::VectorXd EpochWeights(const CheckpointTrail& trail, int epoch, InfluenceMode mode) {
  CheckEpoch(trail, epoch);
  const auto& checkpoint = trail.checkpoints[static_cast<std::size_t>(epoch)];
  const auto n = static_cast<Eigen::Index>(checkpoint.batch_of.size());
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(n, checkpoint.learning_rate);
  if (mode == InfluenceMode::kPaper) {
    const auto sizes = checkpoint.BatchSizes();
    for (Eigen::Index i = 0; i < n; ++i) {
      weights[i] /= static_cast<double>(sizes[checkpoint.batch_of[static_cast<std::size_t>(i)]]);
    }
  }
  return weights;
}

Eigen::MatrixXd EpochInfluence(const CheckpointTrail& trail, const Dataset& train, const Dataset& probes,
                               int epoch, InfluenceMode mode) {
  CheckEpoch(trail, epoch);
  CheckTrainIds(trail, train);
  const auto& params = trail.checkpoints[static_cast<std::size_t>(epoch)].parameters;
  const Eigen::MatrixXd train_grads = LastLayerGradients(trail.shape, params, train);
  const Eigen::MatrixXd probe_grads = LastLayerGradients(trail.shape, params, probes);
  return EpochWeights(trail, epoch, mode).asDiagonal() * (train_grads * probe_grads.transpose());
}

Eigen::VectorXd EpochSelfInfluence(const CheckpointTrail& trail, const Dataset& train, int epoch,
                                   InfluenceMode mode) {
  CheckEpoch(trail, epoch);
  CheckTrainIds(trail, train);
  const auto& params = trail.checkpoints[static_cast<std::size_t>(epoch)].parameters;
  const Eigen::MatrixXd grads = LastLayerGradients(trail.shape, params, train);
  return EpochWeights(trail, epoch, mode).cwiseProduct(grads.rowwise().squaredNorm());
}

InfluenceTensor TracIn(const CheckpointTrail& trail, const Dataset& train, const Dataset& validation,
                       InfluenceMode mode) {
  trail.Validate();
  CheckTrainIds(trail, train);
  if (validation.dims() != train.dims()) throw ValidationError("validation and training dimensionality differ");
  InfluenceTensor tensor;
  tensor.mode = mode;
  tensor.train_ids = train.sample_ids;
  tensor.val_ids = validation.sample_ids;
  tensor.train_digest = DatasetDigest(train);
  tensor.validation_digest = DatasetDigest(validation);
  const auto n = static_cast<Eigen::Index>(train.size());
  const auto m = static_cast<Eigen::Index>(validation.size());
  tensor.cumulative = Eigen::MatrixXd::Zero(n, m);
  tensor.cumulative_self = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < trail.epochs(); ++t) {
    const auto& params = trail.checkpoints[static_cast<std::size_t>(t)].parameters;
    // Validation gradients are computed once per epoch and reused for every row.
    const Eigen::MatrixXd probe_grads = LastLayerGradients(trail.shape, params, validation);
    const Eigen::MatrixXd train_grads = LastLayerGradients(trail.shape, params, train);
    const Eigen::VectorXd weights = EpochWeights(trail, t, mode);
    Eigen::MatrixXd slice = weights.asDiagonal() * (train_grads * probe_grads.transpose());
    Eigen::VectorXd self = weights.cwiseProduct(train_grads.rowwise().squaredNorm());
    tensor.cumulative += slice;
    tensor.cumulative_self += self;
    tensor.per_epoch.push_back(std::move(slice));
    tensor.per_epoch_self.push_back(std::move(self));
  }
  return tensor;
}

void WriteInfluenceTensor(const InfluenceTensor& tensor, const std::filesystem::path& path) {
  binary::Writer out(path);
  for (const char c : kTensorMagic) out.Put(c);
  out.Put(kTensorVersion);
  out.Put(static_cast<std::uint32_t>(tensor.mode == InfluenceMode::kCheckpoint ? 1 : 0));
  out.Put(static_cast<std::uint32_t>(tensor.epochs()));
  out.Put(static_cast<std::uint64_t>(tensor.train_ids.size()));
  out.Put(static_cast<std::uint64_t>(tensor.val_ids.size()));
  out.PutBytes(tensor.train_digest, 64);
  out.PutBytes(tensor.validation_digest, 64);
  for (const auto id : tensor.train_ids) out.Put(static_cast<std::int64_t>(id));
  for (const auto id : tensor.val_ids) out.Put(static_cast<std::int64_t>(id));
  auto put_matrix = [&](const Eigen::MatrixXd& matrix) {
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
      for (Eigen::Index c = 0; c < matrix.cols(); ++c) out.Put(matrix(r, c));
    }
  };
  auto put_vector = [&](const Eigen::VectorXd& vector) {
    for (Eigen::Index i = 0; i < vector.size(); ++i) out.Put(vector[i]);
  };
  for (int t = 0; t < tensor.epochs(); ++t) {
    put_matrix(tensor.per_epoch[static_cast<std::size_t>(t)]);
    put_vector(tensor.per_epoch_self[static_cast<std::size_t>(t)]);
  }
  put_matrix(tensor.cumulative);
  put_vector(tensor.cumulative_self);
  out.Finish();
}

InfluenceTensor ReadInfluenceTensor(const std::filesystem::path& path) {
  binary::Reader in(path);
  for (const char c : kTensorMagic) {
    if (in.Get<char>() != c) throw ValidationError(path.string() + " is not an influence tensor");
  }
  if (in.Get<std::uint32_t>() != kTensorVersion) throw ValidationError("unsupported tensor version in " + path.string());
  InfluenceTensor tensor;
  const auto mode = in.Get<std::uint32_t>();
  if (mode > 1) throw ValidationError("unknown influence mode code in " + path.string());
  tensor.mode = mode == 1 ? InfluenceMode::kCheckpoint : InfluenceMode::kPaper;
  const auto epochs = in.Get<std::uint32_t>();
  const auto n = static_cast<Eigen::Index>(in.Get<std::uint64_t>());
  const auto m = static_cast<Eigen::Index>(in.Get<std::uint64_t>());
  tensor.train_digest = in.GetBytes(64);
  tensor.validation_digest = in.GetBytes(64);
  tensor.train_ids.resize(static_cast<std::size_t>(n));
  for (auto& id : tensor.train_ids) id = in.Get<std::int64_t>();
  tensor.val_ids.resize(static_cast<std::size_t>(m));
  for (auto& id : tensor.val_ids) id = in.Get<std::int64_t>();
  auto get_matrix = [&]() {
    Eigen::MatrixXd matrix(n, m);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) matrix(r, c) = in.Get<double>();
    }
    return matrix;
  };
  auto get_vector = [&]() {
    Eigen::VectorXd vector(n);
    for (Eigen::Index i = 0; i < n; ++i) vector[i] = in.Get<double>();
    return vector;
  };
  for (std::uint32_t t = 0; t < epochs; ++t) {
    tensor.per_epoch.push_back(get_matrix());
    tensor.per_epoch_self.push_back(get_vector());
  }
  tensor.cumulative = get_matrix();
  tensor.cumulative_self = get_vector();
  in.ExpectEnd();
  return tensor;
}

void WriteInfluenceCsv(const InfluenceTensor& tensor, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << "# upstream: " << tensor.train_digest << '\n';
  out << "# mode: " << ToString(tensor.mode) << '\n';
  out << "sample_id,self_influence";
  for (const auto id : tensor.val_ids) out << ",val_" << id;
  out << '\n';
  for (std::size_t i = 0; i < tensor.train_ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << tensor.train_ids[i] << ',' << csv::FormatDouble(tensor.cumulative_self[r]);
    for (Eigen::Index j = 0; j < tensor.cumulative.cols(); ++j) out << ',' << csv::FormatDouble(tensor.cumulative(r, j));
    out << '\n';
  }
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

}  // namespace glitchscope
