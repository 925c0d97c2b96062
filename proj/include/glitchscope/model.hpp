// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_MODEL_HPP_
#define GLITCHSCOPE_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "glitchscope/dataset.hpp"

namespace glitchscope {

enum class Architecture { kLogistic, kMlp };

std::string_view ToString(Architecture architecture);
Architecture ParseArchitecture(std::string_view name);

struct ModelConfig {
  Architecture architecture = Architecture::kLogistic;
  int hidden_units = 32;  // mlp only
  double learning_rate = 0.1;
  int epochs = 10;
  int batch_size = 32;
  // Per-epoch multiplicative decay: eta_t = learning_rate * lr_decay^t.
  double lr_decay = 1.0;
  std::uint64_t seed = 0;

  // Throws ValidationError; `n` is the training set size (batch_size <= n).
  void Validate(std::size_t n) const;
  double LearningRateAt(int epoch) const;
};

// Dimensions of a model. Parameters are one flat vector laid out as
//   mlp:      W1 (h x d, row-major), b1 (h), W (k x h, row-major), b (k)
//   logistic: W (k x d, row-major), b (k)
// so the last linear layer always occupies the tail of the vector.
struct ModelShape {
  Architecture architecture = Architecture::kLogistic;
  int input_dim = 0;
  int hidden_units = 0;
  int classes = 0;

  int penultimate_dim() const { return architecture == Architecture::kMlp ? hidden_units : input_dim; }
  std::size_t parameter_count() const;
  std::size_t last_layer_offset() const;
  std::size_t last_layer_size() const {
    return static_cast<std::size_t>(classes) * static_cast<std::size_t>(penultimate_dim() + 1);
  }

  bool operator==(const ModelShape&) const = default;
};

ModelShape ShapeFor(const ModelConfig& config, const Dataset& data);

// Seeded uniform initialization in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for the
// weights and biases of every layer.
Eigen::VectorXd InitialParameters(const ModelShape& shape, std::uint64_t seed);

// Stateless forward/backward passes over a flat parameter vector.
class Network {
 public:
  Network(const ModelShape& shape, const Eigen::VectorXd& parameters);

  // Input features for logistic; rectified hidden activations for mlp.
  Eigen::VectorXd Penultimate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd Logits(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int Predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double Loss(const Eigen::Ref<const Eigen::VectorXd>& x, int label) const;

  // Mean cross-entropy over `rows` of `data`; writes the gradient of that mean
  // with respect to every parameter into `gradient`.
  double BatchLossAndGradient(const Dataset& data, std::span<const std::size_t> rows,
                              Eigen::VectorXd& gradient) const;

 private:
  ModelShape shape_;
  Eigen::VectorXd parameters_;
};

Eigen::VectorXd Softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

// Gradient of the cross-entropy loss of one sample with respect to the last
// linear layer, as a k x (p + 1) matrix whose final column is the bias:
//   g = (softmax(logits) - onehot(label)) * [a; 1]^T
// with `a` the penultimate activation. Throws RuntimeFailure when the forward
// pass is not finite.
Eigen::MatrixXd LastLayerGradient(const ModelShape& shape, const Eigen::VectorXd& parameters,
                                  const Eigen::Ref<const Eigen::VectorXd>& x, int label);

struct Checkpoint {
  int epoch = 0;
  double learning_rate = 0.0;
  Eigen::VectorXd parameters;  // snapshot at the start of the epoch
  // batch_of[i] is the batch index of train_ids[i] during this epoch.
  std::vector<std::uint32_t> batch_of;

  std::vector<std::size_t> BatchSizes() const;
};

struct CheckpointTrail {
  ModelShape shape;
  int batch_size = 0;
  std::uint64_t seed = 0;
  std::vector<SampleId> train_ids;
  std::string train_digest;  // DatasetDigest of the training set
  std::vector<Checkpoint> checkpoints;
  Eigen::VectorXd final_parameters;
  std::vector<double> epoch_losses;  // mean minibatch loss per epoch

  int epochs() const { return static_cast<int>(checkpoints.size()); }
  void Validate() const;
};

// Plain minibatch SGD without momentum or weight decay on mean cross-entropy.
// Each epoch draws a seeded permutation, cuts it into consecutive batches
// (last one may be short) and records a checkpoint before the first update.
// Throws RuntimeFailure naming the epoch if the loss stops being finite.
CheckpointTrail Train(const Dataset& data, const ModelConfig& config);

// Re-applies every recorded epoch (batches in index order, members in row
// order) starting from the first checkpoint. Matches final_parameters exactly.
Eigen::VectorXd ReplayTrail(const CheckpointTrail& trail, const Dataset& data);

// Fraction of correct argmax predictions under the final parameters, over
// `subset` ids (all rows when absent). Throws ValidationError on an empty
// subset or an unknown id.
double EvaluateAccuracy(const CheckpointTrail& trail, const Dataset& data,
                        const std::optional<std::vector<SampleId>>& subset = std::nullopt);

double MeanLoss(const ModelShape& shape, const Eigen::VectorXd& parameters, const Dataset& data);

// Binary container, all integers and floats little-endian:
//   magic "GSTRAIL\0" (8 bytes), u32 version = 1
//   u32 architecture (0 logistic, 1 mlp), u32 d, u32 h, u32 k
//   u32 T, u64 n, u32 batch_size, u64 seed
//   64 bytes train digest (ASCII hex, zero padded)
//   n x i64 train ids, u64 P (parameter count)
//   T x { u32 epoch, f64 eta, P x f64 theta, n x u32 batch index, f64 loss }
//   P x f64 final theta
void WriteTrail(const CheckpointTrail& trail, const std::filesystem::path& path);
CheckpointTrail ReadTrail(const std::filesystem::path& path);

}  // namespace glitchscope

#endif  // GLITCHSCOPE_MODEL_HPP_
