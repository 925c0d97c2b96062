// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "binary_io.hpp"
#include "glitchscope/error.hpp"
#include "glitchscope/rng.hpp"

namespace glitchscope {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

struct Layout {
  std::size_t hidden_weights = 0;
  std::size_t hidden_bias = 0;
  std::size_t weights = 0;
  std::size_t bias = 0;
  std::size_t total = 0;
};

Layout LayoutOf(const ModelShape& shape) {
  const auto d = static_cast<std::size_t>(shape.input_dim);
  const auto h = static_cast<std::size_t>(shape.hidden_units);
  const auto k = static_cast<std::size_t>(shape.classes);
  const auto p = static_cast<std::size_t>(shape.penultimate_dim());
  Layout layout;
  std::size_t offset = 0;
  if (shape.architecture == Architecture::kMlp) {
    layout.hidden_weights = offset;
    offset += h * d;
    layout.hidden_bias = offset;
    offset += h;
  }
  layout.weights = offset;
  offset += k * p;
  layout.bias = offset;
  offset += k;
  layout.total = offset;
  return layout;
}

constexpr char kTrailMagic[8] = {'G', 'S', 'T', 'R', 'A', 'I', 'L', '\0'};
constexpr std::uint32_t kTrailVersion = 1;

}  // namespace

std::string_view ToString(Architecture architecture) {
  return architecture == Architecture::kMlp ? "mlp" : "logistic";
}

Architecture ParseArchitecture(std::string_view name) {
  if (name == "logistic") return Architecture::kLogistic;
  if (name == "mlp") return Architecture::kMlp;
  throw ValidationError("unknown architecture '" + std::string(name) + "'");
}

void ModelConfig::Validate(std::size_t n) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be > 0");
  if (!(lr_decay > 0.0) || !std::isfinite(lr_decay)) throw ValidationError("lr_decay must be > 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (static_cast<std::size_t>(batch_size) > n) {
    throw ValidationError("batch size " + std::to_string(batch_size) + " exceeds training set size " +
                          std::to_string(n));
  }
  if (architecture == Architecture::kMlp && hidden_units < 1) throw ValidationError("mlp needs hidden_units >= 1");
}

double ModelConfig::LearningRateAt(int epoch) const {
  return learning_rate * std::pow(lr_decay, static_cast<double>(epoch));
}

std::size_t ModelShape::parameter_count() const { return LayoutOf(*this).total; }
std::size_t ModelShape::last_layer_offset() const { return LayoutOf(*this).weights; }

ModelShape ShapeFor(const ModelConfig& config, const Dataset& data) {
  ModelShape shape;
  shape.architecture = config.architecture;
  shape.input_dim = static_cast<int>(data.dims());
  shape.hidden_units = config.architecture == Architecture::kMlp ? config.hidden_units : 0;
  shape.classes = data.class_count;
  return shape;
}

Eigen::VectorXd InitialParameters(const ModelShape& shape, std::uint64_t seed) {
  const auto layout = LayoutOf(shape);
  Eigen::VectorXd params(static_cast<Eigen::Index>(layout.total));
  Rng rng(Rng::Derive(seed, "init"));
  auto fill = [&](std::size_t begin, std::size_t end, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = begin; i < end; ++i) params[static_cast<Eigen::Index>(i)] = (2.0 * rng.uniform() - 1.0) * bound;
  };
  if (shape.architecture == Architecture::kMlp) fill(layout.hidden_weights, layout.weights, shape.input_dim);
  fill(layout.weights, layout.total, shape.penultimate_dim());
  return params;
}

Network::Network(const ModelShape& shape, const Eigen::VectorXd& parameters)
    : shape_(shape), parameters_(parameters) {
  if (static_cast<std::size_t>(parameters.size()) != shape.parameter_count()) {
    throw ValidationError("parameter vector has " + std::to_string(parameters.size()) + " values, shape needs " +
                          std::to_string(shape.parameter_count()));
  }
}

Eigen::VectorXd Network::Penultimate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (shape_.architecture == Architecture::kLogistic) return x;
  const auto layout = LayoutOf(shape_);
  const ConstMatrixMap w1(parameters_.data() + layout.hidden_weights, shape_.hidden_units, shape_.input_dim);
  const Eigen::Map<const Eigen::VectorXd> b1(parameters_.data() + layout.hidden_bias, shape_.hidden_units);
  return (w1 * x + b1).cwiseMax(0.0);
}

Eigen::VectorXd Network::Logits(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto layout = LayoutOf(shape_);
  const ConstMatrixMap w(parameters_.data() + layout.weights, shape_.classes, shape_.penultimate_dim());
  const Eigen::Map<const Eigen::VectorXd> b(parameters_.data() + layout.bias, shape_.classes);
  return w * Penultimate(x) + b;
}

int Network::Predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::Index best = 0;
  Logits(x).maxCoeff(&best);
  return static_cast<int>(best);
}

double Network::Loss(const Eigen::Ref<const Eigen::VectorXd>& x, int label) const {
  const Eigen::VectorXd z = Logits(x);
  const double top = z.maxCoeff();
  return top + std::log((z.array() - top).exp().sum()) - z[label];
}

double Network::BatchLossAndGradient(const Dataset& data, std::span<const std::size_t> rows,
                                     Eigen::VectorXd& gradient) const {
  const auto layout = LayoutOf(shape_);
  const auto b = static_cast<Eigen::Index>(rows.size());
  const auto k = shape_.classes;
  const auto p = shape_.penultimate_dim();
  RowMatrix x(b, shape_.input_dim);
  for (Eigen::Index r = 0; r < b; ++r) x.row(r) = data.features.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));

  gradient.setZero(static_cast<Eigen::Index>(layout.total));
  RowMatrix pre;
  RowMatrix activation;
  if (shape_.architecture == Architecture::kMlp) {
    const ConstMatrixMap w1(parameters_.data() + layout.hidden_weights, shape_.hidden_units, shape_.input_dim);
    const Eigen::Map<const Eigen::RowVectorXd> b1(parameters_.data() + layout.hidden_bias, shape_.hidden_units);
    pre = (x * w1.transpose()).rowwise() + b1;
    activation = pre.cwiseMax(0.0);
  } else {
    activation = x;
  }
  const ConstMatrixMap w(parameters_.data() + layout.weights, k, p);
  const Eigen::Map<const Eigen::RowVectorXd> bias(parameters_.data() + layout.bias, k);
  RowMatrix delta = (activation * w.transpose()).rowwise() + bias;

  double loss = 0.0;
  for (Eigen::Index r = 0; r < b; ++r) {
    auto z = delta.row(r);
    const int label = data.labels[rows[static_cast<std::size_t>(r)]];
    const double top = z.maxCoeff();
    const double shifted_label = z[label] - top;
    z.array() = (z.array() - top).exp();
    const double total = z.sum();
    loss += std::log(total) - shifted_label;
    z /= total;
    z[label] -= 1.0;
  }
  const double scale = 1.0 / static_cast<double>(b);
  loss *= scale;
  delta *= scale;

  MatrixMap gw(gradient.data() + layout.weights, k, p);
  Eigen::Map<Eigen::RowVectorXd> gb(gradient.data() + layout.bias, k);
  gw = delta.transpose() * activation;
  gb = delta.colwise().sum();
  if (shape_.architecture == Architecture::kMlp) {
    RowMatrix upstream = (delta * w).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    MatrixMap gw1(gradient.data() + layout.hidden_weights, shape_.hidden_units, shape_.input_dim);
    Eigen::Map<Eigen::RowVectorXd> gb1(gradient.data() + layout.hidden_bias, shape_.hidden_units);
    gw1 = upstream.transpose() * x;
    gb1 = upstream.colwise().sum();
  }
  return loss;
}

Eigen::VectorXd Softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const Eigen::ArrayXd shifted = (logits.array() - logits.maxCoeff()).exp();
  return (shifted / shifted.sum()).matrix();
}

Eigen::MatrixXd LastLayerGradient(const ModelShape& shape, const Eigen::VectorXd& parameters,
                                  const Eigen::Ref<const Eigen::VectorXd>& x, int label) {
  const Network net(shape, parameters);
  const Eigen::VectorXd a = net.Penultimate(x);
  const Eigen::VectorXd z = net.Logits(x);
  if (!a.allFinite() || !z.allFinite()) throw RuntimeFailure("non-finite activation in last-layer gradient");
  Eigen::VectorXd residual = Softmax(z);
  residual[label] -= 1.0;
  Eigen::MatrixXd g(shape.classes, shape.penultimate_dim() + 1);
  g.leftCols(shape.penultimate_dim()) = residual * a.transpose();
  g.col(shape.penultimate_dim()) = residual;
  return g;
}

std::vector<std::size_t> Checkpoint::BatchSizes() const {
  std::vector<std::size_t> sizes;
  for (const auto b : batch_of) {
    if (b >= sizes.size()) sizes.resize(b + 1, 0);
    ++sizes[b];
  }
  return sizes;
}

void CheckpointTrail::Validate() const {
  const auto params = shape.parameter_count();
  for (std::size_t t = 0; t < checkpoints.size(); ++t) {
    const auto& c = checkpoints[t];
    if (c.epoch != static_cast<int>(t)) throw ValidationError("trail epochs are not 0..T-1 in order");
    if (!(c.learning_rate > 0.0)) throw ValidationError("trail has a non-positive learning rate");
    if (static_cast<std::size_t>(c.parameters.size()) != params) throw ValidationError("trail parameter size mismatch");
    if (c.batch_of.size() != train_ids.size()) throw ValidationError("trail batch assignment size mismatch");
  }
  if (checkpoints.empty()) throw ValidationError("trail has no checkpoints");
  if (static_cast<std::size_t>(final_parameters.size()) != params) throw ValidationError("trail final parameter size mismatch");
}

namespace {

std::vector<std::vector<std::size_t>> GroupBatches(const std::vector<std::uint32_t>& batch_of) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < batch_of.size(); ++i) {
    if (batch_of[i] >= batches.size()) batches.resize(batch_of[i] + 1);
    batches[batch_of[i]].push_back(i);
  }
  return batches;
}

double RunEpoch(const ModelShape& shape, const Dataset& data, const std::vector<std::uint32_t>& batch_of,
                double learning_rate, Eigen::VectorXd& params) {
  Eigen::VectorXd gradient;
  double loss_sum = 0.0;
  const auto batches = GroupBatches(batch_of);
  for (const auto& members : batches) {
    const Network net(shape, params);
    loss_sum += net.BatchLossAndGradient(data, members, gradient);
    params -= learning_rate * gradient;
  }
  return loss_sum / static_cast<double>(batches.size());
}

}  // namespace

CheckpointTrail Train(const Dataset& data, const ModelConfig& config) {
  data.Validate();
  config.Validate(data.size());
  CheckpointTrail trail;
  trail.shape = ShapeFor(config, data);
  trail.batch_size = config.batch_size;
  trail.seed = config.seed;
  trail.train_ids = data.sample_ids;
  trail.train_digest = DatasetDigest(data);

  Eigen::VectorXd params = InitialParameters(trail.shape, config.seed);
  Rng shuffle_rng(Rng::Derive(config.seed, "shuffle"));
  const auto n = data.size();
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    Checkpoint checkpoint;
    checkpoint.epoch = epoch;
    checkpoint.learning_rate = config.LearningRateAt(epoch);
    checkpoint.parameters = params;
    checkpoint.batch_of.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      checkpoint.batch_of[order[j]] = static_cast<std::uint32_t>(j / static_cast<std::size_t>(config.batch_size));
    }
    const double loss = RunEpoch(trail.shape, data, checkpoint.batch_of, checkpoint.learning_rate, params);
    if (!std::isfinite(loss) || !params.allFinite()) {
      throw RuntimeFailure("training diverged at epoch " + std::to_string(epoch) +
                           " (non-finite loss; lower the learning rate)");
    }
    trail.epoch_losses.push_back(loss);
    trail.checkpoints.push_back(std::move(checkpoint));
  }
  trail.final_parameters = params;
  return trail;
}

Eigen::VectorXd ReplayTrail(const CheckpointTrail& trail, const Dataset& data) {
  trail.Validate();
  if (data.sample_ids != trail.train_ids) throw ValidationError("dataset ids do not match the trail");
  Eigen::VectorXd params = trail.checkpoints.front().parameters;
  for (const auto& checkpoint : trail.checkpoints) {
    RunEpoch(trail.shape, data, checkpoint.batch_of, checkpoint.learning_rate, params);
  }
  return params;
}

double EvaluateAccuracy(const CheckpointTrail& trail, const Dataset& data,
                        const std::optional<std::vector<SampleId>>& subset) {
  std::vector<std::size_t> rows;
  if (subset) {
    std::unordered_map<SampleId, std::size_t> index;
    for (std::size_t i = 0; i < data.size(); ++i) index.emplace(data.sample_ids[i], i);
    for (const auto id : *subset) {
      const auto it = index.find(id);
      if (it == index.end()) throw ValidationError("subset id " + std::to_string(id) + " not in dataset");
      rows.push_back(it->second);
    }
  } else {
    rows.resize(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  if (rows.empty()) throw ValidationError("accuracy over an empty subset");
  const Network net(trail.shape, trail.final_parameters);
  std::size_t correct = 0;
  for (const auto r : rows) {
    if (net.Predict(data.features.row(static_cast<Eigen::Index>(r)).transpose()) == data.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double MeanLoss(const ModelShape& shape, const Eigen::VectorXd& parameters, const Dataset& data) {
  const Network net(shape, parameters);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += net.Loss(data.features.row(static_cast<Eigen::Index>(i)).transpose(), data.labels[i]);
  }
  return total / static_cast<double>(data.size());
}

void WriteTrail(const CheckpointTrail& trail, const std::filesystem::path& path) {
  trail.Validate();
  binary::Writer out(path);
  for (const char c : kTrailMagic) out.Put(c);
  out.Put(kTrailVersion);
  out.Put(static_cast<std::uint32_t>(trail.shape.architecture == Architecture::kMlp ? 1 : 0));
  out.Put(static_cast<std::uint32_t>(trail.shape.input_dim));
  out.Put(static_cast<std::uint32_t>(trail.shape.hidden_units));
  out.Put(static_cast<std::uint32_t>(trail.shape.classes));
  out.Put(static_cast<std::uint32_t>(trail.checkpoints.size()));
  out.Put(static_cast<std::uint64_t>(trail.train_ids.size()));
  out.Put(static_cast<std::uint32_t>(trail.batch_size));
  out.Put(trail.seed);
  out.PutBytes(trail.train_digest, 64);
  for (const auto id : trail.train_ids) out.Put(static_cast<std::int64_t>(id));
  out.Put(static_cast<std::uint64_t>(trail.shape.parameter_count()));
  for (std::size_t t = 0; t < trail.checkpoints.size(); ++t) {
    const auto& c = trail.checkpoints[t];
    out.Put(static_cast<std::uint32_t>(c.epoch));
    out.Put(c.learning_rate);
    for (Eigen::Index i = 0; i < c.parameters.size(); ++i) out.Put(c.parameters[i]);
    for (const auto b : c.batch_of) out.Put(b);
    out.Put(t < trail.epoch_losses.size() ? trail.epoch_losses[t] : 0.0);
  }
  for (Eigen::Index i = 0; i < trail.final_parameters.size(); ++i) out.Put(trail.final_parameters[i]);
  out.Finish();
}

CheckpointTrail ReadTrail(const std::filesystem::path& path) {
  binary::Reader in(path);
  for (const char c : kTrailMagic) {
    if (in.Get<char>() != c) throw ValidationError(path.string() + " is not a checkpoint trail");
  }
  if (in.Get<std::uint32_t>() != kTrailVersion) throw ValidationError("unsupported trail version in " + path.string());
  CheckpointTrail trail;
  const auto arch = in.Get<std::uint32_t>();
  if (arch > 1) throw ValidationError("unknown architecture code in " + path.string());
  trail.shape.architecture = arch == 1 ? Architecture::kMlp : Architecture::kLogistic;
  trail.shape.input_dim = static_cast<int>(in.Get<std::uint32_t>());
  trail.shape.hidden_units = static_cast<int>(in.Get<std::uint32_t>());
  trail.shape.classes = static_cast<int>(in.Get<std::uint32_t>());
  const auto epochs = in.Get<std::uint32_t>();
  const auto n = in.Get<std::uint64_t>();
  trail.batch_size = static_cast<int>(in.Get<std::uint32_t>());
  trail.seed = in.Get<std::uint64_t>();
  trail.train_digest = in.GetBytes(64);
  trail.train_ids.resize(n);
  for (auto& id : trail.train_ids) id = in.Get<std::int64_t>();
  const auto params = in.Get<std::uint64_t>();
  if (params != trail.shape.parameter_count()) throw ValidationError("parameter count mismatch in " + path.string());
  for (std::uint32_t t = 0; t < epochs; ++t) {
    Checkpoint c;
    c.epoch = static_cast<int>(in.Get<std::uint32_t>());
    c.learning_rate = in.Get<double>();
    c.parameters.resize(static_cast<Eigen::Index>(params));
    for (Eigen::Index i = 0; i < c.parameters.size(); ++i) c.parameters[i] = in.Get<double>();
    c.batch_of.resize(n);
    for (auto& b : c.batch_of) b = in.Get<std::uint32_t>();
    trail.epoch_losses.push_back(in.Get<double>());
    trail.checkpoints.push_back(std::move(c));
  }
  trail.final_parameters.resize(static_cast<Eigen::Index>(params));
  for (Eigen::Index i = 0; i < trail.final_parameters.size(); ++i) trail.final_parameters[i] = in.Get<double>();
  in.ExpectEnd();
  trail.Validate();
  return trail;
}

}  // namespace glitchscope
