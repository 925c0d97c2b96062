// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "glitchscope/dataset.hpp"
#include "glitchscope/evaluation.hpp"
#include "glitchscope/experiment.hpp"
#include "glitchscope/glitch.hpp"
#include "glitchscope/influence.hpp"
#include "glitchscope/model.hpp"
#include "glitchscope/orchestrator.hpp"
#include "glitchscope/rng.hpp"
#include "glitchscope/signals.hpp"
#include "glitchscope/sweep.hpp"
#include "test_util.hpp"

namespace gs = glitchscope;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

std::string Format(const char* fmt, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), fmt, args...);
  return buffer;
}

// Forward pass written out with plain loops over the flat parameter layout:
// mlp = W1 (h x d, row-major), b1, W (k x h, row-major), b; logistic = W (k x d), b.
double ReferenceLoss(const gs::ModelShape& shape, const Eigen::VectorXd& theta, const Eigen::VectorXd& x, int label) {
  const int d = shape.input_dim, k = shape.classes;
  std::vector<double> a(x.data(), x.data() + d);
  std::size_t at = 0;
  if (shape.architecture == gs::Architecture::kMlp) {
    const int h = shape.hidden_units;
    std::vector<double> hidden(static_cast<std::size_t>(h));
    for (int u = 0; u < h; ++u) {
      double z = theta[static_cast<Eigen::Index>(h * d + u)];
      for (int j = 0; j < d; ++j) z += theta[static_cast<Eigen::Index>(u * d + j)] * a[static_cast<std::size_t>(j)];
      hidden[static_cast<std::size_t>(u)] = z > 0.0 ? z : 0.0;
    }
    at = static_cast<std::size_t>(h * d + h);
    a = hidden;
  }
  const int p = static_cast<int>(a.size());
  std::vector<double> logits(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    double z = theta[static_cast<Eigen::Index>(at + static_cast<std::size_t>(k * p + c))];
    for (int j = 0; j < p; ++j) z += theta[static_cast<Eigen::Index>(at + static_cast<std::size_t>(c * p + j))] * a[static_cast<std::size_t>(j)];
    logits[static_cast<std::size_t>(c)] = z;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  return -(logits[static_cast<std::size_t>(label)] - top) + std::log(sum);
}

Outcome GradientCorrectness() {
  const auto start = Clock::now();
  int cases = 0, bad = 0;
  double worst = 0.0;
  for (auto arch : {gs::Architecture::kLogistic, gs::Architecture::kMlp}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto data = gs::MakeBlobs(80, 4, 3, 3.0, seed);
      gs::ModelConfig config;
      config.architecture = arch;
      config.hidden_units = 12;
      config.epochs = 5;
      config.batch_size = 16;
      config.seed = seed;
      const auto trail = gs::Train(data, config);
      gs::Rng rng(gs::Rng::Derive(seed, "gradient-cases"));
      for (int trial = 0; trial < 30; ++trial) {
        const auto& theta = trail.checkpoints[rng.below(trail.checkpoints.size())].parameters;
        const auto row = static_cast<Eigen::Index>(rng.below(data.size()));
        const Eigen::VectorXd x = data.features.row(row).transpose();
        const int label = data.labels[static_cast<std::size_t>(row)];
        const auto g = gs::LastLayerGradient(trail.shape, theta, x, label);
        const int k = trail.shape.classes, p = trail.shape.penultimate_dim();
        const auto offset = static_cast<Eigen::Index>(trail.shape.last_layer_offset());
        double diff = 0.0, scale = 0.0;
        for (int c = 0; c < k; ++c) {
          for (int j = 0; j <= p; ++j) {
            const Eigen::Index q = offset + (j < p ? c * p + j : k * p + c);
            Eigen::VectorXd plus = theta, minus = theta;
            plus[q] += 1e-4;
            minus[q] -= 1e-4;
            const double fd = (ReferenceLoss(trail.shape, plus, x, label) - ReferenceLoss(trail.shape, minus, x, label)) / 2e-4;
            diff = std::max(diff, std::abs(fd - g(c, j)));
            scale = std::max(scale, std::abs(g(c, j)));
          }
        }
        const double relative = diff / std::max(scale, 1e-300);
        worst = std::max(worst, relative);
        ++cases;
        if (relative > 1e-5) ++bad;
      }
    }
  }
  const double elapsed = Seconds(start);
  return {bad == 0 && cases >= 200 && elapsed < 10.0,
          Format("%d cases over logistic+mlp, max relative error %.2e (<= 1e-5), %.1fs (< 10s)", cases, worst, elapsed)};
}

gs::ExperimentConfig RandomPipeline(std::uint64_t seed) {
  gs::Rng rng(gs::Rng::Derive(seed, "algebra-config"));
  gs::ExperimentConfig config;
  config.data.k = 2 + static_cast<int>(rng.below(3));
  config.data.d = 2 + rng.below(5);
  config.data.n = 80 + 20 * rng.below(6);
  config.data.separation = 2.0 + 4.0 * rng.uniform();
  gs::GlitchSpec spec;
  const gs::GlitchType types[] = {gs::GlitchType::kUniformNoise, gs::GlitchType::kClassDependentNoise,
                                  gs::GlitchType::kOutlier};
  spec.glitch_type = types[rng.below(3)];
  spec.epsilon = 0.05 + 0.2 * rng.uniform();
  config.glitches = {spec};
  config.model.architecture = rng.below(2) ? gs::Architecture::kMlp : gs::Architecture::kLogistic;
  config.model.hidden_units = 4 + static_cast<int>(rng.below(12));
  config.model.epochs = 2 + static_cast<int>(rng.below(5));
  config.model.batch_size = 8 + static_cast<int>(rng.below(24));
  config.model.learning_rate = 0.02 + 0.2 * rng.uniform();
  config.influence_mode = rng.below(2) ? gs::InfluenceMode::kPaper : gs::InfluenceMode::kCheckpoint;
  return config;
}

std::vector<gs::SignalRanking> AllRankings(const gs::InfluenceTensor& tensor, const gs::Dataset& train,
                                           const gs::Dataset& validation) {
  std::vector<gs::SignalRanking> out;
  std::vector<gs::EpochScope> scopes = {gs::EpochScope::Cumulative()};
  for (int t = 0; t < tensor.epochs(); ++t) scopes.push_back(gs::EpochScope::Epoch(t));
  for (const auto& scope : scopes) {
    for (auto kind : gs::kAllSignals) out.push_back(gs::ComputeSignal(kind, tensor, scope, train.labels, validation.labels));
  }
  return out;
}

Outcome TracInAlgebra() {
  const auto start = Clock::now();
  int negative_self = 0, additivity = 0, argsort = 0;
  double worst_additivity = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto config = RandomPipeline(seed);
    const auto outcome = gs::RunExperiment(config, seed);
    const auto& train = outcome.contaminated.data;
    const auto& validation = outcome.split.validation;
    const auto& tensor = outcome.tensor;
    if (tensor.cumulative_self.minCoeff() < 0.0) ++negative_self;
    for (const auto& slice : tensor.per_epoch_self) {
      if (slice.minCoeff() < 0.0) ++negative_self;
    }
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(tensor.cumulative.rows(), tensor.cumulative.cols());
    Eigen::VectorXd self = Eigen::VectorXd::Zero(tensor.cumulative_self.size());
    for (int t = 0; t < tensor.epochs(); ++t) {
      sum += tensor.per_epoch[t];
      self += tensor.per_epoch_self[t];
    }
    const double rel = std::max((sum - tensor.cumulative).cwiseAbs().maxCoeff() / tensor.cumulative.cwiseAbs().maxCoeff(),
                                (self - tensor.cumulative_self).cwiseAbs().maxCoeff() / tensor.cumulative_self.maxCoeff());
    worst_additivity = std::max(worst_additivity, rel);
    if (rel > 1e-9) ++additivity;
    const auto base = AllRankings(tensor, train, validation);
    for (double c : {0.5, 2.0, 10.0}) {
      auto trail = outcome.trail;
      for (auto& checkpoint : trail.checkpoints) checkpoint.learning_rate *= c;
      const auto scaled = AllRankings(gs::TracIn(trail, train, validation, config.influence_mode), train, validation);
      for (std::size_t r = 0; r < base.size(); ++r) {
        if (scaled[r].order != base[r].order) ++argsort;
      }
    }
  }
  const double elapsed = Seconds(start);
  return {negative_self == 0 && additivity == 0 && argsort == 0 && elapsed < 120.0,
          Format("50 pipelines: negative SI %d, additivity violations %d (max rel %.1e), "
                 "argsort changes under eta*{0.5,2,10} %d, %.1fs (< 120s)",
                 negative_self, additivity, worst_additivity, argsort, elapsed)};
}

Outcome LoorAgreement() {
  const auto start = Clock::now();
  int passing = 0;
  std::ostringstream rhos;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = gs::MakeBlobs(24, 2, 2, 1.0, 100 + seed);
    const auto train = gs::testing::Slice(data, 0, 16);
    const auto validation = gs::testing::Slice(data, 16, 24);
    gs::ModelConfig config;
    config.epochs = 30;
    config.batch_size = 16;
    config.learning_rate = 0.5;
    config.seed = seed;
    const auto tensor = gs::TracIn(gs::Train(train, config), train, validation);
    std::map<gs::SampleId, Eigen::Index> row, col;
    for (std::size_t i = 0; i < train.size(); ++i) row[train.sample_ids[i]] = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < validation.size(); ++j) col[validation.sample_ids[j]] = static_cast<Eigen::Index>(j);
    std::vector<double> influence, delta;
    for (const auto& record : gs::LoorOracle(train, validation, config)) {
      const auto it = col.find(record.probe_id);
      if (it == col.end()) continue;
      influence.push_back(tensor.cumulative(row.at(record.removed_id), it->second));
      delta.push_back(record.loss_delta);
    }
    const double rho = gs::SpearmanCorrelation(influence, delta);
    if (rho >= 0.6) ++passing;
    rhos << (seed ? " " : "") << Format("%.3f", rho);
  }
  const double elapsed = Seconds(start);
  return {passing >= 8 && elapsed < 300.0,
          Format("Spearman >= 0.6 on %d/10 seeds (need 8) [%s], %.1fs (< 300s)", passing, rhos.str().c_str(), elapsed)};
}

Outcome Cancellation() {
  Eigen::MatrixXd values(4, 4);
  values << 3.0, -3.0, 3.0, -3.0,
            0.5, 0.4, 0.6, 0.5,
            1.0, 0.2, 0.3, 0.1,
            0.2, 0.2, 0.2, 0.2;
  gs::InfluenceTensor tensor;
  tensor.train_ids = {0, 1, 2, 3};
  tensor.val_ids = {10, 11, 12, 13};
  tensor.per_epoch = {values};
  tensor.cumulative = values;
  const auto mi = gs::MarginalInfluence(tensor);
  const auto aai = gs::AverageAbsoluteInfluence(tensor);
  const bool pass = mi.scores[0] == 0.0 && aai.scores[0] > 0.0 && mi.order.back() == 0 && aai.order.front() == 0;
  return {pass, Format("glitched sample: MI = %g, AAI = %g, MI rank %d/4, AAI rank %d/4", mi.scores[0], aai.scores[0],
                       static_cast<int>(std::find(mi.order.begin(), mi.order.end(), 0) - mi.order.begin()) + 1,
                       static_cast<int>(std::find(aai.order.begin(), aai.order.end(), 0) - aai.order.begin()) + 1)};
}

// Blob benchmark for uniform noise (criteria 5 and 6).
gs::ExperimentConfig UniformBenchmark() {
  gs::ExperimentConfig config;
  config.data.n = 800;
  config.data.d = 8;
  config.data.k = 4;
  config.data.separation = 6.0;
  gs::GlitchSpec spec;
  spec.glitch_type = gs::GlitchType::kUniformNoise;
  spec.epsilon = 0.1;
  config.glitches = {spec};
  config.model.architecture = gs::Architecture::kMlp;
  config.model.hidden_units = 32;
  config.model.epochs = 10;
  config.model.batch_size = 32;
  config.model.learning_rate = 0.1;
  config.per_epoch = false;
  return config;
}

const std::vector<std::uint64_t> kSeeds = {0, 1, 2, 3, 4};

Outcome UniformDetection() {
  const auto start = Clock::now();
  const double ratio[] = {0.1};
  const auto result = gs::RatioSweep(UniformBenchmark(), ratio, kSeeds, {}, gs::WorkerCountFromEnv());
  std::map<std::string, double> mean;
  for (const auto& cell : result.cells) mean[cell.signal] = cell.mean_f1;
  const double si = mean.at("SI");
  const bool best = si >= mean.at("MI") && si >= mean.at("AAI") && si >= mean.at("GDclass");
  const double elapsed = Seconds(start);
  return {si >= 0.8 && best && elapsed < 600.0,
          Format("mean F1 over 5 seeds: SI %.3f, MI %.3f, AAI %.3f, GDclass %.3f (SI >= 0.8 and best), %.1fs (< 600s)",
                 si, mean.at("MI"), mean.at("AAI"), mean.at("GDclass"), elapsed)};
}

Outcome RatioTrend() {
  const double ratios[] = {0.01, 0.30};
  const auto result = gs::RatioSweep(UniformBenchmark(), ratios, kSeeds, {}, gs::WorkerCountFromEnv());
  double low = -1.0, high = -1.0;
  for (const auto& cell : result.cells) {
    if (cell.signal != "SI") continue;
    (cell.ratio < 0.1 ? low : high) = cell.mean_f1;
  }
  return {high >= low, Format("mean SI F1: %.3f at ratio 0.30 vs %.3f at ratio 0.01 (need >=)", high, low)};
}

// Three overlapping blobs, class 0 downsampled to 10% of the training set (criteria 7 and 8).
gs::ExperimentConfig NearCaBenchmark() {
  gs::ExperimentConfig config;
  config.data.n = 600;
  config.data.d = 2;
  config.data.k = 3;
  config.data.separation = 0.5;
  gs::GlitchSpec spec;
  spec.glitch_type = gs::GlitchType::kNearCa;
  spec.epsilon = 0.1;
  spec.source_class = 0;
  config.glitches = {spec};
  config.model.architecture = gs::Architecture::kMlp;
  config.model.hidden_units = 16;
  config.model.epochs = 10;
  config.signals = {gs::SignalKind::kSelfInfluence};
  return config;
}

Outcome NearCaDynamics() {
  int at_least = 0, strict = 0;
  std::ostringstream detail;
  for (auto seed : kSeeds) {
    const auto outcome = gs::RunExperiment(NearCaBenchmark(), seed);
    const auto detection = gs::PerEpochDetection(outcome.tensor, outcome.contaminated.errors, gs::SignalKind::kSelfInfluence);
    if (detection.max_epoch_f1 >= detection.cumulative.f1) ++at_least;
    if (detection.max_epoch_f1 > detection.cumulative.f1) ++strict;
    detail << (seed ? "; " : "")
           << Format("s%d max %.3f@e%d cum %.3f e0 %.3f", static_cast<int>(seed), detection.max_epoch_f1,
                     detection.best_epoch, detection.cumulative.f1, detection.per_epoch.front().f1);
  }
  return {at_least == 5 && strict >= 3, Format("max-epoch SI F1 >= cumulative on %d/5 seeds, strict on %d/5 (need 3) [%s]", at_least, strict,
                                detail.str().c_str())};
}

Outcome AnomalyAccuracy() {
  int near_ok = 0, far_ok = 0;
  std::ostringstream near, far;
  auto far_config = NearCaBenchmark();
  far_config.data.separation = 6.0;
  far_config.glitches[0].glitch_type = gs::GlitchType::kFarCa;
  far_config.glitches[0].source_class.reset();
  far_config.foreign = gs::ForeignConfig{};
  far_config.per_epoch = false;
  for (auto seed : kSeeds) {
    const auto a = gs::RunExperiment(NearCaBenchmark(), seed);
    const double near_acc = gs::EvaluateAccuracy(a.trail, a.contaminated.data, a.contaminated.errors.GlitchedIds());
    const auto b = gs::RunExperiment(far_config, seed);
    const double far_acc = gs::EvaluateAccuracy(b.trail, b.contaminated.data, b.contaminated.errors.GlitchedIds());
    if (near_acc <= 0.2) ++near_ok;
    if (far_acc >= 0.9) ++far_ok;
    near << (seed ? " " : "") << Format("%.3f", near_acc);
    far << (seed ? " " : "") << Format("%.3f", far_acc);
  }
  return {near_ok >= 3 && far_ok >= 3,
          Format("Near-CA accuracy <= 0.2 on %d/5 seeds [%s]; Far-CA accuracy >= 0.9 on %d/5 seeds [%s]", near_ok,
                 near.str().c_str(), far_ok, far.str().c_str())};
}

Outcome F1Protocol() {
  gs::ErrorTable truth;
  for (gs::SampleId id = 0; id < 1000; ++id) {
    const bool glitched = id < 100;
    truth.entries.push_back({id, glitched, glitched ? gs::GlitchType::kUniformNoise : gs::GlitchType::kClean, std::nullopt});
  }
  gs::SignalRanking ranking;
  ranking.ids.resize(1000);
  std::iota(ranking.ids.begin(), ranking.ids.end(), gs::SampleId{0});
  ranking.scores.assign(1000, 0.0);
  ranking.order = ranking.ids;
  gs::Rng rng(20260101);
  double sum = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    rng.shuffle(std::span<gs::SampleId>(ranking.order));
    sum += gs::F1AtKnownRatio(ranking, truth).f1;
  }
  const double mean = sum / 1000.0;
  return {std::abs(mean - 0.1) <= 0.02, Format("random-ranking mean F1 %.4f vs k/n = 0.1 (tolerance 0.02)", mean)};
}

Outcome Determinism() {
  std::vector<std::string> configs = {
      R"({"data": {"n": 200, "d": 2, "k": 2}, "glitches": [{"type": "uniform_noise", "epsilon": 0.1}],
          "model": {"architecture": "logistic", "epochs": 5}})",
      R"({"data": {"n": 300, "d": 4, "k": 3, "separation": 4}, "subsample": {"fraction": 0.8},
          "glitches": [{"type": "class_dependent_noise", "epsilon": 0.2},
                       {"type": "outlier", "epsilon": 0.05, "corruption": "stripe"}],
          "model": {"architecture": "mlp", "hidden_units": 8, "epochs": 4}, "influence": {"mode": "checkpoint"},
          "seed": 11})",
      R"({"data": {"n": 300, "d": 3, "k": 3}, "glitches": [{"type": "far_ca", "epsilon": 0.1}], "foreign": {},
          "model": {"architecture": "mlp", "epochs": 6}, "signals": {"gd_class_condition_on_train_label": true},
          "seed": 5})"};
  int identical = 0;
  for (const auto& text : configs) {
    gs::testing::TempDir a, b;
    auto config = gs::ParseConfig(text);
    config.output_dir = a.path();
    gs::RunPipeline(config);
    config.output_dir = b.path();
    gs::RunPipeline(config);
    const auto first = gs::testing::ReadText(a / "results.csv");
    if (!first.empty() && first == gs::testing::ReadText(b / "results.csv")) ++identical;
  }
  return {identical == static_cast<int>(configs.size()),
          Format("%d/%zu run configs produced byte-identical results.csv on two executions", identical, configs.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", GradientCorrectness},
      {"TracIn algebra", TracInAlgebra},
      {"LOOR oracle agreement", LoorAgreement},
      {"cancellation demonstration", Cancellation},
      {"uniform-noise detection", UniformDetection},
      {"ratio-sweep trend", RatioTrend},
      {"Near-CA training dynamics", NearCaDynamics},
      {"accuracy on anomalies", AnomalyAccuracy},
      {"F1 protocol exactness", F1Protocol},
      {"determinism", Determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("%s criterion %zu (%s): %s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
