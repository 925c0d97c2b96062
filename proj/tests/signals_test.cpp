// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "glitchscope/dataset.hpp"
#include "glitchscope/error.hpp"
#include "glitchscope/glitch.hpp"
#include "glitchscope/influence.hpp"
#include "glitchscope/model.hpp"
#include "glitchscope/rng.hpp"
#include "glitchscope/signals.hpp"
#include "test_util.hpp"

namespace glitchscope {
namespace {

using ::testing::ElementsAre;
using ::testing::IsEmpty;
using testing::TempDir;

// Tensor with one epoch whose slice is `values`; train ids 0..n-1, val ids 100..100+m-1.
InfluenceTensor TensorOf(const Eigen::MatrixXd& values) {
  InfluenceTensor tensor;
  tensor.train_ids.resize(static_cast<std::size_t>(values.rows()));
  std::iota(tensor.train_ids.begin(), tensor.train_ids.end(), SampleId{0});
  tensor.val_ids.resize(static_cast<std::size_t>(values.cols()));
  std::iota(tensor.val_ids.begin(), tensor.val_ids.end(), SampleId{100});
  tensor.per_epoch = {values};
  tensor.cumulative = values;
  tensor.per_epoch_self = {Eigen::VectorXd::Zero(values.rows())};
  tensor.cumulative_self = Eigen::VectorXd::Zero(values.rows());
  return tensor;
}

Eigen::MatrixXd RandomMatrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

TEST(RankTest, TiesByAscendingId) {
  const std::vector<SampleId> ids = {7, 3, 9};
  const std::vector<double> scores = {2.0, 2.0, 1.0};
  EXPECT_THAT(Rank(ids, scores), ElementsAre(3, 7, 9));
}

TEST(RankTest, Empty) { EXPECT_THAT(Rank({}, {}), IsEmpty()); }

TEST(RankTest, MatchesIndependentResort) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SampleId> ids(200);
    std::iota(ids.begin(), ids.end(), SampleId{0});
    rng.shuffle(std::span<SampleId>(ids));
    std::vector<double> scores(200);
    // Coarse scores so that ties occur.
    for (auto& s : scores) s = static_cast<double>(rng.below(20));
    std::vector<std::pair<double, SampleId>> keyed;
    for (std::size_t i = 0; i < ids.size(); ++i) keyed.push_back({-scores[i], ids[i]});
    std::sort(keyed.begin(), keyed.end());
    std::vector<SampleId> expected;
    for (const auto& [key, id] : keyed) expected.push_back(id);
    EXPECT_EQ(Rank(ids, scores), expected);
  }
}

TEST(SelfInfluenceTest, AllZeroGivesAscendingIds) {
  auto tensor = TensorOf(Eigen::MatrixXd::Zero(4, 2));
  tensor.train_ids = {8, 2, 5, 1};
  const auto ranking = SelfInfluence(tensor);
  EXPECT_THAT(ranking.scores, ElementsAre(0.0, 0.0, 0.0, 0.0));
  EXPECT_THAT(ranking.order, ElementsAre(1, 2, 5, 8));
}

TEST(SelfInfluenceTest, MissingChannel) {
  auto tensor = TensorOf(Eigen::MatrixXd::Zero(2, 2));
  tensor.per_epoch_self.clear();
  tensor.cumulative_self.resize(0);
  EXPECT_THROW(SelfInfluence(tensor), ValidationError);
}

TEST(SelfInfluenceTest, FlippedLabelsStandOut) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = MakeBlobs(300, 2, 3, 8.0, seed);
    const auto split = StratifiedSplit(data, 0.8, seed);
    const auto noisy = InjectUniformNoise(split.train, 0.05, seed);
    ModelConfig config;
    config.epochs = 10;
    config.seed = seed;
    const auto trail = Train(noisy.data, config);
    const auto ranking = SelfInfluence(TracIn(trail, noisy.data, split.validation));
    std::vector<double> clean, flipped;
    for (std::size_t i = 0; i < ranking.ids.size(); ++i) {
      EXPECT_GE(ranking.scores[i], 0.0);
      (noisy.errors.Find(ranking.ids[i])->is_glitched ? flipped : clean).push_back(ranking.scores[i]);
    }
    ASSERT_FALSE(flipped.empty());
    std::nth_element(clean.begin(), clean.begin() + clean.size() / 2, clean.end());
    const double clean_median = clean[clean.size() / 2];
    const auto above = std::count_if(flipped.begin(), flipped.end(), [&](double s) { return s > clean_median; });
    EXPECT_GE(static_cast<double>(above), 0.8 * static_cast<double>(flipped.size())) << "seed " << seed;
  }
}

TEST(MarginalInfluenceTest, Cancellation) {
  Eigen::MatrixXd row(1, 2);
  row << 1.0, -1.0;
  const auto tensor = TensorOf(row);
  EXPECT_EQ(MarginalInfluence(tensor).scores[0], 0.0);
  EXPECT_EQ(AverageAbsoluteInfluence(tensor).scores[0], 1.0);
}

TEST(MarginalInfluenceTest, SingleValidationSample) {
  Eigen::MatrixXd column(3, 1);
  column << 0.25, -4.0, 2.5;
  EXPECT_THAT(MarginalInfluence(TensorOf(column)).scores, ElementsAre(0.25, -4.0, 2.5));
}

TEST(MarginalInfluenceTest, CancellationHidesGlitchFromMiButNotAai) {
  // Row 0 is the glitched sample: large opposite-signed pairs cancel under MI.
  Eigen::MatrixXd values(4, 4);
  values << 3.0, -3.0, 3.0, -3.0,
            0.5, 0.4, 0.6, 0.5,
            1.0, 0.2, 0.3, 0.1,
            0.2, 0.2, 0.2, 0.2;
  const auto tensor = TensorOf(values);
  const auto mi = MarginalInfluence(tensor);
  const auto aai = AverageAbsoluteInfluence(tensor);
  EXPECT_EQ(mi.scores[0], 0.0);
  EXPECT_GT(aai.scores[0], 0.0);
  EXPECT_EQ(mi.order.back(), 0);
  EXPECT_EQ(aai.order.front(), 0);
}

TEST(AverageAbsoluteInfluenceTest, ZeroRow) {
  EXPECT_EQ(AverageAbsoluteInfluence(TensorOf(Eigen::MatrixXd::Zero(1, 5))).scores[0], 0.0);
}

TEST(AverageAbsoluteInfluenceTest, TriangleInequality) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Eigen::MatrixXd values = RandomMatrix(15, 7, seed);
    // Make a few rows single-signed so that equality cases are covered.
    values.row(0) = values.row(0).cwiseAbs();
    values.row(1) = -values.row(1).cwiseAbs();
    const auto tensor = TensorOf(values);
    const auto mi = MarginalInfluence(tensor);
    const auto aai = AverageAbsoluteInfluence(tensor);
    for (std::size_t i = 0; i < 15; ++i) {
      const double bound = 7.0 * aai.scores[i];
      EXPECT_LE(std::abs(mi.scores[i]), bound * (1.0 + 1e-12));
      const bool one_sign = (values.row(static_cast<Eigen::Index>(i)).array() >= 0).all() ||
                            (values.row(static_cast<Eigen::Index>(i)).array() <= 0).all();
      if (one_sign) {
        EXPECT_NEAR(std::abs(mi.scores[i]), bound, 1e-12 * bound);
      } else {
        EXPECT_LT(std::abs(mi.scores[i]), bound * (1.0 - 1e-12));
      }
    }
  }
}

TEST(GdClassTest, SingleClassEqualsMarginal) {
  const auto values = RandomMatrix(6, 4, 2);
  const auto tensor = TensorOf(values);
  const std::vector<int> train_labels = {0, 0, 0, 0, 0, 0};
  const std::vector<int> val_labels = {0, 0, 0, 0};
  const auto gd = GdClass(tensor, train_labels, val_labels);
  const auto mi = MarginalInfluence(tensor);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(gd.scores[i], mi.scores[i], 1e-12);
}

TEST(GdClassTest, MinimumOverClassPartials) {
  Eigen::MatrixXd values(1, 4);
  values << 1.0, 2.0, -0.5, -0.5;
  const std::vector<int> train_labels = {0};
  const std::vector<int> val_labels = {0, 0, 1, 1};
  EXPECT_EQ(GdClass(TensorOf(values), train_labels, val_labels).scores[0], -1.0);
}

TEST(GdClassTest, ConditionOnTrainLabel) {
  Eigen::MatrixXd values(2, 4);
  values << 1.0, 2.0, -0.5, -0.5,
            1.0, 2.0, -0.5, -0.5;
  const std::vector<int> train_labels = {0, 2};
  const std::vector<int> val_labels = {0, 0, 1, 1};
  const auto gd = GdClass(TensorOf(values), train_labels, val_labels, {}, true);
  EXPECT_EQ(gd.scores[0], 3.0);
  EXPECT_EQ(gd.scores[1], 0.0);  // class 2 has no validation samples
}

TEST(GdClassTest, Errors) {
  const auto tensor = TensorOf(Eigen::MatrixXd::Zero(2, 2));
  const std::vector<int> wrong = {0};
  const std::vector<int> val = {0, 1};
  EXPECT_THROW(GdClass(tensor, wrong, val), ValidationError);
  const auto empty = TensorOf(Eigen::MatrixXd::Zero(2, 0));
  const std::vector<int> train = {0, 1};
  EXPECT_THROW(GdClass(empty, train, {}), ValidationError);
}

TEST(PermutationTest, ValidationOrderDoesNotMatter) {
  Rng rng(12);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto values = RandomMatrix(10, 9, seed);
    std::vector<int> val_labels(9);
    for (auto& y : val_labels) y = static_cast<int>(rng.below(3));
    std::vector<int> train_labels(10);
    for (auto& y : train_labels) y = static_cast<int>(rng.below(3));
    std::vector<Eigen::Index> perm(9);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    rng.shuffle(std::span<Eigen::Index>(perm));
    Eigen::MatrixXd permuted(10, 9);
    std::vector<int> permuted_labels(9);
    for (Eigen::Index j = 0; j < 9; ++j) {
      permuted.col(j) = values.col(perm[static_cast<std::size_t>(j)]);
      permuted_labels[static_cast<std::size_t>(j)] = val_labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
    }
    const auto a = TensorOf(values), b = TensorOf(permuted);
    for (auto kind : {SignalKind::kMarginalInfluence, SignalKind::kAverageAbsoluteInfluence, SignalKind::kGdClass}) {
      const auto ra = ComputeSignal(kind, a, {}, train_labels, val_labels);
      const auto rb = ComputeSignal(kind, b, {}, train_labels, permuted_labels);
      for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(ra.scores[i], rb.scores[i], 1e-12) << ToString(kind);
    }
  }
}

TEST(EpochScopeTest, AdditivityOfMarginalOnly) {
  Eigen::MatrixXd first(2, 2), second(2, 2);
  first << 1.0, 2.0, -1.0, 0.5;
  second << 0.5, -1.0, 3.0, -0.5;
  InfluenceTensor tensor = TensorOf(first + second);
  tensor.per_epoch = {first, second};
  tensor.per_epoch_self = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
  const std::vector<int> train_labels = {0, 1};
  const std::vector<int> val_labels = {0, 1};
  for (std::size_t i = 0; i < 2; ++i) {
    const double summed = MarginalInfluence(tensor, EpochScope::Epoch(0)).scores[i] +
                          MarginalInfluence(tensor, EpochScope::Epoch(1)).scores[i];
    EXPECT_NEAR(MarginalInfluence(tensor).scores[i], summed, 1e-12);
  }
  // Row 0: per-epoch AAI 1.5 + 0.75 differs from cumulative AAI 1.25.
  const double aai_sum = AverageAbsoluteInfluence(tensor, EpochScope::Epoch(0)).scores[0] +
                         AverageAbsoluteInfluence(tensor, EpochScope::Epoch(1)).scores[0];
  EXPECT_NE(AverageAbsoluteInfluence(tensor).scores[0], aai_sum);
  // Row 0: per-epoch GD-class minima 1 + (-1) differ from the cumulative minimum 1.
  const double gd_sum = GdClass(tensor, train_labels, val_labels, EpochScope::Epoch(0)).scores[0] +
                        GdClass(tensor, train_labels, val_labels, EpochScope::Epoch(1)).scores[0];
  EXPECT_NE(GdClass(tensor, train_labels, val_labels).scores[0], gd_sum);
}

TEST(EpochScopeTest, AdditivityOnTrainedPipeline) {
  const auto data = MakeBlobs(120, 3, 3, 3.0, 5);
  const auto split = StratifiedSplit(data, 0.75, 5);
  ModelConfig config;
  config.architecture = Architecture::kMlp;
  config.hidden_units = 8;
  config.epochs = 5;
  const auto tensor = TracIn(Train(split.train, config), split.train, split.validation);
  const auto cumulative = MarginalInfluence(tensor);
  for (std::size_t i = 0; i < cumulative.scores.size(); ++i) {
    double sum = 0.0;
    for (int t = 0; t < tensor.epochs(); ++t) sum += MarginalInfluence(tensor, EpochScope::Epoch(t)).scores[i];
    EXPECT_NEAR(cumulative.scores[i], sum, 1e-9 * std::max(1.0, std::abs(sum)));
  }
}

TEST(EpochScopeTest, Names) {
  EXPECT_EQ(EpochScope::Cumulative().ToString(), "cumulative");
  EXPECT_EQ(EpochScope::Epoch(3).ToString(), "epoch_3");
  EXPECT_EQ(EpochScope::Parse("epoch_12"), EpochScope::Epoch(12));
  EXPECT_EQ(EpochScope::Parse("cumulative"), EpochScope::Cumulative());
  EXPECT_THROW(EpochScope::Parse("epoch_x"), ValidationError);
  EXPECT_THROW(MarginalInfluence(TensorOf(Eigen::MatrixXd::Zero(1, 1)), EpochScope::Epoch(1)), ValidationError);
}

TEST(SignalNamesTest, RoundTrip) {
  for (auto kind : kAllSignals) EXPECT_EQ(ParseSignalKind(ToString(kind)), kind);
  EXPECT_THROW(ParseSignalKind("XI"), ValidationError);
}

TEST(RankingsCsvTest, RoundTrip) {
  TempDir dir;
  const auto values = RandomMatrix(5, 3, 1);
  const auto tensor = TensorOf(values);
  std::vector<SignalRanking> rankings = {MarginalInfluence(tensor), AverageAbsoluteInfluence(tensor, EpochScope::Epoch(0))};
  WriteRankingsCsv(rankings, dir / "r.csv", "feed");
  std::string upstream;
  const auto back = ReadRankingsCsv(dir / "r.csv", &upstream);
  EXPECT_EQ(upstream, "feed");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(back[r].signal, rankings[r].signal);
    EXPECT_EQ(back[r].scope, rankings[r].scope);
    EXPECT_EQ(back[r].order, rankings[r].order);
    std::map<SampleId, double> expected, got;
    for (std::size_t i = 0; i < 5; ++i) {
      expected[rankings[r].ids[i]] = rankings[r].scores[i];
      got[back[r].ids[i]] = back[r].scores[i];
    }
    EXPECT_EQ(got, expected);
  }
}

}  // namespace
}  // namespace glitchscope
