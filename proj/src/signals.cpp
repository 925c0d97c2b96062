// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/signals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "glitchscope/csv.hpp"
#include "glitchscope/error.hpp"

namespace glitchscope {
namespace {

const Eigen::MatrixXd& Slice(const InfluenceTensor& tensor, EpochScope scope) {
  if (!scope.epoch) return tensor.cumulative;
  if (*scope.epoch < 0 || *scope.epoch >= tensor.epochs()) {
    throw ValidationError("epoch " + std::to_string(*scope.epoch) + " out of range");
  }
  return tensor.per_epoch[static_cast<std::size_t>(*scope.epoch)];
}

SignalRanking Finish(SignalKind kind, EpochScope scope, const InfluenceTensor& tensor, std::vector<double> scores) {
  for (const double s : scores) {
    if (!std::isfinite(s)) throw RuntimeFailure(std::string(ToString(kind)) + " produced a non-finite score");
  }
  SignalRanking ranking;
  ranking.signal = kind;
  ranking.scope = scope;
  ranking.ids = tensor.train_ids;
  ranking.scores = std::move(scores);
  ranking.order = Rank(ranking.ids, ranking.scores);
  return ranking;
}

}  // namespace

std::string_view ToString(SignalKind kind) {
  switch (kind) {
    case SignalKind::kSelfInfluence: return "SI";
    case SignalKind::kMarginalInfluence: return "MI";
    case SignalKind::kAverageAbsoluteInfluence: return "AAI";
    case SignalKind::kGdClass: return "GDclass";
  }
  return "SI";
}

SignalKind ParseSignalKind(std::string_view name) {
  for (const auto kind : kAllSignals) {
    if (ToString(kind) == name) return kind;
  }
  throw ValidationError("unknown signal '" + std::string(name) + "' (expected SI, MI, AAI or GDclass)");
}

std::string EpochScope::ToString() const {
  return epoch ? "epoch_" + std::to_string(*epoch) : "cumulative";
}

EpochScope EpochScope::Parse(std::string_view text) {
  if (text == "cumulative") return Cumulative();
  if (text.rfind("epoch_", 0) == 0) {
    return Epoch(static_cast<int>(csv::ParseInt(std::string(text.substr(6)), "epoch scope")));
  }
  throw ValidationError("bad epoch scope '" + std::string(text) + "'");
}

std::vector<SampleId> Rank(std::span<const SampleId> ids, std::span<const double> scores) {
  if (ids.size() != scores.size()) throw ValidationError("rank: ids and scores differ in length");
  std::vector<std::size_t> index(ids.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  std::sort(index.begin(), index.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  std::vector<SampleId> order;
  order.reserve(index.size());
  for (const auto i : index) order.push_back(ids[i]);
  return order;
}

SignalRanking SelfInfluence(const InfluenceTensor& tensor, EpochScope scope) {
  if (!tensor.has_self()) throw ValidationError("influence tensor has no self-influence channel");
  const Eigen::VectorXd* source = &tensor.cumulative_self;
  if (scope.epoch) {
    if (*scope.epoch < 0 || *scope.epoch >= tensor.epochs()) {
      throw ValidationError("epoch " + std::to_string(*scope.epoch) + " out of range");
    }
    source = &tensor.per_epoch_self[static_cast<std::size_t>(*scope.epoch)];
  }
  return Finish(SignalKind::kSelfInfluence, scope, tensor, std::vector<double>(source->begin(), source->end()));
}

SignalRanking MarginalInfluence(const InfluenceTensor& tensor, EpochScope scope) {
  const Eigen::VectorXd sums = Slice(tensor, scope).rowwise().sum();
  return Finish(SignalKind::kMarginalInfluence, scope, tensor, std::vector<double>(sums.begin(), sums.end()));
}

SignalRanking AverageAbsoluteInfluence(const InfluenceTensor& tensor, EpochScope scope) {
  const auto& slice = Slice(tensor, scope);
  if (slice.cols() == 0) throw ValidationError("AAI needs at least one validation sample");
  const Eigen::VectorXd means = slice.cwiseAbs().rowwise().mean();
  return Finish(SignalKind::kAverageAbsoluteInfluence, scope, tensor, std::vector<double>(means.begin(), means.end()));
}

SignalRanking GdClass(const InfluenceTensor& tensor, std::span<const int> train_labels,
                      std::span<const int> val_labels, EpochScope scope, bool condition_on_train_label) {
  const auto& slice = Slice(tensor, scope);
  if (train_labels.size() != static_cast<std::size_t>(slice.rows()) ||
      val_labels.size() != static_cast<std::size_t>(slice.cols())) {
    throw ValidationError("GD-class label vectors do not match the tensor shape");
  }
  // Columns grouped by validation class, in ascending class order.
  std::map<int, std::vector<Eigen::Index>> columns;
  for (std::size_t j = 0; j < val_labels.size(); ++j) columns[val_labels[j]].push_back(static_cast<Eigen::Index>(j));
  if (columns.empty()) throw ValidationError("GD-class: no class is present in validation");

  std::vector<double> scores(static_cast<std::size_t>(slice.rows()));
  for (Eigen::Index i = 0; i < slice.rows(); ++i) {
    auto partial = [&](const std::vector<Eigen::Index>& cols) {
      double sum = 0.0;
      for (const auto j : cols) sum += slice(i, j);
      return sum;
    };
    double score = std::numeric_limits<double>::infinity();
    if (condition_on_train_label) {
      const auto it = columns.find(train_labels[static_cast<std::size_t>(i)]);
      score = it == columns.end() ? 0.0 : partial(it->second);
    } else {
      for (const auto& [label, cols] : columns) score = std::min(score, partial(cols));
    }
    scores[static_cast<std::size_t>(i)] = score;
  }
  return Finish(SignalKind::kGdClass, scope, tensor, std::move(scores));
}

SignalRanking ComputeSignal(SignalKind kind, const InfluenceTensor& tensor, EpochScope scope,
                            std::span<const int> train_labels, std::span<const int> val_labels,
                            bool condition_on_train_label) {
  switch (kind) {
    case SignalKind::kSelfInfluence: return SelfInfluence(tensor, scope);
    case SignalKind::kMarginalInfluence: return MarginalInfluence(tensor, scope);
    case SignalKind::kAverageAbsoluteInfluence: return AverageAbsoluteInfluence(tensor, scope);
    case SignalKind::kGdClass: return GdClass(tensor, train_labels, val_labels, scope, condition_on_train_label);
  }
  throw ValidationError("unknown signal");
}

void WriteRankingsCsv(const std::vector<SignalRanking>& rankings, const std::filesystem::path& path,
                      const std::string& upstream_digest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  if (!upstream_digest.empty()) out << "# upstream: " << upstream_digest << '\n';
  out << "sample_id,signal,epoch_scope,score,rank\n";
  for (const auto& ranking : rankings) {
    std::map<SampleId, double> score_of;
    for (std::size_t i = 0; i < ranking.ids.size(); ++i) score_of[ranking.ids[i]] = ranking.scores[i];
    for (std::size_t r = 0; r < ranking.order.size(); ++r) {
      const auto id = ranking.order[r];
      out << id << ',' << ToString(ranking.signal) << ',' << ranking.scope.ToString() << ','
          << csv::FormatDouble(score_of[id]) << ',' << (r + 1) << '\n';
    }
  }
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

std::vector<SignalRanking> ReadRankingsCsv(const std::filesystem::path& path, std::string* upstream_digest) {
  const auto table = csv::Read(path);
  const int id = table.ColumnIndex("sample_id");
  const int signal = table.ColumnIndex("signal");
  const int scope = table.ColumnIndex("epoch_scope");
  const int score = table.ColumnIndex("score");
  if (id < 0 || signal < 0 || scope < 0 || score < 0 || table.ColumnIndex("rank") < 0) {
    throw ValidationError(path.string() + " is not a rankings file");
  }
  std::vector<SignalRanking> rankings;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& row : table.rows) {
    const auto key = std::make_pair(row[static_cast<std::size_t>(signal)], row[static_cast<std::size_t>(scope)]);
    auto [it, inserted] = slot.try_emplace(key, rankings.size());
    if (inserted) {
      SignalRanking ranking;
      ranking.signal = ParseSignalKind(key.first);
      ranking.scope = EpochScope::Parse(key.second);
      rankings.push_back(std::move(ranking));
    }
    auto& ranking = rankings[it->second];
    ranking.ids.push_back(csv::ParseInt(row[static_cast<std::size_t>(id)], "sample_id"));
    ranking.scores.push_back(csv::ParseDouble(row[static_cast<std::size_t>(score)], "score"));
  }
  for (auto& ranking : rankings) ranking.order = Rank(ranking.ids, ranking.scores);
  if (upstream_digest) {
    const auto it = table.meta.find("upstream");
    *upstream_digest = it == table.meta.end() ? std::string() : it->second;
  }
  return rankings;
}

}  // namespace glitchscope
