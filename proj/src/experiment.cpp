// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include "glitchscope/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "glitchscope/csv.hpp"
#include "glitchscope/error.hpp"
#include "glitchscope/rng.hpp"
#include "json.hpp"

namespace glitchscope {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

void CheckKeys(const Json& object, const std::set<std::string>& allowed, const std::string& where) {
  if (!object.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) throw ValidationError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T Get(const Json& object, const char* key, T fallback) {
  const auto it = object.find(key);
  if (it == object.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> GetOptional(const Json& object, const char* key) {
  const auto it = object.find(key);
  if (it == object.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
OrderedJson OptionalJson(const std::optional<T>& value) {
  return value ? OrderedJson(*value) : OrderedJson(nullptr);
}

std::string DatasetName(const ExperimentConfig& config) {
  if (config.data.kind == DataSourceConfig::Kind::kCsv) return config.data.path.stem().string();
  return "blobs";
}

}  // namespace

std::uint64_t StageSeeds::Glitch(std::size_t index) const {
  return Rng::Derive(Rng::Derive(run, "glitch"), static_cast<std::uint64_t>(index));
}

StageSeeds SeedsFor(const ExperimentConfig& config, std::uint64_t run_seed) {
  StageSeeds seeds{};
  seeds.run = run_seed;
  seeds.data = config.data.seed.value_or(run_seed);
  seeds.subsample = Rng::Derive(run_seed, "subsample");
  seeds.split = Rng::Derive(run_seed, "split");
  seeds.foreign = Rng::Derive(run_seed, "foreign");
  seeds.model = Rng::Derive(run_seed, "model");
  return seeds;
}

namespace {

// Every constraint except the presence of a glitch spec, which a parsed config may still lack.
void CheckSections(const ExperimentConfig& config) {
  const auto& data = config.data;
  const auto& foreign = config.foreign;
  const auto& model = config.model;
  if (data.kind == DataSourceConfig::Kind::kCsv) {
    if (!std::filesystem::exists(data.path)) throw ValidationError("config: data file not found: " + data.path.string());
  } else {
    if (data.k < 2) throw ValidationError("config: data.k must be >= 2");
    if (data.d < 1) throw ValidationError("config: data.d must be >= 1");
    if (data.n < 2 * static_cast<std::size_t>(data.k)) throw ValidationError("config: data.n must be >= 2k");
    if (!(data.separation > 0.0)) throw ValidationError("config: data.separation must be > 0");
  }
  if (!(config.subsample_fraction > 0.0 && config.subsample_fraction <= 1.0)) {
    throw ValidationError("config: subsample.fraction must be in (0, 1]");
  }
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) throw ValidationError("config: split.train_fraction must be in (0, 1)");
  for (const auto& glitch : config.glitches) {
    glitch.Validate();
    if (glitch.glitch_type == GlitchType::kFarCa && !foreign) {
      throw ValidationError("config: far_ca needs a 'foreign' section");
    }
  }
  if (foreign) {
    if (foreign->kind == ForeignConfig::Kind::kCsv && !std::filesystem::exists(foreign->path)) {
      throw ValidationError("config: foreign file not found: " + foreign->path.string());
    }
    if (foreign->kind == ForeignConfig::Kind::kCluster && (foreign->n < 1 || !(foreign->spread >= 0.0) || !(foreign->distance >= 0.0))) {
      throw ValidationError("config: foreign cluster needs n >= 1, spread >= 0, distance >= 0");
    }
  }
  if (!(model.learning_rate > 0.0)) throw ValidationError("config: model.learning_rate must be > 0");
  if (!(model.lr_decay > 0.0)) throw ValidationError("config: model.lr_decay must be > 0");
  if (model.epochs < 1) throw ValidationError("config: model.epochs must be >= 1");
  if (model.batch_size < 1) throw ValidationError("config: model.batch_size must be >= 1");
  if (model.architecture == Architecture::kMlp && model.hidden_units < 1) {
    throw ValidationError("config: model.hidden_units must be >= 1");
  }
  if (config.signals.empty()) throw ValidationError("config: signals.kinds must not be empty");
  for (const double ratio : config.ratios) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("config: sweep ratios must be in (0, 1)");
  }
}

}  // namespace

void ExperimentConfig::Validate() const {
  if (glitches.empty()) throw ValidationError("config: at least one glitch spec is required");
  CheckSections(*this);
}

ExperimentConfig ParseConfig(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  CheckKeys(root, {"name", "data", "subsample", "split", "glitches", "foreign", "model", "influence", "signals",
                   "seed", "sweep", "output"},
            "config");
  ExperimentConfig config;
  config.name = Get<std::string>(root, "name", config.name);
  config.seed = Get<std::uint64_t>(root, "seed", 0);

  if (const auto it = root.find("data"); it != root.end()) {
    const auto& data = *it;
    CheckKeys(data, {"source", "n", "d", "k", "separation", "seed", "path", "label_column"}, "data");
    const auto source = Get<std::string>(data, "source", "blobs");
    if (source == "blobs") {
      config.data.kind = DataSourceConfig::Kind::kBlobs;
    } else if (source == "csv") {
      config.data.kind = DataSourceConfig::Kind::kCsv;
    } else {
      throw ValidationError("config: data.source must be 'blobs' or 'csv'");
    }
    config.data.n = Get<std::size_t>(data, "n", config.data.n);
    config.data.d = Get<std::size_t>(data, "d", config.data.d);
    config.data.k = Get<int>(data, "k", config.data.k);
    config.data.separation = Get<double>(data, "separation", config.data.separation);
    config.data.seed = GetOptional<std::uint64_t>(data, "seed");
    config.data.path = Get<std::string>(data, "path", "");
    config.data.label_column = Get<std::string>(data, "label_column", config.data.label_column);
  }
  if (const auto it = root.find("subsample"); it != root.end()) {
    CheckKeys(*it, {"fraction", "order"}, "subsample");
    config.subsample_fraction = Get<double>(*it, "fraction", 1.0);
    const auto order = Get<std::string>(*it, "order", "before_split");
    if (order == "before_split") {
      config.subsample_order = SubsampleOrder::kBeforeSplit;
    } else if (order == "after_split") {
      config.subsample_order = SubsampleOrder::kAfterSplit;
    } else {
      throw ValidationError("config: subsample.order must be 'before_split' or 'after_split'");
    }
  }
  if (const auto it = root.find("split"); it != root.end()) {
    CheckKeys(*it, {"train_fraction"}, "split");
    config.train_fraction = Get<double>(*it, "train_fraction", 0.8);
  }
  if (const auto it = root.find("glitches"); it != root.end()) {
    if (!it->is_array()) throw ValidationError("config: 'glitches' must be an array");
    for (const auto& g : *it) {
      CheckKeys(g, {"type", "epsilon", "source_class", "target_class", "corruption", "magnitude"}, "glitches[]");
      GlitchSpec spec;
      spec.glitch_type = ParseGlitchType(Get<std::string>(g, "type", ""));
      spec.epsilon = Get<double>(g, "epsilon", spec.epsilon);
      spec.source_class = GetOptional<int>(g, "source_class");
      spec.target_class = GetOptional<int>(g, "target_class");
      if (const auto corruption = GetOptional<std::string>(g, "corruption")) spec.corruption = ParseCorruption(*corruption);
      spec.corruption_magnitude = Get<double>(g, "magnitude", spec.corruption_magnitude);
      config.glitches.push_back(spec);
    }
  }
  if (const auto it = root.find("foreign"); it != root.end() && !it->is_null()) {
    CheckKeys(*it, {"source", "n", "distance", "spread", "path", "label_column", "class"}, "foreign");
    ForeignConfig foreign;
    const auto source = Get<std::string>(*it, "source", "cluster");
    if (source == "cluster") {
      foreign.kind = ForeignConfig::Kind::kCluster;
    } else if (source == "csv") {
      foreign.kind = ForeignConfig::Kind::kCsv;
    } else {
      throw ValidationError("config: foreign.source must be 'cluster' or 'csv'");
    }
    foreign.n = Get<std::size_t>(*it, "n", foreign.n);
    foreign.distance = Get<double>(*it, "distance", foreign.distance);
    foreign.spread = Get<double>(*it, "spread", foreign.spread);
    foreign.path = Get<std::string>(*it, "path", "");
    foreign.label_column = Get<std::string>(*it, "label_column", foreign.label_column);
    foreign.foreign_class = Get<int>(*it, "class", 0);
    config.foreign = foreign;
  }
  if (const auto it = root.find("model"); it != root.end()) {
    CheckKeys(*it, {"architecture", "hidden_units", "learning_rate", "epochs", "batch_size", "lr_decay"}, "model");
    config.model.architecture = ParseArchitecture(Get<std::string>(*it, "architecture", "logistic"));
    config.model.hidden_units = Get<int>(*it, "hidden_units", config.model.hidden_units);
    config.model.learning_rate = Get<double>(*it, "learning_rate", config.model.learning_rate);
    config.model.epochs = Get<int>(*it, "epochs", config.model.epochs);
    config.model.batch_size = Get<int>(*it, "batch_size", config.model.batch_size);
    config.model.lr_decay = Get<double>(*it, "lr_decay", config.model.lr_decay);
  }
  if (const auto it = root.find("influence"); it != root.end()) {
    CheckKeys(*it, {"mode"}, "influence");
    config.influence_mode = ParseInfluenceMode(Get<std::string>(*it, "mode", "paper"));
  }
  if (const auto it = root.find("signals"); it != root.end()) {
    CheckKeys(*it, {"kinds", "gd_class_condition_on_train_label", "per_epoch"}, "signals");
    if (const auto kinds = it->find("kinds"); kinds != it->end()) {
      config.signals.clear();
      for (const auto& kind : *kinds) config.signals.push_back(ParseSignalKind(kind.get<std::string>()));
    }
    config.gd_class_condition_on_train_label = Get<bool>(*it, "gd_class_condition_on_train_label", false);
    config.per_epoch = Get<bool>(*it, "per_epoch", true);
  }
  if (const auto it = root.find("sweep"); it != root.end()) {
    CheckKeys(*it, {"ratios", "seeds"}, "sweep");
    config.ratios = Get<std::vector<double>>(*it, "ratios", {});
    config.seeds = Get<std::vector<std::uint64_t>>(*it, "seeds", {});
  }
  if (const auto it = root.find("output"); it != root.end()) {
    CheckKeys(*it, {"dir", "record_runtime"}, "output");
    config.output_dir = Get<std::string>(*it, "dir", config.output_dir.string());
    config.record_runtime = Get<bool>(*it, "record_runtime", false);
  }
  CheckSections(config);
  return config;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

std::string ToJson(const ExperimentConfig& config) {
  OrderedJson root;
  root["name"] = config.name;
  OrderedJson data;
  data["source"] = config.data.kind == DataSourceConfig::Kind::kCsv ? "csv" : "blobs";
  data["n"] = config.data.n;
  data["d"] = config.data.d;
  data["k"] = config.data.k;
  data["separation"] = config.data.separation;
  data["seed"] = OptionalJson(config.data.seed);
  data["path"] = config.data.path.string();
  data["label_column"] = config.data.label_column;
  root["data"] = data;
  root["subsample"] = {{"fraction", config.subsample_fraction},
                       {"order", config.subsample_order == SubsampleOrder::kAfterSplit ? "after_split" : "before_split"}};
  root["split"] = {{"train_fraction", config.train_fraction}};
  OrderedJson glitches = OrderedJson::array();
  for (const auto& spec : config.glitches) {
    OrderedJson g;
    g["type"] = std::string(ToString(spec.glitch_type));
    g["epsilon"] = spec.epsilon;
    g["source_class"] = OptionalJson(spec.source_class);
    g["target_class"] = OptionalJson(spec.target_class);
    g["corruption"] = spec.corruption ? OrderedJson(std::string(ToString(*spec.corruption))) : OrderedJson(nullptr);
    g["magnitude"] = spec.corruption_magnitude;
    glitches.push_back(g);
  }
  root["glitches"] = glitches;
  if (config.foreign) {
    OrderedJson foreign;
    foreign["source"] = config.foreign->kind == ForeignConfig::Kind::kCsv ? "csv" : "cluster";
    foreign["n"] = config.foreign->n;
    foreign["distance"] = config.foreign->distance;
    foreign["spread"] = config.foreign->spread;
    foreign["path"] = config.foreign->path.string();
    foreign["label_column"] = config.foreign->label_column;
    foreign["class"] = config.foreign->foreign_class;
    root["foreign"] = foreign;
  } else {
    root["foreign"] = nullptr;
  }
  OrderedJson model;
  model["architecture"] = std::string(ToString(config.model.architecture));
  model["hidden_units"] = config.model.hidden_units;
  model["learning_rate"] = config.model.learning_rate;
  model["epochs"] = config.model.epochs;
  model["batch_size"] = config.model.batch_size;
  model["lr_decay"] = config.model.lr_decay;
  root["model"] = model;
  root["influence"] = {{"mode", std::string(ToString(config.influence_mode))}};
  OrderedJson kinds = OrderedJson::array();
  for (const auto kind : config.signals) kinds.push_back(std::string(ToString(kind)));
  OrderedJson signals;
  signals["kinds"] = kinds;
  signals["gd_class_condition_on_train_label"] = config.gd_class_condition_on_train_label;
  signals["per_epoch"] = config.per_epoch;
  root["signals"] = signals;
  root["seed"] = config.seed;
  OrderedJson sweep;
  sweep["ratios"] = config.ratios;
  sweep["seeds"] = config.seeds;
  root["sweep"] = sweep;
  OrderedJson output;
  output["dir"] = config.output_dir.string();
  output["record_runtime"] = config.record_runtime;
  root["output"] = output;
  return root.dump(2) + "\n";
}

std::string ResultsHeader() { return "dataset,model,glitch_type,ratio,seed,signal,epoch_scope,f1,runtime_ms"; }

std::string FormatResultRow(const ResultRow& row) {
  std::ostringstream out;
  out << row.dataset << ',' << row.model << ',' << row.glitch_type << ',' << csv::FormatDouble(row.ratio) << ','
      << row.seed << ',' << row.signal << ',' << row.epoch_scope << ',' << csv::FormatDouble(row.f1) << ','
      << row.runtime_ms;
  return out.str();
}

void WriteResultsCsv(const std::vector<ResultRow>& rows, const std::filesystem::path& path,
                     const std::string& upstream_digest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  if (!upstream_digest.empty()) out << "# upstream: " << upstream_digest << '\n';
  out << ResultsHeader() << '\n';
  for (const auto& row : rows) out << FormatResultRow(row) << '\n';
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

std::vector<ResultRow> ReadResultsCsv(const std::filesystem::path& path) {
  const auto table = csv::Read(path);
  if (table.header.size() != 9) throw ValidationError(path.string() + " is not a result table");
  std::vector<ResultRow> rows;
  for (const auto& r : table.rows) {
    ResultRow row;
    row.dataset = r[0];
    row.model = r[1];
    row.glitch_type = r[2];
    row.ratio = csv::ParseDouble(r[3], "ratio");
    row.seed = static_cast<std::uint64_t>(csv::ParseInt(r[4], "seed"));
    row.signal = r[5];
    row.epoch_scope = r[6];
    row.f1 = csv::ParseDouble(r[7], "f1");
    row.runtime_ms = csv::ParseInt(r[8], "runtime_ms");
    rows.push_back(row);
  }
  return rows;
}

Dataset IngestSource(const ExperimentConfig& config, const StageSeeds& seeds) {
  if (config.data.kind == DataSourceConfig::Kind::kCsv) return LoadCsv(config.data.path, config.data.label_column);
  return MakeBlobs(config.data.n, config.data.d, config.data.k, config.data.separation, seeds.data);
}

Dataset SubsampleSource(const Dataset& source, const ExperimentConfig& config, const StageSeeds& seeds) {
  if (config.subsample_order == SubsampleOrder::kAfterSplit || config.subsample_fraction == 1.0) return source;
  return StratifiedSubsample(source, config.subsample_fraction, seeds.subsample);
}

SplitPair SplitSource(const Dataset& subsampled, const ExperimentConfig& config, const StageSeeds& seeds) {
  auto split = StratifiedSplit(subsampled, config.train_fraction, seeds.split);
  if (config.subsample_order == SubsampleOrder::kAfterSplit && config.subsample_fraction < 1.0) {
    split.train = StratifiedSubsample(split.train, config.subsample_fraction, seeds.subsample);
    split.validation = StratifiedSubsample(split.validation, config.subsample_fraction, Rng::Derive(seeds.subsample, 1));
  }
  return split;
}

std::optional<Dataset> BuildForeign(const ExperimentConfig& config, const Dataset& host, const StageSeeds& seeds) {
  if (!config.foreign) return std::nullopt;
  const auto& foreign = *config.foreign;
  if (foreign.kind == ForeignConfig::Kind::kCsv) return LoadCsv(foreign.path, foreign.label_column);
  // Seeded random direction from the host mean, placed `distance` beyond the
  // farthest host sample.
  const Eigen::RowVectorXd mean = host.features.colwise().mean();
  double radius = 0.0;
  for (Eigen::Index r = 0; r < host.features.rows(); ++r) radius = std::max(radius, (host.features.row(r) - mean).norm());
  Rng rng(Rng::Derive(seeds.foreign, "direction"));
  Eigen::VectorXd direction(static_cast<Eigen::Index>(host.dims()));
  do {
    for (Eigen::Index j = 0; j < direction.size(); ++j) direction[j] = rng.normal();
  } while (direction.norm() == 0.0);
  direction.normalize();
  const Eigen::VectorXd center = mean.transpose() + (radius + foreign.distance) * direction;
  return MakeCluster(foreign.n, std::vector<double>(center.begin(), center.end()), foreign.spread, seeds.foreign);
}

Contaminated ContaminateTrain(const Dataset& train, const ExperimentConfig& config, const StageSeeds& seeds,
                              const Dataset* foreign) {
  Contaminated current{train, {}};
  for (std::size_t g = 0; g < config.glitches.size(); ++g) {
    GlitchSpec spec = config.glitches[g];
    spec.seed = seeds.Glitch(g);
    if (spec.glitch_type == GlitchType::kFarCa && config.foreign && !spec.source_class) {
      spec.source_class = config.foreign->foreign_class;
    }
    auto next = Inject(current.data, spec, foreign);
    next.errors = g == 0 ? next.errors : ChainErrorTables(current.errors, next.errors);
    current = std::move(next);
  }
  return current;
}

ModelConfig ModelConfigFor(const ExperimentConfig& config, const StageSeeds& seeds) {
  ModelConfig model = config.model;
  model.seed = seeds.model;
  return model;
}

std::vector<SignalRanking> ComputeRankings(const InfluenceTensor& tensor, const Dataset& train,
                                           const Dataset& validation, const ExperimentConfig& config) {
  std::vector<SignalRanking> rankings;
  for (const auto kind : config.signals) {
    rankings.push_back(ComputeSignal(kind, tensor, EpochScope::Cumulative(), train.labels, validation.labels,
                                     config.gd_class_condition_on_train_label));
    if (!config.per_epoch) continue;
    for (int t = 0; t < tensor.epochs(); ++t) {
      rankings.push_back(ComputeSignal(kind, tensor, EpochScope::Epoch(t), train.labels, validation.labels,
                                       config.gd_class_condition_on_train_label));
    }
  }
  return rankings;
}

std::vector<ResultRow> ScoreRankings(const std::vector<SignalRanking>& rankings, const ErrorTable& truth,
                                     const ExperimentConfig& config, std::uint64_t run_seed) {
  std::vector<ResultRow> rows;
  for (const auto& ranking : rankings) {
    const auto detection = F1AtKnownRatio(ranking, truth, run_seed);
    ResultRow row;
    row.dataset = DatasetName(config);
    row.model = std::string(ToString(config.model.architecture));
    row.glitch_type = detection.glitch_type;
    row.ratio = config.glitches.size() == 1 ? config.glitches.front().epsilon : detection.glitch_ratio;
    row.seed = run_seed;
    row.signal = std::string(ToString(ranking.signal));
    row.epoch_scope = ranking.scope.ToString();
    row.f1 = detection.f1;
    rows.push_back(row);
  }
  return rows;
}

ExperimentOutcome RunExperiment(const ExperimentConfig& config, std::uint64_t run_seed) {
  config.Validate();
  const auto start = std::chrono::steady_clock::now();
  const auto seeds = SeedsFor(config, run_seed);
  ExperimentOutcome outcome;
  const auto source = IngestSource(config, seeds);
  outcome.split = SplitSource(SubsampleSource(source, config, seeds), config, seeds);
  const auto foreign = BuildForeign(config, outcome.split.train, seeds);
  outcome.contaminated = ContaminateTrain(outcome.split.train, config, seeds, foreign ? &*foreign : nullptr);
  outcome.trail = Train(outcome.contaminated.data, ModelConfigFor(config, seeds));
  outcome.tensor = TracIn(outcome.trail, outcome.contaminated.data, outcome.split.validation, config.influence_mode);
  outcome.rankings = ComputeRankings(outcome.tensor, outcome.contaminated.data, outcome.split.validation, config);
  outcome.rows = ScoreRankings(outcome.rankings, outcome.contaminated.errors, config, run_seed);
  if (config.record_runtime) {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    for (auto& row : outcome.rows) row.runtime_ms = elapsed.count();
  }
  return outcome;
}

}  // namespace glitchscope
