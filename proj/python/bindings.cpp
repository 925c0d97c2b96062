// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "glitchscope/dataset.hpp"
#include "glitchscope/evaluation.hpp"
#include "glitchscope/experiment.hpp"
#include "glitchscope/glitch.hpp"
#include "glitchscope/influence.hpp"
#include "glitchscope/model.hpp"
#include "glitchscope/orchestrator.hpp"
#include "glitchscope/signals.hpp"
#include "glitchscope/sweep.hpp"

namespace py = pybind11;
using namespace glitchscope;

namespace {

EpochScope ScopeFrom(const std::optional<int>& epoch) { return epoch ? EpochScope::Epoch(*epoch) : EpochScope::Cumulative(); }

py::dict RowToDict(const ResultRow& row) {
  py::dict out;
  out["dataset"] = row.dataset;
  out["model"] = row.model;
  out["glitch_type"] = row.glitch_type;
  out["ratio"] = row.ratio;
  out["seed"] = row.seed;
  out["signal"] = row.signal;
  out["epoch_scope"] = row.epoch_scope;
  out["f1"] = row.f1;
  out["runtime_ms"] = row.runtime_ms;
  return out;
}

py::list RowsToList(const std::vector<ResultRow>& rows) {
  py::list out;
  for (const auto& row : rows) out.append(RowToDict(row));
  return out;
}

}  // namespace

PYBIND11_MODULE(_glitchscope, m) {
  m.doc() = "Influence-based data glitch detection";

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](FeatureMatrix features, std::vector<int> labels, int class_count,
                       std::optional<std::vector<SampleId>> ids) {
             Dataset data;
             data.features = std::move(features);
             data.labels = std::move(labels);
             data.class_count = class_count;
             if (ids) {
               data.sample_ids = std::move(*ids);
             } else {
               data.sample_ids.resize(data.labels.size());
               for (std::size_t i = 0; i < data.sample_ids.size(); ++i) data.sample_ids[i] = static_cast<SampleId>(i);
             }
             data.Validate();
             return data;
           }),
           py::arg("features"), py::arg("labels"), py::arg("class_count"), py::arg("ids") = py::none())
      .def_readonly("features", &Dataset::features)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("sample_ids", &Dataset::sample_ids)
      .def_readonly("class_count", &Dataset::class_count)
      .def("__len__", &Dataset::size)
      .def("digest", [](const Dataset& d) { return DatasetDigest(d); });

  py::class_<SplitPair>(m, "SplitPair")
      .def_readonly("train", &SplitPair::train)
      .def_readonly("validation", &SplitPair::validation);

  m.def("make_blobs", &MakeBlobs, py::arg("n"), py::arg("d"), py::arg("k"), py::arg("separation"), py::arg("seed"));
  m.def("load_csv", &LoadCsv, py::arg("path"), py::arg("label_column") = "label");
  m.def("stratified_split", &StratifiedSplit, py::arg("data"), py::arg("train_fraction"), py::arg("seed"));
  m.def("stratified_subsample", &StratifiedSubsample, py::arg("data"), py::arg("fraction"), py::arg("seed"));

  py::class_<ErrorTable>(m, "ErrorTable")
      .def("glitched_ids", &ErrorTable::GlitchedIds)
      .def("glitched_count", &ErrorTable::GlitchedCount)
      .def("__len__", [](const ErrorTable& t) { return t.entries.size(); });

  py::class_<Contaminated>(m, "Contaminated")
      .def_readonly("data", &Contaminated::data)
      .def_readonly("errors", &Contaminated::errors);

  m.def(
      "inject",
      [](const Dataset& train, const std::string& type, double epsilon, std::uint64_t seed,
         std::optional<int> source_class, std::optional<int> target_class, std::optional<std::string> corruption,
         double magnitude, const Dataset* foreign) {
        GlitchSpec spec;
        spec.glitch_type = ParseGlitchType(type);
        spec.epsilon = epsilon;
        spec.seed = seed;
        spec.source_class = source_class;
        spec.target_class = target_class;
        if (corruption) spec.corruption = ParseCorruption(*corruption);
        spec.corruption_magnitude = magnitude;
        return Inject(train, spec, foreign);
      },
      py::arg("train"), py::arg("type"), py::arg("epsilon"), py::arg("seed") = 0, py::arg("source_class") = py::none(),
      py::arg("target_class") = py::none(), py::arg("corruption") = py::none(), py::arg("magnitude") = 5.0,
      py::arg("foreign") = nullptr);

  py::class_<CheckpointTrail>(m, "CheckpointTrail")
      .def_property_readonly("epochs", &CheckpointTrail::epochs)
      .def_readonly("train_ids", &CheckpointTrail::train_ids)
      .def_readonly("epoch_losses", &CheckpointTrail::epoch_losses)
      .def_readonly("final_parameters", &CheckpointTrail::final_parameters)
      .def("save", [](const CheckpointTrail& t, const std::filesystem::path& p) { WriteTrail(t, p); })
      .def_static("load", &ReadTrail);

  m.def(
      "train",
      [](const Dataset& data, const std::string& architecture, int hidden_units, double learning_rate, int epochs,
         int batch_size, double lr_decay, std::uint64_t seed) {
        ModelConfig config;
        config.architecture = ParseArchitecture(architecture);
        config.hidden_units = hidden_units;
        config.learning_rate = learning_rate;
        config.epochs = epochs;
        config.batch_size = batch_size;
        config.lr_decay = lr_decay;
        config.seed = seed;
        py::gil_scoped_release release;
        return Train(data, config);
      },
      py::arg("data"), py::arg("architecture") = "logistic", py::arg("hidden_units") = 32,
      py::arg("learning_rate") = 0.1, py::arg("epochs") = 10, py::arg("batch_size") = 32, py::arg("lr_decay") = 1.0,
      py::arg("seed") = 0);
  m.def(
      "accuracy",
      [](const CheckpointTrail& trail, const Dataset& data, std::optional<std::vector<SampleId>> subset) {
        return EvaluateAccuracy(trail, data, subset);
      },
      py::arg("trail"), py::arg("data"), py::arg("subset") = py::none());

  py::class_<InfluenceTensor>(m, "InfluenceTensor")
      .def_property_readonly("epochs", &InfluenceTensor::epochs)
      .def_property_readonly("mode", [](const InfluenceTensor& t) { return std::string(ToString(t.mode)); })
      .def_readonly("train_ids", &InfluenceTensor::train_ids)
      .def_readonly("val_ids", &InfluenceTensor::val_ids)
      .def_readonly("cumulative", &InfluenceTensor::cumulative)
      .def_readonly("cumulative_self", &InfluenceTensor::cumulative_self)
      .def_readonly("per_epoch", &InfluenceTensor::per_epoch)
      .def_readonly("per_epoch_self", &InfluenceTensor::per_epoch_self)
      .def("save", [](const InfluenceTensor& t, const std::filesystem::path& p) { WriteInfluenceTensor(t, p); })
      .def_static("load", &ReadInfluenceTensor);

  m.def(
      "tracin",
      [](const CheckpointTrail& trail, const Dataset& train, const Dataset& validation, const std::string& mode) {
        const auto parsed = ParseInfluenceMode(mode);
        py::gil_scoped_release release;
        return TracIn(trail, train, validation, parsed);
      },
      py::arg("trail"), py::arg("train"), py::arg("validation"), py::arg("mode") = "paper");

  py::class_<SignalRanking>(m, "SignalRanking")
      .def_property_readonly("signal", [](const SignalRanking& r) { return std::string(ToString(r.signal)); })
      .def_property_readonly("scope", [](const SignalRanking& r) { return r.scope.ToString(); })
      .def_readonly("ids", &SignalRanking::ids)
      .def_readonly("scores", &SignalRanking::scores)
      .def_readonly("order", &SignalRanking::order);

  m.def(
      "signal",
      [](const std::string& kind, const InfluenceTensor& tensor, std::optional<int> epoch,
         const std::vector<int>& train_labels, const std::vector<int>& val_labels, bool condition_on_train_label) {
        return ComputeSignal(ParseSignalKind(kind), tensor, ScopeFrom(epoch), train_labels, val_labels,
                             condition_on_train_label);
      },
      py::arg("kind"), py::arg("tensor"), py::arg("epoch") = py::none(), py::arg("train_labels") = std::vector<int>{},
      py::arg("val_labels") = std::vector<int>{}, py::arg("condition_on_train_label") = false);

  m.def(
      "f1_at_known_ratio",
      [](const SignalRanking& ranking, const ErrorTable& truth) { return F1AtKnownRatio(ranking, truth).f1; },
      py::arg("ranking"), py::arg("truth"));
  m.def(
      "spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return SpearmanCorrelation(a, b); },
      py::arg("a"), py::arg("b"));

  m.def(
      "run_experiment",
      [](const std::string& config_json, std::uint64_t seed) {
        const auto config = ParseConfig(config_json);
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = RunExperiment(config, seed).rows;
        }
        return RowsToList(rows);
      },
      py::arg("config_json"), py::arg("seed") = 0, "Runs one in-memory experiment and returns its result rows.");
  m.def(
      "run_pipeline",
      [](const std::string& config_json, std::optional<std::filesystem::path> out) {
        auto config = ParseConfig(config_json);
        if (out) config.output_dir = *out;
        PipelineReport report;
        {
          py::gil_scoped_release release;
          report = RunPipeline(config);
        }
        py::list stages;
        for (const auto& stage : report.stages) stages.append(py::make_tuple(stage.name, stage.skipped));
        py::dict result;
        result["stages"] = stages;
        result["rows"] = RowsToList(report.rows);
        return result;
      },
      py::arg("config_json"), py::arg("out") = py::none());
  m.def(
      "sweep",
      [](const std::string& config_json, const std::vector<double>& ratios, const std::vector<std::uint64_t>& seeds,
         int workers) {
        const auto config = ParseConfig(config_json);
        SweepResult result;
        {
          py::gil_scoped_release release;
          result = RatioSweep(config, ratios, seeds, {}, workers);
        }
        py::list cells;
        for (const auto& cell : result.cells) {
          py::dict c;
          c["glitch_type"] = cell.glitch_type;
          c["ratio"] = cell.ratio;
          c["signal"] = cell.signal;
          c["mean_f1"] = cell.mean_f1;
          c["runs"] = cell.runs;
          cells.append(c);
        }
        return cells;
      },
      py::arg("config_json"), py::arg("ratios"), py::arg("seeds"), py::arg("workers") = 1);
  m.def("canonical_config", [](const std::string& config_json) { return ToJson(ParseConfig(config_json)); },
        py::arg("config_json"));
}
