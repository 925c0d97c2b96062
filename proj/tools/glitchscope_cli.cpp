// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

// glitchscope: inject data glitches, train with checkpoints, compute TracIn
// influence and rank training samples by influence signals.
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "glitchscope/dataset.hpp"
#include "glitchscope/error.hpp"
#include "glitchscope/evaluation.hpp"
#include "glitchscope/experiment.hpp"
#include "glitchscope/glitch.hpp"
#include "glitchscope/influence.hpp"
#include "glitchscope/model.hpp"
#include "glitchscope/orchestrator.hpp"
#include "glitchscope/signals.hpp"
#include "glitchscope/sweep.hpp"

namespace fs = std::filesystem;
using namespace glitchscope;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

void AddCommon(CLI::App* command, Common& common, const std::string& out_help) {
  command->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  command->add_option("--out", common.out, out_help);
  command->add_option("--config", common.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
}

std::optional<ExperimentConfig> MaybeConfig(const Common& common) {
  if (common.config.empty()) return std::nullopt;
  return LoadConfig(common.config);
}

fs::path RequireOut(const Common& common, const char* fallback) {
  return common.out.empty() ? fs::path(fallback) : fs::path(common.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glitchscope: influence-based detection of data glitches"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "glitchscope 0.1.0");

  // generate
  Common generate_opts;
  std::size_t gen_n = 200, gen_d = 2;
  int gen_k = 2;
  double gen_separation = 6.0;
  std::string gen_csv, gen_label = "label";
  auto* generate = app.add_subcommand("generate", "Synthesize Gaussian blobs, or ingest a CSV, into a persisted dataset");
  AddCommon(generate, generate_opts, "Output dataset CSV (default dataset.csv)");
  generate->add_option("--n", gen_n, "Number of samples")->capture_default_str();
  generate->add_option("--d", gen_d, "Feature dimensions")->capture_default_str();
  generate->add_option("--k", gen_k, "Number of classes")->capture_default_str();
  generate->add_option("--separation", gen_separation, "Minimum distance between cluster centers")->capture_default_str();
  generate->add_option("--from-csv", gen_csv, "Ingest this CSV (standardized) instead of generating")->check(CLI::ExistingFile);
  generate->add_option("--label-column", gen_label, "Label column of --from-csv")->capture_default_str();

  // split
  Common split_opts;
  std::string split_data;
  double split_fraction = 0.8, split_subsample = 1.0;
  auto* split = app.add_subcommand("split", "Stratified subsample and train/validation split");
  AddCommon(split, split_opts, "Output directory (default .)");
  split->add_option("--data", split_data, "Persisted dataset CSV")->required()->check(CLI::ExistingFile);
  split->add_option("--train-fraction", split_fraction, "Train share per class")->capture_default_str();
  split->add_option("--subsample", split_subsample, "Stratified subsample fraction applied first")->capture_default_str();

  // inject
  Common inject_opts;
  std::string inject_data, inject_type = "uniform_noise", inject_foreign, inject_corruption = "brightness";
  double inject_epsilon = 0.1, inject_magnitude = 5.0;
  std::optional<int> inject_source, inject_target;
  int inject_foreign_class = 0;
  auto* inject = app.add_subcommand("inject", "Inject one glitch type into a training set");
  AddCommon(inject, inject_opts, "Output directory for data.csv and errors.csv (default .)");
  inject->add_option("--data", inject_data, "Training dataset CSV")->required()->check(CLI::ExistingFile);
  inject->add_option("--type", inject_type,
                     "uniform_noise | class_dependent_noise | near_ca | far_ca | outlier")->capture_default_str();
  inject->add_option("--epsilon,--ratio", inject_epsilon, "Flip probability or target glitch ratio")->capture_default_str();
  inject->add_option("--source-class,--victim-class", inject_source, "Source (noise) or victim (near_ca) class");
  inject->add_option("--target-class", inject_target, "Target class for class-dependent noise");
  inject->add_option("--foreign", inject_foreign, "Foreign dataset CSV for far_ca")->check(CLI::ExistingFile);
  inject->add_option("--foreign-class", inject_foreign_class, "Class of the foreign dataset to draw")->capture_default_str();
  inject->add_option("--corruption", inject_corruption, "brightness | stripe")->capture_default_str();
  inject->add_option("--magnitude", inject_magnitude, "Outlier corruption magnitude")->capture_default_str();

  // train
  Common train_opts;
  std::string train_data;
  ModelConfig model;
  std::string train_arch = "logistic";
  auto* train = app.add_subcommand("train", "Train with SGD and record the checkpoint trail");
  AddCommon(train, train_opts, "Output trail file (default trail.bin)");
  train->add_option("--data", train_data, "Training dataset CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--arch", train_arch, "logistic | mlp")->capture_default_str();
  train->add_option("--hidden", model.hidden_units, "Hidden units (mlp)")->capture_default_str();
  train->add_option("--lr", model.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--epochs", model.epochs, "Epochs")->capture_default_str();
  train->add_option("--batch-size", model.batch_size, "Batch size")->capture_default_str();
  train->add_option("--lr-decay", model.lr_decay, "Per-epoch learning-rate decay factor")->capture_default_str();

  // influence
  Common influence_opts;
  std::string inf_trail, inf_train, inf_validation, inf_mode = "paper", inf_csv;
  auto* influence = app.add_subcommand("influence", "Compute the TracIn influence tensor");
  AddCommon(influence, influence_opts, "Output tensor file (default influence.bin)");
  influence->add_option("--trail", inf_trail, "Checkpoint trail")->required()->check(CLI::ExistingFile);
  influence->add_option("--train", inf_train, "Training dataset the trail was trained on")->required()->check(CLI::ExistingFile);
  influence->add_option("--validation", inf_validation, "Validation dataset")->required()->check(CLI::ExistingFile);
  influence->add_option("--mode", inf_mode, "paper | checkpoint")->capture_default_str();
  influence->add_option("--csv", inf_csv, "Also export cumulative values to this CSV");

  // signals
  Common signals_opts;
  std::string sig_tensor, sig_train, sig_validation;
  std::vector<std::string> sig_kinds{"SI", "MI", "AAI", "GDclass"};
  bool sig_per_epoch = false, sig_condition = false;
  auto* signals = app.add_subcommand("signals", "Rank training samples by influence signals");
  AddCommon(signals, signals_opts, "Output rankings CSV (default rankings.csv)");
  signals->add_option("--tensor", sig_tensor, "Influence tensor")->required()->check(CLI::ExistingFile);
  signals->add_option("--train", sig_train, "Training dataset (labels for GD-class)")->required()->check(CLI::ExistingFile);
  signals->add_option("--validation", sig_validation, "Validation dataset")->required()->check(CLI::ExistingFile);
  signals->add_option("--signals", sig_kinds, "Signals to compute")->capture_default_str();
  signals->add_flag("--per-epoch", sig_per_epoch, "Also rank every epoch slice");
  signals->add_flag("--gd-condition-on-train-label", sig_condition, "GD-class: use the train sample's own class");

  // evaluate
  Common evaluate_opts;
  std::string eval_rankings, eval_errors, eval_dataset = "dataset", eval_model = "model";
  auto* evaluate = app.add_subcommand("evaluate", "Known-ratio F1 of rankings against an error table");
  AddCommon(evaluate, evaluate_opts, "Output results CSV (default: stdout)");
  evaluate->add_option("--rankings", eval_rankings, "Rankings CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--errors", eval_errors, "Error table CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--dataset-name", eval_dataset, "Dataset column value")->capture_default_str();
  evaluate->add_option("--model-name", eval_model, "Model column value")->capture_default_str();

  // sweep
  Common sweep_opts;
  std::vector<double> sweep_ratios;
  std::vector<std::uint64_t> sweep_seeds;
  int sweep_workers = 0;
  auto* sweep = app.add_subcommand("sweep", "Glitch-ratio sweep over seeds (workers: GLITCHSCOPE_WORKERS)");
  AddCommon(sweep, sweep_opts, "Output directory (default: config output.dir)");
  sweep->add_option("--ratios", sweep_ratios, "Glitch ratios (overrides config)");
  sweep->add_option("--seeds", sweep_seeds, "Seeds (overrides config)");
  sweep->add_option("--workers", sweep_workers, "Worker threads (overrides GLITCHSCOPE_WORKERS)");

  // run
  Common run_opts;
  auto* run = app.add_subcommand("run", "Run the full pipeline with stage caching");
  AddCommon(run, run_opts, "Output directory (default: config output.dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) {
      const auto data = gen_csv.empty() ? MakeBlobs(gen_n, gen_d, gen_k, gen_separation, generate_opts.seed)
                                        : LoadCsv(gen_csv, gen_label);
      const auto path = RequireOut(generate_opts, "dataset.csv");
      WriteDatasetCsv(data, path);
      std::cout << "wrote " << path.string() << " (n=" << data.size() << ", d=" << data.dims()
                << ", k=" << data.class_count << ")\n";
    } else if (split->parsed()) {
      auto data = ReadDatasetCsv(split_data);
      const auto digest = DatasetDigest(data);
      if (split_subsample < 1.0) data = StratifiedSubsample(data, split_subsample, split_opts.seed);
      const auto pair = StratifiedSplit(data, split_fraction, split_opts.seed);
      const auto dir = RequireOut(split_opts, ".");
      fs::create_directories(dir);
      WriteDatasetCsv(pair.train, dir / "train.csv", digest);
      WriteDatasetCsv(pair.validation, dir / "validation.csv", digest);
      std::cout << "train " << pair.train.size() << ", validation " << pair.validation.size() << "\n";
    } else if (inject->parsed()) {
      const auto data = ReadDatasetCsv(inject_data);
      GlitchSpec spec;
      spec.glitch_type = ParseGlitchType(inject_type);
      spec.epsilon = inject_epsilon;
      spec.source_class = inject_source;
      spec.target_class = inject_target;
      spec.corruption = ParseCorruption(inject_corruption);
      spec.corruption_magnitude = inject_magnitude;
      spec.seed = inject_opts.seed;
      std::optional<Dataset> foreign;
      if (spec.glitch_type == GlitchType::kFarCa) {
        if (inject_foreign.empty()) throw ValidationError("far_ca needs --foreign");
        foreign = ReadDatasetCsv(inject_foreign);
        spec.source_class = inject_foreign_class;
      }
      const auto result = Inject(data, spec, foreign ? &*foreign : nullptr);
      const auto dir = RequireOut(inject_opts, ".");
      fs::create_directories(dir);
      WriteDatasetCsv(result.data, dir / "data.csv", DatasetDigest(data));
      WriteErrorTableCsv(result.errors, dir / "errors.csv", DatasetDigest(result.data));
      std::cout << "glitched " << result.errors.GlitchedCount() << " of " << result.data.size() << " samples\n";
    } else if (train->parsed()) {
      const auto data = ReadDatasetCsv(train_data);
      model.architecture = ParseArchitecture(train_arch);
      model.seed = train_opts.seed;
      const auto trail = Train(data, model);
      const auto path = RequireOut(train_opts, "trail.bin");
      WriteTrail(trail, path);
      std::cout << "trained " << trail.epochs() << " epochs, final loss " << trail.epoch_losses.back()
                << ", train accuracy " << EvaluateAccuracy(trail, data) << "\n";
    } else if (influence->parsed()) {
      const auto trail = ReadTrail(inf_trail);
      const auto train_set = ReadDatasetCsv(inf_train);
      const auto validation = ReadDatasetCsv(inf_validation);
      if (trail.train_digest != DatasetDigest(train_set)) {
        throw ValidationError("artifact chain mismatch: the trail was not trained on " + inf_train);
      }
      const auto tensor = TracIn(trail, train_set, validation, ParseInfluenceMode(inf_mode));
      const auto path = RequireOut(influence_opts, "influence.bin");
      WriteInfluenceTensor(tensor, path);
      if (!inf_csv.empty()) WriteInfluenceCsv(tensor, inf_csv);
      std::cout << "influence tensor " << tensor.epochs() << " x " << tensor.train_ids.size() << " x "
                << tensor.val_ids.size() << "\n";
    } else if (signals->parsed()) {
      const auto tensor = ReadInfluenceTensor(sig_tensor);
      const auto train_set = ReadDatasetCsv(sig_train);
      const auto validation = ReadDatasetCsv(sig_validation);
      if (tensor.train_digest != DatasetDigest(train_set) || tensor.validation_digest != DatasetDigest(validation)) {
        throw ValidationError("artifact chain mismatch: the tensor does not belong to these datasets");
      }
      ExperimentConfig config;
      config.signals.clear();
      for (const auto& kind : sig_kinds) config.signals.push_back(ParseSignalKind(kind));
      config.per_epoch = sig_per_epoch;
      config.gd_class_condition_on_train_label = sig_condition;
      const auto path = RequireOut(signals_opts, "rankings.csv");
      WriteRankingsCsv(ComputeRankings(tensor, train_set, validation, config), path, tensor.train_digest);
      std::cout << "wrote " << path.string() << "\n";
    } else if (evaluate->parsed()) {
      const auto rows = EvaluateArtifacts(eval_rankings, eval_errors, eval_dataset, eval_model, evaluate_opts.seed, 0.0);
      if (evaluate_opts.out.empty()) {
        std::cout << ResultsHeader() << '\n';
        for (const auto& row : rows) std::cout << FormatResultRow(row) << '\n';
      } else {
        std::string upstream;
        ReadErrorTableCsv(eval_errors, &upstream);
        WriteResultsCsv(rows, evaluate_opts.out, upstream);
      }
    } else if (sweep->parsed()) {
      if (sweep_opts.config.empty()) throw ValidationError("sweep needs --config");
      auto config = LoadConfig(sweep_opts.config);
      if (!sweep_opts.out.empty()) config.output_dir = sweep_opts.out;
      if (!sweep_ratios.empty()) config.ratios = sweep_ratios;
      if (!sweep_seeds.empty()) config.seeds = sweep_seeds;
      if (config.seeds.empty()) config.seeds = {0, 1, 2, 3, 4};
      if (config.ratios.empty()) throw ValidationError("sweep needs ratios (config sweep.ratios or --ratios)");
      fs::create_directories(config.output_dir);
      const auto results_path = config.output_dir / "sweep_results.csv";
      std::ofstream results(results_path, std::ios::binary);
      if (!results) throw RuntimeFailure("cannot write " + results_path.string());
      results << ResultsHeader() << '\n';
      const int workers = sweep_workers > 0 ? sweep_workers : WorkerCountFromEnv();
      const auto sweep_result = RatioSweep(
          config, config.ratios, config.seeds,
          [&](const ResultRow& row) { results << FormatResultRow(row) << '\n' << std::flush; }, workers);
      WritePlotData(sweep_result.cells, config.output_dir / "plot_data.csv");
      for (const auto& cell : sweep_result.cells) {
        std::cout << cell.glitch_type << " ratio=" << cell.ratio << " " << cell.signal << " mean_f1=" << cell.mean_f1
                  << "\n";
      }
    } else if (run->parsed()) {
      if (run_opts.config.empty()) throw ValidationError("run needs --config");
      auto config = LoadConfig(run_opts.config);
      if (!run_opts.out.empty()) config.output_dir = run_opts.out;
      if (run->count("--seed") > 0) config.seed = run_opts.seed;
      RunPipeline(config, [](const StageReport& stage) {
        std::cout << "[" << stage.name << "] " << (stage.skipped ? "skipped (cached)" : "done") << "\n";
      });
      std::cout << "results: " << (config.output_dir / "results.csv").string() << "\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
