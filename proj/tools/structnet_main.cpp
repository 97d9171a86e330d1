// Command-line front end: synth, train, eval, experiment, inspect.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "structnet/config.hpp"
#include "structnet/experiment.hpp"
#include "structnet/io.hpp"
#include "structnet/metrics.hpp"
#include "structnet/model_io.hpp"
#include "structnet/mtl.hpp"

namespace fs = std::filesystem;
using namespace structnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOpts {
  std::string preset_name = "full";
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--preset", opts.preset_name,
                  "built-in preset: full or synth")
      ->capture_default_str();
  cmd->add_option("--config", opts.config_file,
                  "key=value config file applied over the preset");
  cmd->add_option("--set", opts.overrides,
                  "key=value override, may be repeated");
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg = preset(opts.preset_name);
  if (!opts.config_file.empty()) apply_config_file(cfg, opts.config_file);
  for (const std::string& o : opts.overrides) apply_override(cfg, o);
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write: " + path.string());
  out << content;
  if (!out) throw DataError("failed writing: " + path.string());
}

int cmd_synth(const CommonOpts& opts, const std::string& out_dir) {
  RunConfig cfg = resolve_config(opts);
  SynthParams params = cfg.synth;
  params.img_side = cfg.img_side;
  params.validate();

  const ShapeTemplate tmpl = ShapeTemplate::face10();
  Rng gen_rng(mix_seed(cfg.seed, 10));
  Dataset ds = synth_generate(tmpl, params, gen_rng);
  if (cfg.synth_strip_input_frac > 0.0 || cfg.synth_strip_label_frac > 0.0) {
    Rng strip_rng(mix_seed(cfg.seed, 11));
    ds = strip_mixed(ds, cfg.synth_strip_input_frac,
                     cfg.synth_strip_label_frac, strip_rng);
  }
  const DatasetCounts counts = save_dataset_dir(out_dir, ds, cfg.img_side);
  std::cout << "wrote " << out_dir << ": full=" << counts.full
            << " input_only=" << counts.input_only
            << " label_only=" << counts.label_only << "\n";
  return kExitOk;
}

int cmd_train(const CommonOpts& opts, const std::string& model_out,
              const std::string& log_out) {
  RunConfig cfg = resolve_config(opts);
  cfg.validate();
  if (cfg.train_dir.empty()) {
    throw ConfigError("train: train_dir must be set");
  }

  Dataset train_set =
      load_dataset_dir(cfg.train_dir, cfg.img_side, cfg.n_points);
  Dataset valid_set;
  if (!cfg.valid_dir.empty()) {
    valid_set = load_dataset_dir(cfg.valid_dir, cfg.img_side, cfg.n_points);
  } else if (cfg.valid_count > 0) {
    Rng split_rng(mix_seed(cfg.data_seed, 14));
    auto [tr, va] = split_dataset(train_set, cfg.valid_count, split_rng);
    train_set = std::move(tr);
    valid_set = std::move(va);
  } else {
    throw ConfigError("train: set valid_dir or a positive valid_count");
  }

  Framework fw = build_framework(cfg.framework, cfg.corruption_level);
  Rng init_rng(cfg.seed);
  init_params(fw.store, init_rng);

  const TrainResult result = train(fw, train_set, cfg.resolved_schedules(),
                                   cfg.optimizer, valid_set, cfg.seed);

  ModelMeta meta;
  meta.spec = cfg.framework;
  meta.seed = cfg.seed;
  meta.best_epoch = result.best_epoch;
  meta.best_valid_mse = result.best_valid_mse;
  save_model(model_out, meta, result.best_params);
  write_file(log_out, result.log.to_csv());

  std::cout << "best_epoch=" << result.best_epoch
            << " best_valid_mse=" << format_double(result.best_valid_mse)
            << "\n";
  std::cout << "model: " << model_out << "\nlog: " << log_out << "\n";
  return kExitOk;
}

int cmd_eval(const CommonOpts& opts, const std::string& model_path,
             const std::string& data_dir, const std::string& mean_shape_from,
             const std::string& out_prefix) {
  RunConfig cfg = resolve_config(opts);
  const Dataset test = load_dataset_dir(data_dir, cfg.img_side, cfg.n_points);

  Predictor pred;
  if (!mean_shape_from.empty()) {
    const Dataset train =
        load_dataset_dir(mean_shape_from, cfg.img_side, cfg.n_points);
    pred = mean_shape(train);
  } else {
    if (model_path.empty()) {
      throw ConfigError("eval: give a model file or --mean-shape-from");
    }
    LoadedModel model = load_model(model_path);
    if (model.meta.spec.dims.front() != test.d_x ||
        model.meta.spec.dims.back() != test.d_y()) {
      throw DataError("eval: model dims " +
                      std::to_string(model.meta.spec.dims.front()) + "->" +
                      std::to_string(model.meta.spec.dims.back()) +
                      " do not match dataset " + std::to_string(test.d_x) +
                      "->" + std::to_string(test.d_y()));
    }
    Framework fw = build_framework(model.meta.spec, cfg.corruption_level);
    assign_params(fw.store, model.params);
    pred = main_predictor(fw.main, model.params);
  }

  const EvalReport report = evaluate(pred, test, cfg.eyes, cfg.img_side);
  write_file(out_prefix + "_per_sample.csv", report.per_sample_csv());
  write_file(out_prefix + "_cdf.csv", report.cdf_csv());
  std::cout << report.summary() << "\n";
  return kExitOk;
}

int cmd_experiment(const CommonOpts& opts, const std::string& out_csv) {
  RunConfig cfg = resolve_config(opts);
  cfg.validate();

  ExperimentResult result;
  try {
    run_experiment(cfg, result, &std::cerr);
  } catch (...) {
    // Keep whatever completed so partial results are not lost.
    if (!out_csv.empty()) write_file(out_csv, result.to_csv());
    std::cerr << "experiment aborted; partial results in "
              << (out_csv.empty() ? "(no output file)" : out_csv) << "\n";
    throw;
  }
  if (!out_csv.empty()) write_file(out_csv, result.to_csv());
  std::cout << result.to_csv();
  std::cout << "mean_shape_baseline: valid_mse="
            << format_double(result.baseline_valid_mse)
            << " auc=" << format_double(result.baseline_auc)
            << " cdf_0.1=" << format_double(result.baseline_cdf_0_1) << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& model_path) {
  const LoadedModel model = load_model(model_path);
  std::cout << describe_model(model);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-task structured-output network trainer"};
  app.require_subcommand(1);

  CommonOpts synth_opts, train_opts, eval_opts, exp_opts;
  std::string synth_out, model_out = "model.snmf", log_out = "train_log.csv";
  std::string eval_model, eval_data, eval_baseline, eval_prefix = "eval";
  std::string exp_out = "experiment.csv", inspect_model;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, synth_opts);
  synth->add_option("--out", synth_out, "output dataset directory")
      ->required();

  CLI::App* train = app.add_subcommand("train", "train one configuration");
  add_common(train, train_opts);
  train->add_option("--model-out", model_out, "model file to write")
      ->capture_default_str();
  train->add_option("--log-out", log_out, "training log CSV to write")
      ->capture_default_str();

  CLI::App* eval = app.add_subcommand("eval", "evaluate a model on a dataset");
  add_common(eval, eval_opts);
  eval->add_option("--model", eval_model, "trained model file");
  eval->add_option("--data", eval_data, "test dataset directory")->required();
  eval->add_option("--mean-shape-from", eval_baseline,
                   "evaluate the mean-shape baseline of this train dataset "
                   "instead of a model");
  eval->add_option("--out-prefix", eval_prefix,
                   "prefix for the per-sample and CDF CSVs")
      ->capture_default_str();

  CLI::App* experiment = app.add_subcommand(
      "experiment", "train all configured modes from shared initial weights");
  add_common(experiment, exp_opts);
  experiment->add_option("--out", exp_out, "result table CSV")
      ->capture_default_str();

  CLI::App* inspect = app.add_subcommand("inspect", "print a model header");
  inspect->add_option("model", inspect_model, "model file")->required();

  try {
    app.parse(argc, argv);
    if (synth->parsed()) return cmd_synth(synth_opts, synth_out);
    if (train->parsed()) return cmd_train(train_opts, model_out, log_out);
    if (eval->parsed()) {
      return cmd_eval(eval_opts, eval_model, eval_data, eval_baseline,
                      eval_prefix);
    }
    if (experiment->parsed()) return cmd_experiment(exp_opts, exp_out);
    if (inspect->parsed()) return cmd_inspect(inspect_model);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
