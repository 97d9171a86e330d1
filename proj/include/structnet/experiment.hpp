#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "structnet/config.hpp"
#include "structnet/metrics.hpp"
#include "structnet/mtl.hpp"

namespace structnet {

// ---------------------------------------------------------------------------
// The four-configuration comparison protocol: per seed, one parameter
// initialization is cloned into every mode so differences come from the
// training scheme alone, then each trained model is evaluated on a shared
// test set next to the mean-shape baseline.
// ---------------------------------------------------------------------------

struct ExperimentDatasets {
  Dataset train;
  Dataset valid;
  Dataset test;
};

/// Datasets for the experiment: loaded from the configured directories when
/// set, otherwise generated synthetically from cfg.data_seed (so they are
/// identical across run seeds). Augmentation samples are appended to the
/// train set as input-only / label-only.
ExperimentDatasets build_experiment_datasets(const RunConfig& cfg);

/// The shared initialization for one seed: every block of the framework
/// drawn with Rng(seed).
ParamStore initial_store_for_seed(const FrameworkSpec& spec,
                                  std::uint64_t seed);

/// Copies parameter values between stores with identical block layouts.
void assign_params(ParamStore& dst, const ParamStore& src);

/// Prediction through the main network with the given parameters.
Predictor main_predictor(Network main, ParamStore params);

struct RunRow {
  std::uint64_t seed = 0;
  RunMode mode = RunMode::Mlp;
  Scalar best_valid_mse = 0.0;
  Scalar auc = 0.0;
  Scalar cdf_0_1 = 0.0;
  int best_epoch = -1;
  bool done = false;
};

struct ModeSummary {
  RunMode mode = RunMode::Mlp;
  Scalar mean_best_valid_mse = 0.0;
  Scalar mean_auc = 0.0;
  Scalar mean_cdf_0_1 = 0.0;
};

struct ExperimentResult {
  std::vector<RunRow> rows;         // seed-major, mode-minor, fixed order
  std::vector<ModeSummary> means;   // one per mode, in configured order
  Scalar baseline_valid_mse = 0.0;  // mean-shape predictor
  Scalar baseline_auc = 0.0;
  Scalar baseline_cdf_0_1 = 0.0;

  /// seed,mode,best_valid_mse,auc,cdf_0_1 rows followed by one mean row per
  /// mode (seed column "mean"). Unfinished rows are omitted.
  std::string to_csv() const;
};

/// Runs every (seed, mode) pair, possibly concurrently (cfg.jobs workers,
/// hardware concurrency when 0). `out` is filled as runs complete so a
/// failure still leaves partial results behind; the first error is
/// rethrown after all workers stop.
void run_experiment(const RunConfig& cfg, ExperimentResult& out,
                    std::ostream* progress = nullptr);

}  // namespace structnet
