#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "structnet/data.hpp"
#include "structnet/metrics.hpp"
#include "structnet/mtl.hpp"

namespace structnet {

enum class RunMode { Mlp, MlpIn, MlpOut, MlpInOut };

const char* to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& s);

/// Every knob of a run. Defaults are the full-scale face profile (the
/// shipped `full` preset); the `synth` preset switches to the desk-scale
/// profile (see presets in the README).
struct RunConfig {
  RunMode mode = RunMode::MlpInOut;
  std::uint64_t seed = 1;

  FrameworkSpec framework{{2500, 1025, 512, 64, 136}, 1, 1};
  OptimizerCfg optimizer;         // lr 1e-3, momentum 0.9, batch 10, 1000 epochs
  Scalar corruption_level = 0.2;

  // Importance-weight schedules. A negative ramp means "90% of epochs".
  Schedule lambda_sup{1.0, 1.0, 0};
  Schedule lambda_in{1.0, 0.0, -1};
  Schedule lambda_out{1.0, 0.0, -1};

  // Data geometry.
  Index img_side = 50;
  Index n_points = 68;
  EyeSpec eyes = EyeSpec::landmarks68();

  // Dataset locations. When valid_dir is empty, valid_count samples are
  // split off the training set with a seeded shuffle.
  std::string train_dir;
  std::string valid_dir;
  std::string test_dir;
  Index valid_count = 0;

  // Synthetic generation.
  SynthParams synth;
  Scalar synth_strip_input_frac = 0.0;
  Scalar synth_strip_label_frac = 0.0;

  // Experiment protocol.
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<RunMode> modes = {RunMode::Mlp, RunMode::MlpIn, RunMode::MlpOut,
                                RunMode::MlpInOut};
  std::uint64_t data_seed = 1234;
  Index synth_train_n = 500;
  Index synth_valid_n = 100;
  Index synth_test_n = 200;
  Index augment_input_only = 0;
  Index augment_label_only = 0;
  int jobs = 0;  // 0 = hardware concurrency

  /// Schedules with mode gating and resolved ramps, ready for training.
  TaskSchedules resolved_schedules() const;

  /// Enforces all cross-field invariants. Throws ConfigError.
  void validate() const;
};

/// Built-in presets: "full" (the defaults above) and "synth" (desk scale:
/// 20x20 images, 10 points, 200 epochs, 400/64/32/16/20 dims).
RunConfig preset(const std::string& name);

/// Applies `key=value` lines from a flat text file. '#' starts a comment.
/// Keys set here override the current values and are recorded so that
/// contradictions with the mode can be diagnosed.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Applies one `key=value` override.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// All recognized keys with their current values, config-file syntax.
std::string dump_config(const RunConfig& cfg);

}  // namespace structnet
