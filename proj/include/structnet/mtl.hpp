#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "structnet/data.hpp"
#include "structnet/network.hpp"
#include "structnet/numerics.hpp"

namespace structnet {

// ---------------------------------------------------------------------------
// Framework structure.
//
// Three networks over one shared ParamStore:
//   main:   x -> y through all K layers,
//   in_ae:  denoising auto-encoder over x whose encoder layers are the first
//           encoder_depth layers of the main network (shared blocks),
//   out_ae: auto-encoder over y whose decoder layers are the last
//           decoder_depth layers of the main network (shared blocks).
//
// Block id groups: "in_enc.*" (shared input encoder), "in_dec.*" (private
// input decoder), "mid.*" (private middle layers), "out_enc.*" (private
// output encoder), "out_dec.*" (shared output decoder).
// ---------------------------------------------------------------------------

struct FrameworkSpec {
  // dims[0] is the input size, dims.back() the output size; one layer per
  // consecutive pair.
  std::vector<Index> dims;
  int encoder_depth = 1;  // layers of the main net shared with the input AE
  int decoder_depth = 1;  // layers of the main net shared with the output AE

  int num_layers() const { return static_cast<int>(dims.size()) - 1; }
  Index xtilde_dim() const { return dims.at(encoder_depth); }
  Index ytilde_dim() const { return dims.at(num_layers() - decoder_depth); }

  /// Requires encoder_depth >= 1, decoder_depth >= 1 and
  /// encoder_depth + decoder_depth < num_layers().
  void validate() const;

  /// 2500 -> 1025 -> 512 -> 64 -> 136 with one shared layer on each end.
  static FrameworkSpec paper_default();
};

struct Framework {
  FrameworkSpec spec;
  Network main;
  Network in_ae;
  Network out_ae;
  ParamStore store;
  Corruptor corruptor{0.0, Rng(0)};

  std::set<std::string> supervised_ids;   // in_enc.* + mid.* + out_dec.*
  std::set<std::string> input_task_ids;   // in_enc.* + in_dec.*
  std::set<std::string> output_task_ids;  // out_enc.* + out_dec.*

  std::vector<std::string> all_ids() const { return store.ids(); }
};

/// Builds the three networks with the proper tying and registers all
/// blocks (zero-valued; call init_params afterwards). Every layer is
/// sigmoid except the last main-net layer, which the output AE shares and
/// which is tanh to suit labels in [-1, 1].
Framework build_framework(const FrameworkSpec& spec,
                          Scalar corruption_level = 0.2);

// ---------------------------------------------------------------------------
// Task criteria. Batches are column-per-sample matrices.
// ---------------------------------------------------------------------------

/// Supervised cost: MSE of the main network's predictions against labels.
Scalar j_sup(const Framework& fw, const Matrix& x, const Matrix& y);

/// Input reconstruction cost with an explicit 0/1 corruption mask on the
/// encoder input; the target is always the clean x.
Scalar j_in_masked(const Framework& fw, const Matrix& x, const Matrix& mask);

/// Input reconstruction cost, evaluation mode (no corruption).
Scalar j_in(const Framework& fw, const Matrix& x);

/// Input reconstruction cost with fresh corruption noise drawn from the
/// framework's corruptor (training mode).
Scalar j_in_train(Framework& fw, const Matrix& x);

/// Output reconstruction cost (plain auto-encoder, never corrupted).
Scalar j_out(const Framework& fw, const Matrix& y);

struct Lambdas {
  Scalar sup = 1.0;
  Scalar in = 0.0;
  Scalar out = 0.0;
};

/// Weighted sum of the three criteria over possibly different batches.
/// Corruption is disabled so the value is a deterministic diagnostic.
/// Empty batches contribute nothing; all three empty is an error.
Scalar composite_objective(const Framework& fw, const Matrix& x_s,
                           const Matrix& y_s, const Matrix& x_f,
                           const Matrix& y_l, const Lambdas& lambdas);

/// Value and parameter gradient of one task criterion.
struct TaskEval {
  Scalar value = 0.0;
  GradMap grads;
};

TaskEval eval_j_sup(const Framework& fw, const Matrix& x, const Matrix& y);
TaskEval eval_j_in_masked(const Framework& fw, const Matrix& x,
                          const Matrix& mask);
TaskEval eval_j_out(const Framework& fw, const Matrix& y);

// ---------------------------------------------------------------------------
// Importance-weight schedules: linear ramp from start to end over
// ramp_epochs, constant afterwards.
// ---------------------------------------------------------------------------

struct Schedule {
  Scalar start = 1.0;
  Scalar end = 1.0;
  int ramp_epochs = 0;

  void validate() const;
  Scalar eval(int epoch) const;

  static Schedule constant(Scalar v) { return Schedule{v, v, 0}; }
  static Schedule linear(Scalar start, Scalar end, int ramp_epochs) {
    return Schedule{start, end, ramp_epochs};
  }
};

Scalar schedule_eval(const Schedule& s, int epoch);

struct TaskSchedules {
  Schedule sup = Schedule::constant(1.0);
  Schedule in = Schedule::constant(0.0);
  Schedule out = Schedule::constant(0.0);

  Lambdas at(int epoch) const {
    return Lambdas{sup.eval(epoch), in.eval(epoch), out.eval(epoch)};
  }
};

// ---------------------------------------------------------------------------
// Optimizer.
// ---------------------------------------------------------------------------

struct OptimizerCfg {
  Scalar learning_rate = 1e-3;
  Scalar momentum = 0.9;
  Scalar ae_weight_decay = 1e-2;
  int batch_size = 10;
  int epochs = 1000;

  void validate() const;
};

/// Classical momentum update:
///   v <- momentum * v - lr * (g + decay * W * [id in decay_ids])
///   W <- W + v
/// Decay touches weight matrices only, never biases. Only blocks present in
/// `grads` are updated.
void sgd_step(ParamStore& store, const GradMap& grads, Scalar lr,
              Scalar momentum, const std::set<std::string>& decay_ids,
              Scalar decay);

// ---------------------------------------------------------------------------
// Training loop (one epoch and full runs).
// ---------------------------------------------------------------------------

/// Mean per-step task costs observed while updating during one epoch.
struct EpochStats {
  Scalar j_sup_mean = 0.0;
  Scalar j_in_mean = 0.0;
  Scalar j_out_mean = 0.0;
  int sup_steps = 0;
  int in_steps = 0;
  int out_steps = 0;
};

/// One pass over the shuffled training set in mini-batches, dispatching on
/// sample kind: samples with features feed the input task, samples with
/// labels feed the output task, and fully labeled samples additionally get
/// a joint step toward the weighted composite objective. Tasks whose
/// importance weight is zero at this epoch are skipped entirely.
EpochStats train_epoch(Framework& fw, const Dataset& data,
                       const TaskSchedules& schedules, const OptimizerCfg& opt,
                       int epoch, Rng& shuffle_rng);

struct TrainLogRow {
  int epoch = 0;
  Scalar lambda_sup = 0.0;
  Scalar lambda_in = 0.0;
  Scalar lambda_out = 0.0;
  Scalar train_mse = 0.0;
  Scalar valid_mse = 0.0;
  Scalar j_in = 0.0;
  Scalar j_out = 0.0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  /// CSV with header epoch,lambda_sup,lambda_in,lambda_out,train_mse,
  /// valid_mse,j_in,j_out. LF line endings, round-trip double formatting.
  std::string to_csv() const;
};

struct TrainResult {
  TrainLog log;
  ParamStore best_params;  // snapshot with the lowest validation MSE
  int best_epoch = -1;
  Scalar best_valid_mse = 0.0;
};

/// Runs opt.epochs training epochs, logging per-epoch diagnostics and
/// retaining the parameter snapshot with the lowest validation supervised
/// MSE. All randomness (shuffling, corruption) derives from `seed`, so a
/// run is a pure function of (framework params, data, schedules, opt, seed).
TrainResult train(Framework& fw, const Dataset& data,
                  const TaskSchedules& schedules, const OptimizerCfg& opt,
                  const Dataset& validation, std::uint64_t seed);

}  // namespace structnet
