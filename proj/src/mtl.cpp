#include "structnet/mtl.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

namespace structnet {

// ---------------------------------------------------------------------------
// FrameworkSpec / build_framework
// ---------------------------------------------------------------------------

void FrameworkSpec::validate() const {
  if (dims.size() < 2) {
    throw ConfigError("framework: need at least input and output dims");
  }
  for (Index d : dims) {
    if (d <= 0) throw ConfigError("framework: dims must be positive");
  }
  if (encoder_depth < 1 || decoder_depth < 1) {
    throw ConfigError("framework: encoder and decoder depth must be >= 1");
  }
  if (encoder_depth + decoder_depth >= num_layers()) {
    throw ConfigError(
        "framework: encoder_depth + decoder_depth must be smaller than the "
        "layer count, at least one middle layer is required");
  }
}

FrameworkSpec FrameworkSpec::paper_default() {
  FrameworkSpec spec;
  spec.dims = {2500, 1025, 512, 64, 136};
  spec.encoder_depth = 1;
  spec.decoder_depth = 1;
  return spec;
}

Framework build_framework(const FrameworkSpec& spec, Scalar corruption_level) {
  spec.validate();

  Framework fw;
  fw.spec = spec;
  fw.corruptor = Corruptor(corruption_level, Rng(0));

  const int k = spec.num_layers();
  const int k_in = spec.encoder_depth;
  const int k_out = spec.decoder_depth;

  auto id_of = [](const char* group, int i) {
    return std::string(group) + "." + std::to_string(i);
  };

  // Main network: layer i maps dims[i-1] -> dims[i]. The first k_in layers
  // are the input-AE encoder, the last k_out layers the output-AE decoder.
  for (int i = 1; i <= k; ++i) {
    LayerSpec l;
    l.in_dim = spec.dims[i - 1];
    l.out_dim = spec.dims[i];
    l.activation = (i == k) ? Activation::Tanh : Activation::Sigmoid;
    if (i <= k_in) {
      l.param_id = id_of("in_enc", i);
    } else if (i > k - k_out) {
      l.param_id = id_of("out_dec", i - (k - k_out));
    } else {
      l.param_id = id_of("mid", i - k_in);
    }
    fw.main.layers.push_back(l);
  }

  // Input AE: shared encoder, then a private mirror decoder back to the
  // input space. Reconstruction is sigmoid throughout (inputs live in [0,1]).
  for (int i = 1; i <= k_in; ++i) {
    LayerSpec l;
    l.in_dim = spec.dims[i - 1];
    l.out_dim = spec.dims[i];
    l.activation = Activation::Sigmoid;
    l.param_id = id_of("in_enc", i);
    fw.in_ae.layers.push_back(l);
  }
  for (int j = 1; j <= k_in; ++j) {
    LayerSpec l;
    l.in_dim = spec.dims[k_in - j + 1];
    l.out_dim = spec.dims[k_in - j];
    l.activation = Activation::Sigmoid;
    l.param_id = id_of("in_dec", j);
    fw.in_ae.layers.push_back(l);
  }

  // Output AE: private encoder mirroring the main net's tail, then the
  // shared decoder. The shared final layer keeps the main net's tanh.
  for (int j = 1; j <= k_out; ++j) {
    LayerSpec l;
    l.in_dim = spec.dims[k - j + 1];
    l.out_dim = spec.dims[k - j];
    l.activation = Activation::Sigmoid;
    l.param_id = id_of("out_enc", j);
    fw.out_ae.layers.push_back(l);
  }
  for (int j = 1; j <= k_out; ++j) {
    LayerSpec l;
    l.in_dim = spec.dims[k - k_out + j - 1];
    l.out_dim = spec.dims[k - k_out + j];
    l.activation =
        (k - k_out + j == k) ? Activation::Tanh : Activation::Sigmoid;
    l.param_id = id_of("out_dec", j);
    fw.out_ae.layers.push_back(l);
  }

  fw.main.validate();
  fw.in_ae.validate();
  fw.out_ae.validate();

  fw.main.register_params(fw.store);
  fw.in_ae.register_params(fw.store);
  fw.out_ae.register_params(fw.store);

  fw.supervised_ids = fw.main.param_ids();
  fw.input_task_ids = fw.in_ae.param_ids();
  fw.output_task_ids = fw.out_ae.param_ids();
  return fw;
}

// ---------------------------------------------------------------------------
// Task criteria
// ---------------------------------------------------------------------------

namespace {

void require_batch(const Matrix& m, const char* what) {
  if (m.cols() == 0) throw ConfigError(std::string(what) + ": empty batch");
}

}  // namespace

Scalar j_sup(const Framework& fw, const Matrix& x, const Matrix& y) {
  require_batch(x, "j_sup");
  return mse(forward(fw.main, fw.store, x).output(), y);
}

Scalar j_in_masked(const Framework& fw, const Matrix& x, const Matrix& mask) {
  require_batch(x, "j_in");
  const Matrix corrupted = x.cwiseProduct(mask);
  return mse(forward(fw.in_ae, fw.store, corrupted).output(), x);
}

Scalar j_in(const Framework& fw, const Matrix& x) {
  require_batch(x, "j_in");
  return mse(forward(fw.in_ae, fw.store, x).output(), x);
}

Scalar j_in_train(Framework& fw, const Matrix& x) {
  require_batch(x, "j_in");
  return j_in_masked(fw, x, fw.corruptor.draw_mask(x.rows(), x.cols()));
}

Scalar j_out(const Framework& fw, const Matrix& y) {
  require_batch(y, "j_out");
  return mse(forward(fw.out_ae, fw.store, y).output(), y);
}

Scalar composite_objective(const Framework& fw, const Matrix& x_s,
                           const Matrix& y_s, const Matrix& x_f,
                           const Matrix& y_l, const Lambdas& lambdas) {
  if (lambdas.sup < 0.0 || lambdas.in < 0.0 || lambdas.out < 0.0) {
    throw ConfigError("composite objective: importance weights must be >= 0");
  }
  if (x_s.cols() == 0 && x_f.cols() == 0 && y_l.cols() == 0) {
    throw ConfigError("composite objective: all batches empty");
  }
  Scalar total = 0.0;
  if (x_s.cols() > 0) total += lambdas.sup * j_sup(fw, x_s, y_s);
  if (x_f.cols() > 0) total += lambdas.in * j_in(fw, x_f);
  if (y_l.cols() > 0) total += lambdas.out * j_out(fw, y_l);
  return total;
}

TaskEval eval_j_sup(const Framework& fw, const Matrix& x, const Matrix& y) {
  require_batch(x, "j_sup");
  const ForwardCache cache = forward(fw.main, fw.store, x);
  TaskEval ev;
  ev.value = mse(cache.output(), y);
  ev.grads = backward(fw.main, fw.store, cache, mse_grad(cache.output(), y));
  return ev;
}

TaskEval eval_j_in_masked(const Framework& fw, const Matrix& x,
                          const Matrix& mask) {
  require_batch(x, "j_in");
  const Matrix corrupted = x.cwiseProduct(mask);
  const ForwardCache cache = forward(fw.in_ae, fw.store, corrupted);
  TaskEval ev;
  ev.value = mse(cache.output(), x);
  ev.grads = backward(fw.in_ae, fw.store, cache, mse_grad(cache.output(), x));
  return ev;
}

TaskEval eval_j_out(const Framework& fw, const Matrix& y) {
  require_batch(y, "j_out");
  const ForwardCache cache = forward(fw.out_ae, fw.store, y);
  TaskEval ev;
  ev.value = mse(cache.output(), y);
  ev.grads = backward(fw.out_ae, fw.store, cache, mse_grad(cache.output(), y));
  return ev;
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

void Schedule::validate() const {
  if (!(start >= 0.0 && start <= 1.0 && end >= 0.0 && end <= 1.0)) {
    throw ConfigError("schedule endpoints must lie in [0,1]");
  }
  if (ramp_epochs < 0) throw ConfigError("schedule ramp must be >= 0");
}

Scalar Schedule::eval(int epoch) const {
  if (epoch < 0) throw ConfigError("schedule: epoch must be >= 0");
  if (ramp_epochs == 0) return end;
  const Scalar frac = std::min(
      static_cast<Scalar>(epoch) / static_cast<Scalar>(ramp_epochs), 1.0);
  return start + (end - start) * frac;
}

Scalar schedule_eval(const Schedule& s, int epoch) { return s.eval(epoch); }

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

void OptimizerCfg::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0,1)");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (ae_weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
}

void sgd_step(ParamStore& store, const GradMap& grads, Scalar lr,
              Scalar momentum, const std::set<std::string>& decay_ids,
              Scalar decay) {
  for (const auto& [id, g] : grads) {
    ParamBlock& blk = store.at(id);
    Velocity& vel = store.velocity(id);
    if (g.dW.rows() != blk.W.rows() || g.dW.cols() != blk.W.cols() ||
        g.db.size() != blk.b.size()) {
      throw ConfigError("sgd_step: gradient shape mismatch for " + id);
    }
    if (decay != 0.0 && decay_ids.count(id) != 0) {
      vel.vW = momentum * vel.vW - lr * (g.dW + decay * blk.W);
    } else {
      vel.vW = momentum * vel.vW - lr * g.dW;
    }
    vel.vb = momentum * vel.vb - lr * g.db;
    blk.W += vel.vW;
    blk.b += vel.vb;
  }
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

namespace {

// L2 regularization of an auto-encoder criterion: the decay term joins the
// task gradient (weights only, never biases) and is therefore scaled by the
// task's importance weight along with it.
void add_weight_decay(GradMap& grads, const ParamStore& store,
                      const std::set<std::string>& ids, Scalar decay) {
  if (decay == 0.0) return;
  for (const std::string& id : ids) {
    auto it = grads.find(id);
    if (it == grads.end()) continue;
    it->second.dW += decay * store.at(id).W;
  }
}

}  // namespace

EpochStats train_epoch(Framework& fw, const Dataset& data,
                       const TaskSchedules& schedules, const OptimizerCfg& opt,
                       int epoch, Rng& shuffle_rng) {
  opt.validate();
  if (data.samples.empty()) throw DataError("train_epoch: empty dataset");

  const Lambdas lam = schedules.at(epoch);
  const Scalar lr = opt.learning_rate;
  const Scalar mu = opt.momentum;
  const Scalar decay = opt.ae_weight_decay;

  std::vector<int> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng.shuffle(order);

  EpochStats stats;
  Scalar sup_sum = 0.0, in_sum = 0.0, out_sum = 0.0;

  for (std::size_t begin = 0; begin < order.size();
       begin += static_cast<std::size_t>(opt.batch_size)) {
    const std::size_t end =
        std::min(begin + static_cast<std::size_t>(opt.batch_size),
                 order.size());

    std::vector<int> idx_f, idx_l, idx_s;
    for (std::size_t i = begin; i < end; ++i) {
      const Sample& s = data.samples[order[i]];
      if (s.has_x()) idx_f.push_back(order[i]);
      if (s.has_y()) idx_l.push_back(order[i]);
      if (s.has_x() && s.has_y()) idx_s.push_back(order[i]);
    }

    // Input task on every sample of the batch that has features.
    if (lam.in > 0.0 && !idx_f.empty()) {
      const Matrix x = gather_x(data, idx_f);
      const Matrix mask = fw.corruptor.draw_mask(x.rows(), x.cols());
      TaskEval ev = eval_j_in_masked(fw, x, mask);
      add_weight_decay(ev.grads, fw.store, fw.input_task_ids, decay);
      scale_grads(ev.grads, lam.in);
      sgd_step(fw.store, ev.grads, lr, mu, {}, 0.0);
      in_sum += ev.value;
      ++stats.in_steps;
    }

    // Output task on every sample that has labels.
    if (lam.out > 0.0 && !idx_l.empty()) {
      const Matrix y = gather_y(data, idx_l);
      TaskEval ev = eval_j_out(fw, y);
      add_weight_decay(ev.grads, fw.store, fw.output_task_ids, decay);
      scale_grads(ev.grads, lam.out);
      sgd_step(fw.store, ev.grads, lr, mu, {}, 0.0);
      out_sum += ev.value;
      ++stats.out_steps;
    }

    // Joint step toward the full weighted objective on fully labeled
    // samples: one parallel update of all parameters.
    if (!idx_s.empty() && (lam.sup > 0.0 || lam.in > 0.0 || lam.out > 0.0)) {
      const Matrix x = gather_x(data, idx_s);
      const Matrix y = gather_y(data, idx_s);

      GradMap total;
      if (lam.sup > 0.0) {
        TaskEval ev = eval_j_sup(fw, x, y);
        scale_grads(ev.grads, lam.sup);
        accumulate_grads(total, ev.grads);
        sup_sum += ev.value;
        ++stats.sup_steps;
      }
      if (lam.in > 0.0) {
        const Matrix mask = fw.corruptor.draw_mask(x.rows(), x.cols());
        TaskEval ev = eval_j_in_masked(fw, x, mask);
        add_weight_decay(ev.grads, fw.store, fw.input_task_ids, decay);
        scale_grads(ev.grads, lam.in);
        accumulate_grads(total, ev.grads);
      }
      if (lam.out > 0.0) {
        TaskEval ev = eval_j_out(fw, y);
        add_weight_decay(ev.grads, fw.store, fw.output_task_ids, decay);
        scale_grads(ev.grads, lam.out);
        accumulate_grads(total, ev.grads);
      }
      if (!total.empty()) {
        sgd_step(fw.store, total, lr, mu, {}, 0.0);
      }
    }
  }

  if (stats.sup_steps > 0) stats.j_sup_mean = sup_sum / stats.sup_steps;
  if (stats.in_steps > 0) stats.j_in_mean = in_sum / stats.in_steps;
  if (stats.out_steps > 0) stats.j_out_mean = out_sum / stats.out_steps;
  return stats;
}

std::string TrainLog::to_csv() const {
  std::string out =
      "epoch,lambda_sup,lambda_in,lambda_out,train_mse,valid_mse,j_in,j_out\n";
  char buf[256];
  for (const TrainLogRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                  r.lambda_sup, r.lambda_in, r.lambda_out, r.train_mse,
                  r.valid_mse, r.j_in, r.j_out);
    out += buf;
  }
  return out;
}

TrainResult train(Framework& fw, const Dataset& data,
                  const TaskSchedules& schedules, const OptimizerCfg& opt,
                  const Dataset& validation, std::uint64_t seed) {
  opt.validate();
  schedules.sup.validate();
  schedules.in.validate();
  schedules.out.validate();
  if (data.samples.empty()) throw DataError("train: empty dataset");

  const Partition train_part = partition(data);
  const Partition valid_part = partition(validation);
  if (train_part.full.empty()) {
    throw DataError("train: no fully labeled training samples");
  }
  if (valid_part.full.empty()) {
    throw DataError("train: no fully labeled validation samples");
  }

  // Diagnostic batches are fixed for the whole run.
  const Matrix x_train = gather_x(data, train_part.full);
  const Matrix y_train = gather_y(data, train_part.full);
  const Matrix x_valid = gather_x(validation, valid_part.full);
  const Matrix y_valid = gather_y(validation, valid_part.full);
  const Matrix x_f = gather_x(data, train_part.with_x);
  const Matrix y_l = gather_y(data, train_part.with_y);

  Rng shuffle_rng(mix_seed(seed, 1));
  fw.corruptor.reseed(Rng(mix_seed(seed, 2)));

  TrainResult result;
  result.best_valid_mse = std::numeric_limits<Scalar>::infinity();

  for (int t = 0; t < opt.epochs; ++t) {
    train_epoch(fw, data, schedules, opt, t, shuffle_rng);

    const Lambdas lam = schedules.at(t);
    TrainLogRow row;
    row.epoch = t;
    row.lambda_sup = lam.sup;
    row.lambda_in = lam.in;
    row.lambda_out = lam.out;
    row.train_mse = j_sup(fw, x_train, y_train);
    row.valid_mse = j_sup(fw, x_valid, y_valid);
    row.j_in = lam.in > 0.0 ? j_in(fw, x_f) : 0.0;
    row.j_out = lam.out > 0.0 ? j_out(fw, y_l) : 0.0;
    require_finite(row.train_mse, "train mse");
    require_finite(row.valid_mse, "validation mse");
    result.log.rows.push_back(row);

    if (row.valid_mse < result.best_valid_mse) {
      result.best_valid_mse = row.valid_mse;
      result.best_epoch = t;
      result.best_params = fw.store.clone_params();
    }
  }
  return result;
}

}  // namespace structnet
