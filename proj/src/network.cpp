#include "structnet/network.hpp"

#include <algorithm>
#include <cmath>

namespace structnet {

// ---------------------------------------------------------------------------
// ParamStore
// ---------------------------------------------------------------------------

ParamBlock& ParamStore::add_block(const std::string& id, Index out_dim,
                                  Index in_dim) {
  if (id.empty()) throw ConfigError("param block id must not be empty");
  if (out_dim <= 0 || in_dim <= 0) {
    throw ConfigError("param block " + id + ": dimensions must be positive");
  }
  auto it = blocks_.find(id);
  if (it != blocks_.end()) {
    throw ConfigError("duplicate param block id: " + id);
  }
  ParamBlock blk;
  blk.id = id;
  blk.W = Matrix::Zero(out_dim, in_dim);
  blk.b = Vector::Zero(out_dim);
  Velocity vel;
  vel.vW = Matrix::Zero(out_dim, in_dim);
  vel.vb = Vector::Zero(out_dim);
  velocity_.emplace(id, std::move(vel));
  return blocks_.emplace(id, std::move(blk)).first->second;
}

ParamBlock& ParamStore::at(const std::string& id) {
  auto it = blocks_.find(id);
  if (it == blocks_.end()) throw ConfigError("unknown param block: " + id);
  return it->second;
}

const ParamBlock& ParamStore::at(const std::string& id) const {
  auto it = blocks_.find(id);
  if (it == blocks_.end()) throw ConfigError("unknown param block: " + id);
  return it->second;
}

Velocity& ParamStore::velocity(const std::string& id) {
  auto it = velocity_.find(id);
  if (it == velocity_.end()) throw ConfigError("unknown param block: " + id);
  return it->second;
}

std::vector<std::string> ParamStore::ids() const {
  std::vector<std::string> out;
  out.reserve(blocks_.size());
  for (const auto& [id, blk] : blocks_) out.push_back(id);
  return out;
}

Index ParamStore::size() const {
  Index n = 0;
  for (const auto& [id, blk] : blocks_) n += blk.W.size() + blk.b.size();
  return n;
}

void ParamStore::reset_velocity() {
  for (auto& [id, vel] : velocity_) {
    vel.vW.setZero();
    vel.vb.setZero();
  }
}

ParamStore ParamStore::clone_params() const {
  ParamStore out;
  for (const auto& [id, blk] : blocks_) {
    ParamBlock& dst = out.add_block(id, blk.W.rows(), blk.W.cols());
    dst.W = blk.W;
    dst.b = blk.b;
  }
  return out;
}

void init_params(ParamStore& store, Rng& rng) {
  // blocks_ iterates sorted by id; fill order is part of the documented
  // reproducibility contract.
  for (const auto& id : store.ids()) {
    ParamBlock& blk = store.at(id);
    const Scalar fan_in = static_cast<Scalar>(blk.W.cols());
    const Scalar fan_out = static_cast<Scalar>(blk.W.rows());
    const Scalar bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (Index r = 0; r < blk.W.rows(); ++r) {
      for (Index c = 0; c < blk.W.cols(); ++c) {
        blk.W(r, c) = bound * (2.0 * rng.uniform() - 1.0);
      }
    }
    blk.b.setZero();
  }
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

void Network::validate() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.in_dim <= 0 || l.out_dim <= 0) {
      throw ConfigError("layer " + std::to_string(i) +
                        ": dimensions must be positive");
    }
    if (l.param_id.empty()) {
      throw ConfigError("layer " + std::to_string(i) + ": missing param id");
    }
    if (i > 0 && layers[i - 1].out_dim != l.in_dim) {
      throw ConfigError("layer " + std::to_string(i) +
                        ": input dim does not chain with previous layer");
    }
  }
}

void Network::register_params(ParamStore& store) const {
  for (const LayerSpec& l : layers) {
    if (!store.has(l.param_id)) {
      store.add_block(l.param_id, l.out_dim, l.in_dim);
    } else {
      const ParamBlock& blk = store.at(l.param_id);
      if (blk.W.rows() != l.out_dim || blk.W.cols() != l.in_dim) {
        throw ConfigError("param block " + l.param_id +
                          " shape conflicts with layer dims");
      }
    }
  }
}

std::set<std::string> Network::param_ids() const {
  std::set<std::string> out;
  for (const LayerSpec& l : layers) out.insert(l.param_id);
  return out;
}

namespace {

Matrix apply_activation(Activation act, const Matrix& z) {
  switch (act) {
    case Activation::Sigmoid:
      return sigmoid(z);
    case Activation::Tanh:
      return tanh_act(z);
  }
  throw ConfigError("unknown activation");
}

Matrix activation_deriv(Activation act, const Matrix& a) {
  switch (act) {
    case Activation::Sigmoid:
      return sigmoid_deriv(a);
    case Activation::Tanh:
      return tanh_deriv(a);
  }
  throw ConfigError("unknown activation");
}

}  // namespace

ForwardCache forward(const Network& net, const ParamStore& store,
                     const Matrix& x) {
  if (x.rows() != net.input_dim()) {
    throw ConfigError("forward: input has " + std::to_string(x.rows()) +
                      " rows, network expects " +
                      std::to_string(net.input_dim()));
  }
  ForwardCache cache;
  cache.activations.reserve(net.layers.size() + 1);
  cache.activations.push_back(x);
  for (const LayerSpec& l : net.layers) {
    const ParamBlock& blk = store.at(l.param_id);
    Matrix z = matmul(blk.W, cache.activations.back());
    z.colwise() += blk.b;
    cache.activations.push_back(apply_activation(l.activation, z));
  }
  return cache;
}

GradMap backward(const Network& net, const ParamStore& store,
                 const ForwardCache& cache, const Matrix& loss_grad) {
  const std::size_t n_layers = net.layers.size();
  if (cache.activations.size() != n_layers + 1) {
    throw ConfigError("backward: cache does not match network depth");
  }
  if (loss_grad.rows() != cache.output().rows() ||
      loss_grad.cols() != cache.output().cols()) {
    throw ConfigError("backward: loss gradient shape mismatch");
  }

  GradMap grads;
  Matrix delta =
      loss_grad.cwiseProduct(activation_deriv(net.layers.back().activation,
                                              cache.activations.back()));
  for (std::size_t i = n_layers; i-- > 0;) {
    const LayerSpec& l = net.layers[i];
    const Matrix& input = cache.activations[i];

    auto [it, inserted] = grads.try_emplace(l.param_id);
    Grad& g = it->second;
    if (inserted) {
      g.dW = matmul(delta, input.transpose());
      g.db = delta.rowwise().sum();
    } else {
      g.dW += matmul(delta, input.transpose());
      g.db += delta.rowwise().sum();
    }

    if (i > 0) {
      const ParamBlock& blk = store.at(l.param_id);
      delta = matmul(blk.W.transpose(), delta)
                  .cwiseProduct(activation_deriv(net.layers[i - 1].activation,
                                                 cache.activations[i]));
    }
  }
  return grads;
}

void scale_grads(GradMap& grads, Scalar factor) {
  for (auto& [id, g] : grads) {
    g.dW *= factor;
    g.db *= factor;
  }
}

void accumulate_grads(GradMap& into, const GradMap& extra) {
  for (const auto& [id, g] : extra) {
    auto [it, inserted] = into.try_emplace(id);
    if (inserted) {
      it->second = g;
    } else {
      it->second.dW += g.dW;
      it->second.db += g.db;
    }
  }
}

// ---------------------------------------------------------------------------
// Corruptor
// ---------------------------------------------------------------------------

Corruptor::Corruptor(Scalar level, Rng rng) : level_(level), rng_(rng) {
  if (!(level >= 0.0 && level <= 1.0)) {
    throw ConfigError("corruption level must lie in [0, 1]");
  }
}

Matrix Corruptor::draw_mask(Index rows, Index cols) {
  Matrix mask(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      mask(r, c) = rng_.uniform() < level_ ? 0.0 : 1.0;
    }
  }
  return mask;
}

Matrix Corruptor::corrupt(const Matrix& x) {
  if (level_ == 0.0) return x;
  return x.cwiseProduct(draw_mask(x.rows(), x.cols()));
}

// ---------------------------------------------------------------------------
// Gradient oracle
// ---------------------------------------------------------------------------

Scalar grad_check(ParamStore& store, const std::vector<std::string>& block_ids,
                  const std::function<Scalar()>& loss, const GradMap& analytic,
                  Scalar eps) {
  if (!(eps > 0.0)) throw ConfigError("grad_check: eps must be positive");

  Scalar max_rel = 0.0;
  auto probe = [&](Scalar& coord, Scalar analytic_g) {
    const Scalar saved = coord;
    coord = saved + eps;
    const Scalar plus = loss();
    coord = saved - eps;
    const Scalar minus = loss();
    coord = saved;
    const Scalar numeric = (plus - minus) / (2.0 * eps);
    const Scalar denom = std::max(
        {std::abs(analytic_g), std::abs(numeric), Scalar(1e-8)});
    max_rel = std::max(max_rel, std::abs(analytic_g - numeric) / denom);
  };

  for (const std::string& id : block_ids) {
    ParamBlock& blk = store.at(id);
    auto it = analytic.find(id);
    const bool have = it != analytic.end();
    for (Index r = 0; r < blk.W.rows(); ++r) {
      for (Index c = 0; c < blk.W.cols(); ++c) {
        probe(blk.W(r, c), have ? it->second.dW(r, c) : 0.0);
      }
    }
    for (Index r = 0; r < blk.b.size(); ++r) {
      probe(blk.b(r), have ? it->second.db(r) : 0.0);
    }
  }
  return max_rel;
}

}  // namespace structnet
