#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "structnet/numerics.hpp"

namespace structnet {

// ---------------------------------------------------------------------------
// Parameter storage.
//
// A ParamBlock is one weight matrix plus its bias. Blocks live in a
// ParamStore and are referenced by id from the layers that use them, so two
// layers naming the same id share storage: weight tying is aliasing, never
// copying. Momentum buffers are kept alongside each block.
// ---------------------------------------------------------------------------

struct ParamBlock {
  std::string id;
  Matrix W;  // out_dim x in_dim
  Vector b;  // out_dim
};

struct Velocity {
  Matrix vW;
  Vector vb;
};

/// Gradient of a scalar loss with respect to one ParamBlock.
struct Grad {
  Matrix dW;
  Vector db;
};

/// Gradients keyed by block id. std::map keeps iteration sorted by id,
/// which fixes the update order and keeps training deterministic.
using GradMap = std::map<std::string, Grad>;

class ParamStore {
 public:
  ParamBlock& add_block(const std::string& id, Index out_dim, Index in_dim);

  bool has(const std::string& id) const { return blocks_.count(id) != 0; }
  ParamBlock& at(const std::string& id);
  const ParamBlock& at(const std::string& id) const;
  Velocity& velocity(const std::string& id);

  /// Block ids in sorted order.
  std::vector<std::string> ids() const;

  /// Total number of scalar parameters (weights + biases).
  Index size() const;

  void reset_velocity();

  /// Deep copy of the parameter matrices only (velocity zeroed).
  ParamStore clone_params() const;

  const std::map<std::string, ParamBlock>& blocks() const { return blocks_; }

 private:
  std::map<std::string, ParamBlock> blocks_;
  std::map<std::string, Velocity> velocity_;
};

/// Fills every block of `store` with uniform draws in
/// [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))] and zero biases.
/// Blocks are visited sorted by id and weights row by row, so the result is
/// a pure function of the seed.
void init_params(ParamStore& store, Rng& rng);

// ---------------------------------------------------------------------------
// Feed-forward networks.
// ---------------------------------------------------------------------------

enum class Activation { Sigmoid, Tanh };

struct LayerSpec {
  Index in_dim = 0;
  Index out_dim = 0;
  Activation activation = Activation::Sigmoid;
  std::string param_id;
};

/// An ordered stack of layers. Holds no parameters itself; layers resolve
/// their blocks through the ParamStore passed to forward/backward.
struct Network {
  std::vector<LayerSpec> layers;

  Index input_dim() const { return layers.front().in_dim; }
  Index output_dim() const { return layers.back().out_dim; }

  /// Registers any missing blocks for this network's layers in `store`.
  void register_params(ParamStore& store) const;

  /// Throws if consecutive layer dimensions do not chain.
  void validate() const;

  std::set<std::string> param_ids() const;
};

/// Per-layer activations retained by forward() for the backward pass.
/// activations[0] is the input batch, activations[k] the output of layer k.
struct ForwardCache {
  std::vector<Matrix> activations;
  const Matrix& output() const { return activations.back(); }
};

/// Runs the network on a batch (one column per sample). Pure given
/// (net, store, x).
ForwardCache forward(const Network& net, const ParamStore& store,
                     const Matrix& x);

/// Exact backpropagation. `loss_grad` is dLoss/dOutput with the same shape
/// as the forward output. Gradients of blocks appearing in several layers
/// accumulate, which is the derivative of the summed objective.
GradMap backward(const Network& net, const ParamStore& store,
                 const ForwardCache& cache, const Matrix& loss_grad);

/// Scales every gradient in place.
void scale_grads(GradMap& grads, Scalar factor);

/// Merges `extra` into `into`, adding where ids collide.
void accumulate_grads(GradMap& into, const GradMap& extra);

// ---------------------------------------------------------------------------
// Input corruption for denoising auto-encoders.
// ---------------------------------------------------------------------------

class Corruptor {
 public:
  Corruptor(Scalar level, Rng rng);

  Scalar level() const { return level_; }
  void reseed(Rng rng) { rng_ = rng; }

  /// Fresh 0/1 mask; each entry is 0 with probability level().
  Matrix draw_mask(Index rows, Index cols);

  /// Masking noise: each element dropped to zero with probability level(),
  /// survivors kept bit-exact. Fresh noise on every call.
  Matrix corrupt(const Matrix& x);

 private:
  Scalar level_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient oracle.
//
// Central differences of an arbitrary scalar loss against analytically
// computed gradients. Lives beside the implementation but depends only on
// loss evaluations, so it stays an independent check of backward().
// ---------------------------------------------------------------------------

/// Max over all coordinates of |analytic - numeric| / max(|analytic|,
/// |numeric|, 1e-8). `loss` must evaluate the objective with the current
/// store contents; the store is perturbed and restored in place.
Scalar grad_check(ParamStore& store, const std::vector<std::string>& block_ids,
                  const std::function<Scalar()>& loss, const GradMap& analytic,
                  Scalar eps = 1e-6);

}  // namespace structnet
