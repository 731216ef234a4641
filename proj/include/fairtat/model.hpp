#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairtat/tensor.hpp"

namespace fairtat {

struct ModelDims {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t num_classes = 0;
};

/// K-class MLP classifier parameters: ReLU hidden layers, linear output.
struct ModelParams {
  struct Layer {
    Tensor weight;  // [out x in]
    Tensor bias;    // [out]
  };

  ModelDims dims;
  std::vector<Layer> layers;

  std::size_t num_params() const;
  // FNV-1a over the raw parameter bytes; used by purity checks.
  std::uint64_t checksum() const;
};

struct SgdConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  // (epoch fraction in (0,1], divisor); fractions strictly increasing.
  std::vector<std::pair<double, double>> lr_schedule = {{0.5, 10.0},
                                                        {0.75, 10.0}};

  // Learning rate in effect at `epoch` of `total_epochs`.
  double lr_at(std::size_t epoch, std::size_t total_epochs) const;
  void validate() const;
};

/// Momentum buffers, one per parameter tensor, zero-initialized.
struct SgdState {
  std::vector<std::vector<double>> velocity;
};

// He-scaled normal init (std = sqrt(2 / fan_in)), biases zero, reproducible
// by seed. Throws std::domain_error for num_classes < 2 or a broken chain.
ModelParams init_model(const ModelDims& dims, std::uint64_t seed);

// Forward pass on the given tape. `x` must be a [n x input_dim] node.
// Returns the logits node [n x K]. When `param_grads` is true the parameter
// leaves track gradients and their Vars are appended to `param_vars`
// (weight, bias per layer, in order).
Var model_forward(Tape& tape, const ModelParams& params, Var x,
                  bool param_grads = false,
                  std::vector<Var>* param_vars = nullptr);

// Convenience: logits for a plain input batch (no gradients).
Tensor model_logits(const ModelParams& params, const Tensor& x);
std::vector<int> model_predict(const ModelParams& params, const Tensor& x);

SgdState make_sgd_state(const ModelParams& params);

// In-place SGD update with momentum and decoupled-from-schedule weight decay
// folded into the gradient (g + wd * theta). Throws on non-finite gradients.
void sgd_step(ModelParams& params, const std::vector<std::vector<double>>& grads,
              SgdState& state, const SgdConfig& config, double lr);

// avg <- alpha * avg + (1 - alpha) * current, elementwise.
void average_update(ModelParams& avg, const ModelParams& current,
                    double alpha);

// Self-describing JSON checkpoint; write-then-read round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path,
                     std::uint64_t seed, std::size_t epoch);
struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fairtat
