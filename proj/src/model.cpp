#include "fairtat/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fairtat/kernels.hpp"
#include "fairtat/rng.hpp"

namespace fairtat {

std::size_t ModelParams::num_params() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::uint64_t ModelParams::checksum() const {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const std::vector<double>& v) {
    for (double d : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof(bits));
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffU;
        h *= 1099511628211ULL;
      }
    }
  };
  for (const Layer& l : layers) {
    mix(l.weight.values);
    mix(l.bias.values);
  }
  return h;
}

void SgdConfig::validate() const {
  if (learning_rate <= 0.0) {
    throw std::domain_error("SgdConfig: learning_rate must be > 0");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::domain_error("SgdConfig: momentum must be in [0, 1)");
  }
  if (weight_decay < 0.0) {
    throw std::domain_error("SgdConfig: weight_decay must be >= 0");
  }
  double prev = 0.0;
  for (const auto& [frac, div] : lr_schedule) {
    if (frac <= prev || frac > 1.0) {
      throw std::domain_error(
          "SgdConfig: schedule fractions must be strictly increasing in "
          "(0, 1]");
    }
    if (div <= 0.0) throw std::domain_error("SgdConfig: divisor must be > 0");
    prev = frac;
  }
}

double SgdConfig::lr_at(std::size_t epoch, std::size_t total_epochs) const {
  double lr = learning_rate;
  for (const auto& [frac, div] : lr_schedule) {
    if (static_cast<double>(epoch) >=
        frac * static_cast<double>(total_epochs)) {
      lr /= div;
    }
  }
  return lr;
}

ModelParams init_model(const ModelDims& dims, std::uint64_t seed) {
  if (dims.num_classes < 2) {
    throw std::domain_error("init_model: need at least 2 classes");
  }
  if (dims.input_dim == 0) {
    throw std::domain_error("init_model: input_dim must be positive");
  }
  ModelParams p;
  p.dims = dims;
  Rng rng(seed);
  std::size_t in = dims.input_dim;
  std::vector<std::size_t> outs = dims.hidden_dims;
  outs.push_back(dims.num_classes);
  for (std::size_t out : outs) {
    if (out == 0) throw std::domain_error("init_model: zero-width layer");
    ModelParams::Layer l;
    l.weight = Tensor({out, in});
    l.bias = Tensor({out});
    double std_dev = std::sqrt(2.0 / static_cast<double>(in));
    // Truncated He normal: redraw past 3 sigma so no single weight starts
    // disproportionately large.
    for (double& w : l.weight.values) {
      do {
        w = rng.normal(0.0, std_dev);
      } while (std::abs(w) > 3.0 * std_dev);
    }
    p.layers.push_back(std::move(l));
    in = out;
  }
  return p;
}

Var model_forward(Tape& tape, const ModelParams& params, Var x,
                  bool param_grads, std::vector<Var>* param_vars) {
  // A pre-populated param_vars reuses the existing leaves, so two forward
  // passes (clean + adversarial) can share one set of parameter gradients.
  bool reuse = param_vars && param_vars->size() == params.layers.size() * 2;
  Var h = x;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    Var w, b;
    if (reuse) {
      w = (*param_vars)[2 * i];
      b = (*param_vars)[2 * i + 1];
    } else {
      w = tape.leaf(l.weight, param_grads);
      b = tape.leaf(l.bias, param_grads);
      if (param_vars) {
        param_vars->push_back(w);
        param_vars->push_back(b);
      }
    }
    h = tape.add_bias(tape.matmul_nt(h, w), b);
    if (i + 1 < params.layers.size()) h = tape.relu(h);
  }
  return h;
}

Tensor model_logits(const ModelParams& params, const Tensor& x) {
  Tape tape;
  Var xin = tape.leaf(x);
  Var logits = model_forward(tape, params, xin);
  return tape.value(logits);
}

std::vector<int> model_predict(const ModelParams& params, const Tensor& x) {
  Tensor logits = model_logits(params, x);
  std::size_t n = logits.shape[0], k = logits.shape[1];
  std::vector<int> preds(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.values.data() + i * k;
    preds[i] =
        static_cast<int>(std::max_element(row, row + k) - row);
  }
  return preds;
}

SgdState make_sgd_state(const ModelParams& params) {
  SgdState s;
  for (const auto& l : params.layers) {
    s.velocity.emplace_back(l.weight.size(), 0.0);
    s.velocity.emplace_back(l.bias.size(), 0.0);
  }
  return s;
}

void sgd_step(ModelParams& params,
              const std::vector<std::vector<double>>& grads, SgdState& state,
              const SgdConfig& config, double lr) {
  if (grads.size() != params.layers.size() * 2) {
    throw std::invalid_argument("sgd_step: gradient count mismatch");
  }
  for (const auto& g : grads) {
    for (double v : g) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("sgd_step: non-finite gradient, step aborted");
      }
    }
  }
  std::size_t gi = 0;
  for (auto& l : params.layers) {
    for (std::vector<double>* buf : {&l.weight.values, &l.bias.values}) {
      const std::vector<double>& g = grads[gi];
      std::vector<double>& v = state.velocity[gi];
      if (g.size() != buf->size()) {
        throw std::invalid_argument("sgd_step: gradient shape mismatch");
      }
      for (std::size_t j = 0; j < buf->size(); ++j) {
        double eff = g[j] + config.weight_decay * (*buf)[j];
        v[j] = config.momentum * v[j] + eff;
        (*buf)[j] -= lr * v[j];
      }
      ++gi;
    }
  }
}

void average_update(ModelParams& avg, const ModelParams& current,
                    double alpha) {
  if (avg.layers.size() != current.layers.size()) {
    throw std::logic_error("average_update: layer count mismatch");
  }
  for (std::size_t i = 0; i < avg.layers.size(); ++i) {
    auto blend = [alpha](Tensor& a, const Tensor& c) {
      if (!a.same_shape(c)) {
        throw std::logic_error("average_update: shape mismatch");
      }
      for (std::size_t j = 0; j < a.size(); ++j) {
        a.values[j] = alpha * a.values[j] + (1.0 - alpha) * c.values[j];
      }
    };
    blend(avg.layers[i].weight, current.layers[i].weight);
    blend(avg.layers[i].bias, current.layers[i].bias);
  }
}

void save_checkpoint(const ModelParams& params, const std::string& path,
                     std::uint64_t seed, std::size_t epoch) {
  nlohmann::ordered_json j;
  j["format"] = "fairtat-checkpoint-v1";
  j["seed"] = seed;
  j["epoch"] = epoch;
  j["dims"] = {{"input_dim", params.dims.input_dim},
               {"hidden_dims", params.dims.hidden_dims},
               {"num_classes", params.dims.num_classes}};
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : params.layers) {
    layers.push_back({{"weight_shape", l.weight.shape},
                      {"weight", l.weight.values},
                      {"bias", l.bias.values}});
  }
  j["layers"] = std::move(layers);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "fairtat-checkpoint-v1") {
    throw std::runtime_error("load_checkpoint: unrecognized format in " +
                             path);
  }
  Checkpoint ck;
  ck.seed = j.at("seed").get<std::uint64_t>();
  ck.epoch = j.at("epoch").get<std::size_t>();
  ck.params.dims.input_dim = j.at("dims").at("input_dim").get<std::size_t>();
  ck.params.dims.hidden_dims =
      j.at("dims").at("hidden_dims").get<std::vector<std::size_t>>();
  ck.params.dims.num_classes =
      j.at("dims").at("num_classes").get<std::size_t>();
  for (const auto& lj : j.at("layers")) {
    ModelParams::Layer l;
    l.weight = Tensor(lj.at("weight_shape").get<std::vector<std::size_t>>(),
                      lj.at("weight").get<std::vector<double>>());
    l.bias = Tensor({l.weight.shape[0]},
                    lj.at("bias").get<std::vector<double>>());
    ck.params.layers.push_back(std::move(l));
  }
  return ck;
}

}  // namespace fairtat
