#pragma once

// Adam / AdamW with decoupled weight decay. adam_step is adamw_step with the
// decay term pinned to zero, so the two agree bit-for-bit at lambda = 0.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfd/layers.hpp"
#include "dfd/tensor.hpp"

namespace dfd {

struct OptimConfig {
  std::string algorithm = "adamw";  // "adamw" | "adam"
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  void validate() const {
    if (algorithm != "adamw" && algorithm != "adam")
      throw std::runtime_error("optimizer: unknown algorithm '" + algorithm + "'");
    if (!(lr > 0)) throw std::runtime_error("optimizer: lr must be positive");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
      throw std::runtime_error("optimizer: betas must be in [0,1)");
    if (!(eps > 0)) throw std::runtime_error("optimizer: eps must be positive");
    if (weight_decay < 0) throw std::runtime_error("optimizer: weight decay must be >= 0");
    if (algorithm == "adam" && weight_decay != 0.0)
      throw std::runtime_error("optimizer: adam requires weight_decay == 0");
  }
};

template <typename T>
struct OptimizerState {
  std::vector<Tensor<T>> m, v;
  uint64_t t = 0;

  template <typename P>
  static OptimizerState init(const std::vector<P>& params) {
    OptimizerState s;
    for (const auto& p : params) {
      s.m.push_back(Tensor<T>(p.value->shape));
      s.v.push_back(Tensor<T>(p.value->shape));
    }
    return s;
  }
};

// One decoupled-weight-decay Adam step over every parameter tensor.
// `lr` is passed explicitly so the plateau scheduler can drive it.
template <typename T>
void adamw_step(std::vector<ParamRef<T>>& params, OptimizerState<T>& state,
                const OptimConfig& cfg, double lr) {
  if (params.size() != state.m.size())
    throw std::runtime_error("optimizer state does not match parameter list");
  state.t += 1;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<T>& theta = *params[pi].value;
    const Tensor<T>& g = *params[pi].grad;
    Tensor<T>& m = state.m[pi];
    Tensor<T>& v = state.v[pi];
    if (g.numel() != theta.numel())
      throw std::runtime_error("gradient shape mismatch for " + params[pi].name);
    for (std::size_t i = 0; i < theta.numel(); ++i) {
      double gi = static_cast<double>(g.data[i]);
      if (!std::isfinite(gi))
        throw std::runtime_error("non-finite gradient in parameter " + params[pi].name);
      double mi = b1 * static_cast<double>(m.data[i]) + (1.0 - b1) * gi;
      double vi = b2 * static_cast<double>(v.data[i]) + (1.0 - b2) * gi * gi;
      m.data[i] = static_cast<T>(mi);
      v.data[i] = static_cast<T>(vi);
      double mhat = mi / bc1;
      double vhat = vi / bc2;
      double update = mhat / (std::sqrt(vhat) + cfg.eps) +
                      cfg.weight_decay * static_cast<double>(theta.data[i]);
      theta.data[i] = static_cast<T>(static_cast<double>(theta.data[i]) - lr * update);
    }
  }
}

template <typename T>
void adam_step(std::vector<ParamRef<T>>& params, OptimizerState<T>& state,
               const OptimConfig& cfg, double lr) {
  OptimConfig c = cfg;
  c.weight_decay = 0.0;
  adamw_step(params, state, c, lr);
}

}  // namespace dfd
