#pragma once

// Supervised contrastive loss (multi-positive, anchor-mean form) and
// numerically stable binary cross-entropy with logits. Both return exact
// gradients with respect to their inputs; scalar reductions accumulate in
// double regardless of the tensor scalar type.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfd/tensor.hpp"

namespace dfd {

struct SupConConfig {
  double temperature = 0.07;
};

template <typename T>
struct RowNormalizeResult {
  Tensor<T> normalized;
  std::vector<T> norms;
};

template <typename T>
RowNormalizeResult<T> l2_normalize_rows(const Tensor<T>& z) {
  if (z.rank() != 2) throw std::runtime_error("l2_normalize_rows: expected an NxD matrix");
  const std::size_t n = z.shape[0], d = z.shape[1];
  RowNormalizeResult<T> out;
  out.normalized = Tensor<T>({n, d});
  out.norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double v = static_cast<double>(z.data[i * d + j]);
      acc += v * v;
    }
    double norm = std::sqrt(acc);
    if (!(norm > 0.0))
      throw std::runtime_error("l2_normalize_rows: row " + std::to_string(i) + " has zero norm");
    out.norms[i] = static_cast<T>(norm);
    for (std::size_t j = 0; j < d; ++j)
      out.normalized.data[i * d + j] = static_cast<T>(static_cast<double>(z.data[i * d + j]) / norm);
  }
  return out;
}

// Chain rule through row normalization: d/dz of zhat = z/|z| is
// (grad - zhat * <zhat, grad>) / |z| per row.
template <typename T>
Tensor<T> l2_normalize_rows_backward(const Tensor<T>& normalized, const std::vector<T>& norms,
                                     const Tensor<T>& grad) {
  const std::size_t n = normalized.shape[0], d = normalized.shape[1];
  Tensor<T> out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      dot += static_cast<double>(normalized.data[i * d + j]) *
             static_cast<double>(grad.data[i * d + j]);
    double inv = 1.0 / static_cast<double>(norms[i]);
    for (std::size_t j = 0; j < d; ++j)
      out.data[i * d + j] = static_cast<T>((static_cast<double>(grad.data[i * d + j]) -
                                            static_cast<double>(normalized.data[i * d + j]) * dot) *
                                           inv);
  }
  return out;
}

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;
  bool no_positives = false;  // warning: no anchor had a positive
};

// Anchor-mean SupCon over unit-norm rows z with binary labels y
// (1 = real, 0 = fake). For anchor i with positives P(i) inside the batch:
//   L_i = -(1/|P(i)|) sum_{p in P(i)} log( exp(z_i.z_p / tau)
//                                          / sum_{a != i} exp(z_i.z_a / tau) )
// and the loss is the mean of L_i over anchors with at least one positive.
// Row-max logits are subtracted before exponentiation (exact, cancels).
template <typename T>
LossResult<T> supcon_loss(const Tensor<T>& z, const std::vector<int>& labels,
                          const SupConConfig& cfg = {}) {
  if (z.rank() != 2) throw std::runtime_error("supcon_loss: expected an NxD matrix");
  const std::size_t n = z.shape[0], d = z.shape[1];
  if (n < 2) throw std::runtime_error("supcon_loss: batch must have at least 2 samples");
  if (labels.size() != n) throw std::runtime_error("supcon_loss: label count mismatch");
  if (!(cfg.temperature > 0)) throw std::runtime_error("supcon_loss: temperature must be > 0");
  const double tau = cfg.temperature;

  // similarity matrix S = Z Z^T
  Tensor<T> sim({n, n});
  matmul_a_bt(z.data.data(), z.data.data(), sim.data.data(), n, d, n);

  std::size_t anchors_used = 0;
  std::vector<std::size_t> pos_count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < n; ++a)
      if (a != i && labels[a] == labels[i]) ++pos_count[i];
    if (pos_count[i] > 0) ++anchors_used;
  }

  LossResult<T> out;
  out.grad = Tensor<T>({n, d});
  if (anchors_used == 0) {
    out.no_positives = true;
    return out;  // loss 0, zero gradient
  }

  // coeff[i][a] = dL/dS_ia; gradient is (coeff + coeff^T) Z
  Tensor<T> coeff({n, n});
  double total = 0.0;
  const double anchor_w = 1.0 / static_cast<double>(anchors_used);
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (pos_count[i] == 0) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a)
      if (a != i) mx = std::max(mx, static_cast<double>(sim.data[i * n + a]) / tau);
    double denom = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      q[a] = std::exp(static_cast<double>(sim.data[i * n + a]) / tau - mx);
      denom += q[a];
    }
    const double log_denom = std::log(denom);
    const double inv_pos = 1.0 / static_cast<double>(pos_count[i]);
    double li = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      double softmax = q[a] / denom;
      double is_pos = (labels[a] == labels[i]) ? 1.0 : 0.0;
      coeff.data[i * n + a] =
          static_cast<T>(anchor_w / tau * (softmax - is_pos * inv_pos));
      if (is_pos != 0.0)
        li -= (static_cast<double>(sim.data[i * n + a]) / tau - mx - log_denom);
    }
    total += li * inv_pos;
  }
  out.loss = total * anchor_w;

  // grad = (coeff + coeff^T) Z
  Tensor<T> sym({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < n; ++a)
      sym.data[i * n + a] = coeff.data[i * n + a] + coeff.data[a * n + i];
  matmul(sym.data.data(), z.data.data(), out.grad.data.data(), n, n, d);
  return out;
}

// Stable BCE with logits, averaged over the batch:
//   per-sample loss = max(x,0) - x*y + log(1 + exp(-|x|))
//   d/dx = (sigmoid(x) - y) / N
template <typename T>
LossResult<T> bce_logits_loss(const Tensor<T>& logits, const std::vector<int>& targets) {
  const std::size_t n = logits.numel();
  if (n == 0) throw std::runtime_error("bce_logits_loss: empty batch");
  if (targets.size() != n) throw std::runtime_error("bce_logits_loss: target count mismatch");
  LossResult<T> out;
  out.grad = Tensor<T>(logits.shape);
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    int y = targets[i];
    if (y != 0 && y != 1) throw std::runtime_error("bce_logits_loss: targets must be 0 or 1");
    double x = static_cast<double>(logits.data[i]);
    total += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    double sigma = 1.0 / (1.0 + std::exp(-x));
    out.grad.data[i] = static_cast<T>((sigma - y) * inv_n);
  }
  out.loss = total * inv_n;
  return out;
}

}  // namespace dfd
