#pragma once

// Embedding-space diagnostics: top-2 PCA projection and the silhouette score
// with labels as the cluster assignment.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dfd/rng.hpp"
#include "dfd/tensor.hpp"

namespace dfd {

namespace detail {

// Cyclic Jacobi eigensolver for a symmetric matrix (column-major irrelevant:
// symmetric). Returns eigenvalues and eigenvectors (columns of V).
inline void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& eigvals,
                         std::vector<double>& v) {
  v.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        double app = a[p * n + p], aqq = a[q * n + q];
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
  }
  eigvals.resize(n);
  for (std::size_t i = 0; i < n; ++i) eigvals[i] = a[i * n + i];
}

}  // namespace detail

// Mean-center, project onto the top-2 covariance eigenvectors; each
// component's sign is fixed so its largest-magnitude loading is positive.
template <typename T>
Tensor<T> pca_project(const Tensor<T>& emb) {
  if (emb.rank() != 2) throw std::runtime_error("pca_project: expected NxD");
  const std::size_t n = emb.shape[0], d = emb.shape[1];
  if (n < 3) throw std::runtime_error("pca_project: need at least 3 points");

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += static_cast<double>(emb.data[i * d + j]);
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<double> centered(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      centered[i * d + j] = static_cast<double>(emb.data[i * d + j]) - mean[j];

  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < d; ++p) {
      double cip = centered[i * d + p];
      for (std::size_t q = p; q < d; ++q) cov[p * d + q] += cip * centered[i * d + q];
    }
  double total_var = 0.0;
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = p; q < d; ++q) {
      cov[p * d + q] /= static_cast<double>(n);
      cov[q * d + p] = cov[p * d + q];
      if (p == q) total_var += cov[p * d + p];
    }
  if (total_var <= 0.0) throw std::runtime_error("pca_project: data has zero variance");

  std::vector<double> eigvals, v;
  detail::jacobi_eigen(cov, d, eigvals, v);
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return eigvals[a] > eigvals[b]; });

  Tensor<T> out({n, 2});
  for (int comp = 0; comp < 2; ++comp) {
    std::size_t col = order[static_cast<std::size_t>(comp) % d];
    // sign convention: largest-magnitude loading positive
    double best = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      if (std::abs(v[j * d + col]) > std::abs(best)) best = v[j * d + col];
    double sign = best < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += centered[i * d + j] * v[j * d + col];
      out.data[i * 2 + static_cast<std::size_t>(comp)] = static_cast<T>(acc * sign);
    }
  }
  return out;
}

// Mean over points of (b - a) / max(a, b), Euclidean distances, labels as
// clusters. Classes larger than max_per_class are subsampled with a seeded
// shuffle. Singleton clusters contribute 0.
template <typename T>
double silhouette_score(const Tensor<T>& emb, const std::vector<int>& labels,
                        std::size_t max_per_class = 2000, uint64_t seed = 0) {
  if (emb.rank() != 2) throw std::runtime_error("silhouette: expected NxD");
  const std::size_t n = emb.shape[0], d = emb.shape[1];
  if (labels.size() != n) throw std::runtime_error("silhouette: label count mismatch");

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty())
    throw std::runtime_error("silhouette: both classes must be present");

  auto subsample = [&](std::vector<std::size_t>& idx, uint64_t stream) {
    if (idx.size() <= max_per_class) return;
    Rng rng(derive_seed(seed, "silhouette-subsample", stream));
    rng.shuffle(idx);
    idx.resize(max_per_class);
  };
  subsample(pos, 1);
  subsample(neg, 2);

  auto dist = [&](std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double diff = static_cast<double>(emb.data[i * d + k]) -
                    static_cast<double>(emb.data[j * d + k]);
      acc += diff * diff;
    }
    return std::sqrt(acc);
  };

  auto mean_dist = [&](std::size_t i, const std::vector<std::size_t>& group, bool exclude_self) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j : group) {
      if (exclude_self && j == i) continue;
      acc += dist(i, j);
      ++count;
    }
    return count ? acc / static_cast<double>(count) : 0.0;
  };

  double total = 0.0;
  std::size_t counted = 0;
  for (int side = 0; side < 2; ++side) {
    const auto& own = side == 0 ? pos : neg;
    const auto& other = side == 0 ? neg : pos;
    for (std::size_t i : own) {
      double s = 0.0;
      if (own.size() > 1) {
        double a = mean_dist(i, own, true);
        double b = mean_dist(i, other, false);
        double mx = std::max(a, b);
        s = mx > 0.0 ? (b - a) / mx : 0.0;
      }
      total += s;
      ++counted;
    }
  }
  return total / static_cast<double>(counted);
}

}  // namespace dfd
