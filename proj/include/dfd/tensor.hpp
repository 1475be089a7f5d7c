#pragma once

// Dense row-major tensor and the three matmul shapes the layers need.
// Templated on the scalar type: training runs float, verification harnesses
// instantiate the same code in double.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfd/parallel.hpp"

namespace dfd {

template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T(0));
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

  std::size_t numel() const { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const { return shape.size(); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  // [rows, cols] view accessors
  T& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const T& at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

inline std::string shape_str(const std::vector<std::size_t>& s) {
  std::string r = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) r += "x";
    r += std::to_string(s[i]);
  }
  return r + "]";
}

// C[M,N] = A[M,K] * B[K,N]
template <typename T>
void matmul(const T* a, const T* b, T* c, std::size_t M, std::size_t K, std::size_t N) {
  parallel_for(M, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      T* crow = c + i * N;
      for (std::size_t j = 0; j < N; ++j) crow[j] = T(0);
      const T* arow = a + i * K;
      for (std::size_t k = 0; k < K; ++k) {
        T av = arow[k];
        const T* brow = b + k * N;
        for (std::size_t j = 0; j < N; ++j) crow[j] += av * brow[j];
      }
    }
  });
}

// C[M,N] = A^T * B with A[K,M], B[K,N]  (weight-gradient shape)
template <typename T>
void matmul_at_b(const T* a, const T* b, T* c, std::size_t K, std::size_t M, std::size_t N) {
  parallel_for(M, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      T* crow = c + i * N;
      for (std::size_t j = 0; j < N; ++j) crow[j] = T(0);
      for (std::size_t k = 0; k < K; ++k) {
        T av = a[k * M + i];
        const T* brow = b + k * N;
        for (std::size_t j = 0; j < N; ++j) crow[j] += av * brow[j];
      }
    }
  });
}

// C[M,N] = A * B^T with A[M,K], B[N,K]  (input-gradient shape)
template <typename T>
void matmul_a_bt(const T* a, const T* b, T* c, std::size_t M, std::size_t K, std::size_t N) {
  parallel_for(M, [=](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const T* arow = a + i * K;
      T* crow = c + i * N;
      for (std::size_t j = 0; j < N; ++j) {
        const T* brow = b + j * K;
        T acc = T(0);
        for (std::size_t k = 0; k < K; ++k) acc += arow[k] * brow[k];
        crow[j] = acc;
      }
    }
  });
}

}  // namespace dfd
