#pragma once

// Layer zoo with exact forward/backward pairs. Batches are the leading
// dimension: dense-style activations are [N,F], image-style are [N,H,W,C]
// row-major. Backward returns the exact derivative of the realized forward
// map: the dropout mask is the cached draw, and batchnorm differentiates
// through the batch statistics it actually used.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfd/rng.hpp"
#include "dfd/tensor.hpp"

namespace dfd {

enum class LayerKind {
  dense,
  conv3x3,
  conv5x5,
  batchnorm,
  dropout,
  relu,
  maxpool2,
  global_avg_pool,
  patchify,
};

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::conv5x5: return "conv5x5";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::dropout: return "dropout";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::patchify: return "patchify";
  }
  return "?";
}

inline LayerKind layer_kind_from_name(const std::string& s) {
  if (s == "dense") return LayerKind::dense;
  if (s == "conv3x3") return LayerKind::conv3x3;
  if (s == "conv5x5") return LayerKind::conv5x5;
  if (s == "batchnorm") return LayerKind::batchnorm;
  if (s == "dropout") return LayerKind::dropout;
  if (s == "relu") return LayerKind::relu;
  if (s == "maxpool2") return LayerKind::maxpool2;
  if (s == "global_avg_pool") return LayerKind::global_avg_pool;
  if (s == "patchify") return LayerKind::patchify;
  throw std::runtime_error("unknown layer kind: " + s);
}

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;    // dense fan-in / conv in-channels / batchnorm channels
  std::size_t out = 0;   // dense fan-out / conv out-channels
  double p = 0.0;        // dropout rate, [0,1)
  std::size_t patch = 0; // patchify patch size

  static LayerSpec dense_(std::size_t in, std::size_t out) {
    return {LayerKind::dense, in, out, 0.0, 0};
  }
  static LayerSpec conv3(std::size_t cin, std::size_t cout) {
    return {LayerKind::conv3x3, cin, cout, 0.0, 0};
  }
  static LayerSpec conv5(std::size_t cin, std::size_t cout) {
    return {LayerKind::conv5x5, cin, cout, 0.0, 0};
  }
  static LayerSpec batchnorm_(std::size_t channels) {
    return {LayerKind::batchnorm, channels, 0, 0.0, 0};
  }
  static LayerSpec dropout_(double rate) {
    return {LayerKind::dropout, 0, 0, rate, 0};
  }
  static LayerSpec relu_() { return {LayerKind::relu, 0, 0, 0.0, 0}; }
  static LayerSpec maxpool2_() { return {LayerKind::maxpool2, 0, 0, 0.0, 0}; }
  static LayerSpec gap_() { return {LayerKind::global_avg_pool, 0, 0, 0.0, 0}; }
  static LayerSpec patchify_(std::size_t patch) {
    return {LayerKind::patchify, 0, 0, 0.0, patch};
  }

  void validate() const {
    switch (kind) {
      case LayerKind::dense:
        if (in == 0 || out == 0) throw std::runtime_error("dense: sizes must be positive");
        break;
      case LayerKind::conv3x3:
      case LayerKind::conv5x5:
        if (in == 0 || out == 0) throw std::runtime_error("conv: channel counts must be positive");
        break;
      case LayerKind::batchnorm:
        if (in == 0) throw std::runtime_error("batchnorm: channel count must be positive");
        break;
      case LayerKind::dropout:
        if (!(p >= 0.0 && p < 1.0)) throw std::runtime_error("dropout: rate must be in [0,1)");
        break;
      case LayerKind::patchify:
        if (patch == 0) throw std::runtime_error("patchify: patch size must be positive");
        break;
      default:
        break;
    }
  }
};

// Per-sample shape propagation; throws on any mismatch.
inline std::vector<std::size_t> layer_out_shape(const LayerSpec& spec,
                                                const std::vector<std::size_t>& in) {
  auto fail = [&](const std::string& msg) -> std::vector<std::size_t> {
    throw std::runtime_error(std::string(layer_kind_name(spec.kind)) + ": " + msg +
                             " (input " + shape_str(in) + ")");
  };
  switch (spec.kind) {
    case LayerKind::dense:
      if (in.size() != 1) return fail("expects flat features");
      if (in[0] != spec.in)
        return fail("fan-in " + std::to_string(spec.in) + " does not match prior layer width " +
                    std::to_string(in[0]));
      return {spec.out};
    case LayerKind::conv3x3:
    case LayerKind::conv5x5:
      if (in.size() != 3) return fail("expects HxWxC input");
      if (in[2] != spec.in) return fail("channel mismatch, expected " + std::to_string(spec.in));
      return {in[0], in[1], spec.out};
    case LayerKind::batchnorm:
      if (in.empty() || in.back() != spec.in)
        return fail("channel mismatch, expected " + std::to_string(spec.in));
      return in;
    case LayerKind::dropout:
    case LayerKind::relu:
      return in;
    case LayerKind::maxpool2:
      if (in.size() != 3) return fail("expects HxWxC input");
      if (in[0] % 2 != 0 || in[1] % 2 != 0) return fail("extents must be even");
      return {in[0] / 2, in[1] / 2, in[2]};
    case LayerKind::global_avg_pool:
      if (in.size() != 3) return fail("expects HxWxC input");
      return {in[2]};
    case LayerKind::patchify:
      if (in.size() != 3) return fail("expects HxWxC input");
      if (in[0] % spec.patch != 0 || in[1] % spec.patch != 0)
        return fail("extents must be divisible by patch size");
      return {in[0] * in[1] * in[2]};
  }
  return fail("unhandled kind");
}

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

constexpr double kBatchNormEps = 1e-5;
constexpr double kBatchNormMomentum = 0.1;

template <typename T>
class Layer {
 public:
  LayerSpec spec;
  std::vector<std::size_t> in_shape, out_shape;  // per-sample

  // parameters / gradients
  Tensor<T> weight, bias, gweight, gbias;
  Tensor<T> gamma, beta, ggamma, gbeta;
  // batchnorm running state
  Tensor<T> run_mean, run_var;

  Layer() = default;
  Layer(const LayerSpec& s, const std::vector<std::size_t>& input_shape) : spec(s) {
    spec.validate();
    in_shape = input_shape;
    out_shape = layer_out_shape(spec, input_shape);
    switch (spec.kind) {
      case LayerKind::dense:
        weight = Tensor<T>({spec.in, spec.out});
        bias = Tensor<T>({spec.out});
        gweight = Tensor<T>({spec.in, spec.out});
        gbias = Tensor<T>({spec.out});
        break;
      case LayerKind::conv3x3:
      case LayerKind::conv5x5: {
        std::size_t k = kernel();
        weight = Tensor<T>({k * k * spec.in, spec.out});
        bias = Tensor<T>({spec.out});
        gweight = Tensor<T>({k * k * spec.in, spec.out});
        gbias = Tensor<T>({spec.out});
        break;
      }
      case LayerKind::batchnorm:
        gamma = Tensor<T>({spec.in});
        beta = Tensor<T>({spec.in});
        ggamma = Tensor<T>({spec.in});
        gbeta = Tensor<T>({spec.in});
        run_mean = Tensor<T>({spec.in});
        run_var = Tensor<T>({spec.in});
        for (auto& v : gamma.data) v = T(1);
        for (auto& v : run_var.data) v = T(1);
        break;
      default:
        break;
    }
  }

  std::size_t kernel() const { return spec.kind == LayerKind::conv5x5 ? 5 : 3; }

  std::vector<ParamRef<T>> params(const std::string& prefix) {
    std::vector<ParamRef<T>> out;
    switch (spec.kind) {
      case LayerKind::dense:
      case LayerKind::conv3x3:
      case LayerKind::conv5x5:
        out.push_back({prefix + ".weight", &weight, &gweight});
        out.push_back({prefix + ".bias", &bias, &gbias});
        break;
      case LayerKind::batchnorm:
        out.push_back({prefix + ".gamma", &gamma, &ggamma});
        out.push_back({prefix + ".beta", &beta, &gbeta});
        break;
      default:
        break;
    }
    return out;
  }

  // batchnorm running stats ride along in checkpoints but are not trainable
  std::vector<ParamRef<T>> state(const std::string& prefix) {
    std::vector<ParamRef<T>> out;
    if (spec.kind == LayerKind::batchnorm) {
      out.push_back({prefix + ".running_mean", &run_mean, nullptr});
      out.push_back({prefix + ".running_var", &run_var, nullptr});
    }
    return out;
  }

  Tensor<T> forward(const Tensor<T>& x, bool train, Rng* rng) {
    check_input(x);
    switch (spec.kind) {
      case LayerKind::dense: return fwd_dense(x);
      case LayerKind::conv3x3:
      case LayerKind::conv5x5: return fwd_conv(x);
      case LayerKind::batchnorm: return fwd_batchnorm(x, train);
      case LayerKind::dropout: return fwd_dropout(x, train, rng);
      case LayerKind::relu: return fwd_relu(x);
      case LayerKind::maxpool2: return fwd_maxpool(x);
      case LayerKind::global_avg_pool: return fwd_gap(x);
      case LayerKind::patchify: return fwd_patchify(x);
    }
    throw std::runtime_error("unhandled layer kind");
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    if (dy.numel() != batch_ * Tensor<T>::numel_of(out_shape))
      throw std::runtime_error(std::string(layer_kind_name(spec.kind)) +
                               ": gradient shape does not match cached forward");
    switch (spec.kind) {
      case LayerKind::dense: return bwd_dense(dy);
      case LayerKind::conv3x3:
      case LayerKind::conv5x5: return bwd_conv(dy);
      case LayerKind::batchnorm: return bwd_batchnorm(dy);
      case LayerKind::dropout: return bwd_dropout(dy);
      case LayerKind::relu: return bwd_relu(dy);
      case LayerKind::maxpool2: return bwd_maxpool(dy);
      case LayerKind::global_avg_pool: return bwd_gap(dy);
      case LayerKind::patchify: return bwd_patchify(dy);
    }
    throw std::runtime_error("unhandled layer kind");
  }

  template <typename U>
  Layer<U> cast() const {
    Layer<U> out;
    out.spec = spec;
    out.in_shape = in_shape;
    out.out_shape = out_shape;
    out.weight = weight.template cast<U>();
    out.bias = bias.template cast<U>();
    out.gweight = gweight.template cast<U>();
    out.gbias = gbias.template cast<U>();
    out.gamma = gamma.template cast<U>();
    out.beta = beta.template cast<U>();
    out.ggamma = ggamma.template cast<U>();
    out.gbeta = gbeta.template cast<U>();
    out.run_mean = run_mean.template cast<U>();
    out.run_var = run_var.template cast<U>();
    return out;
  }

 private:
  std::size_t batch_ = 0;
  Tensor<T> cache_in_;     // dense input / relu output / batchnorm xhat / dropout mask
  Tensor<T> cache_cols_;   // conv im2col
  std::vector<T> cache_invstd_;
  std::vector<uint32_t> cache_idx_;  // maxpool argmax
  bool cache_train_ = false;

  void check_input(const Tensor<T>& x) {
    std::size_t per = Tensor<T>::numel_of(in_shape);
    if (x.rank() < 1 || x.numel() == 0 || x.numel() % per != 0 ||
        x.shape[0] * per != x.numel())
      throw std::runtime_error(std::string(layer_kind_name(spec.kind)) +
                               ": input shape " + shape_str(x.shape) +
                               " does not match expected per-sample " + shape_str(in_shape));
    batch_ = x.shape[0];
  }

  Tensor<T> out_tensor() const {
    std::vector<std::size_t> s;
    s.push_back(batch_);
    for (auto e : out_shape) s.push_back(e);
    return Tensor<T>(s);
  }

  // ---- dense ----
  Tensor<T> fwd_dense(const Tensor<T>& x) {
    cache_in_ = x;
    Tensor<T> y = out_tensor();
    matmul(x.data.data(), weight.data.data(), y.data.data(), batch_, spec.in, spec.out);
    for (std::size_t n = 0; n < batch_; ++n)
      for (std::size_t j = 0; j < spec.out; ++j) y.data[n * spec.out + j] += bias.data[j];
    return y;
  }

  Tensor<T> bwd_dense(const Tensor<T>& dy) {
    matmul_at_b(cache_in_.data.data(), dy.data.data(), gweight.data.data(),
                batch_, spec.in, spec.out);
    for (std::size_t j = 0; j < spec.out; ++j) {
      double acc = 0.0;
      for (std::size_t n = 0; n < batch_; ++n) acc += static_cast<double>(dy.data[n * spec.out + j]);
      gbias.data[j] = static_cast<T>(acc);
    }
    Tensor<T> dx({batch_, spec.in});
    matmul_a_bt(dy.data.data(), weight.data.data(), dx.data.data(), batch_, spec.out, spec.in);
    return dx;
  }

  // ---- conv (stride 1, same zero padding) ----
  Tensor<T> fwd_conv(const Tensor<T>& x) {
    const std::size_t k = kernel(), pad = k / 2;
    const std::size_t H = in_shape[0], W = in_shape[1], Cin = spec.in, Cout = spec.out;
    const std::size_t rows = batch_ * H * W, K = k * k * Cin;
    cache_cols_ = Tensor<T>({rows, K});
    const T* xd = x.data.data();
    T* cols = cache_cols_.data.data();
    parallel_for(rows, [&](std::size_t r0, std::size_t r1) {
      for (std::size_t r = r0; r < r1; ++r) {
        std::size_t n = r / (H * W), rem = r % (H * W);
        std::size_t y = rem / W, xx = rem % W;
        T* dst = cols + r * K;
        for (std::size_t ky = 0; ky < k; ++ky) {
          std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - static_cast<std::ptrdiff_t>(pad);
          for (std::size_t kx = 0; kx < k; ++kx) {
            std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - static_cast<std::ptrdiff_t>(pad);
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H) || sx < 0 ||
                sx >= static_cast<std::ptrdiff_t>(W)) {
              for (std::size_t ci = 0; ci < Cin; ++ci) *dst++ = T(0);
            } else {
              const T* src = xd + ((n * H + static_cast<std::size_t>(sy)) * W +
                                   static_cast<std::size_t>(sx)) * Cin;
              for (std::size_t ci = 0; ci < Cin; ++ci) *dst++ = src[ci];
            }
          }
        }
      }
    });
    Tensor<T> y = out_tensor();
    matmul(cols, weight.data.data(), y.data.data(), rows, K, Cout);
    T* yd = y.data.data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < Cout; ++c) yd[r * Cout + c] += bias.data[c];
    return y;
  }

  Tensor<T> bwd_conv(const Tensor<T>& dy) {
    const std::size_t k = kernel(), pad = k / 2;
    const std::size_t H = in_shape[0], W = in_shape[1], Cin = spec.in, Cout = spec.out;
    const std::size_t rows = batch_ * H * W, K = k * k * Cin;
    matmul_at_b(cache_cols_.data.data(), dy.data.data(), gweight.data.data(), rows, K, Cout);
    for (std::size_t c = 0; c < Cout; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r) acc += static_cast<double>(dy.data[r * Cout + c]);
      gbias.data[c] = static_cast<T>(acc);
    }
    Tensor<T> dcols({rows, K});
    matmul_a_bt(dy.data.data(), weight.data.data(), dcols.data.data(), rows, Cout, K);
    Tensor<T> dx({batch_, H, W, Cin});
    const T* dc = dcols.data.data();
    T* dxd = dx.data.data();
    parallel_for(batch_ * H, [&](std::size_t b0, std::size_t b1) {
      for (std::size_t nh = b0; nh < b1; ++nh) {
        std::size_t n = nh / H, sy = nh % H;
        for (std::size_t sx = 0; sx < W; ++sx) {
          T* cell = dxd + ((n * H + sy) * W + sx) * Cin;
          for (std::size_t ky = 0; ky < k; ++ky) {
            std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(sy) + static_cast<std::ptrdiff_t>(pad) -
                                static_cast<std::ptrdiff_t>(ky);
            if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(H)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(sx) + static_cast<std::ptrdiff_t>(pad) -
                                  static_cast<std::ptrdiff_t>(kx);
              if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(W)) continue;
              std::size_t r = (n * H + static_cast<std::size_t>(oy)) * W + static_cast<std::size_t>(ox);
              const T* src = dc + r * K + (ky * k + kx) * Cin;
              for (std::size_t ci = 0; ci < Cin; ++ci) cell[ci] += src[ci];
            }
          }
        }
      }
    });
    return dx;
  }

  // ---- batchnorm over the trailing channel dimension ----
  Tensor<T> fwd_batchnorm(const Tensor<T>& x, bool train) {
    const std::size_t C = spec.in, rows = x.numel() / C;
    Tensor<T> y = out_tensor();
    cache_train_ = train;
    cache_invstd_.assign(C, T(0));
    if (train) {
      std::vector<double> mean(C, 0.0), var(C, 0.0);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < C; ++c) mean[c] += static_cast<double>(x.data[r * C + c]);
      for (std::size_t c = 0; c < C; ++c) mean[c] /= static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < C; ++c) {
          double d = static_cast<double>(x.data[r * C + c]) - mean[c];
          var[c] += d * d;
        }
      for (std::size_t c = 0; c < C; ++c) var[c] /= static_cast<double>(rows);
      cache_in_ = Tensor<T>({rows, C});  // xhat
      for (std::size_t c = 0; c < C; ++c) {
        double invstd = 1.0 / std::sqrt(var[c] + kBatchNormEps);
        cache_invstd_[c] = static_cast<T>(invstd);
        run_mean.data[c] = static_cast<T>((1.0 - kBatchNormMomentum) *
                                          static_cast<double>(run_mean.data[c]) +
                                          kBatchNormMomentum * mean[c]);
        run_var.data[c] = static_cast<T>((1.0 - kBatchNormMomentum) *
                                         static_cast<double>(run_var.data[c]) +
                                         kBatchNormMomentum * var[c]);
      }
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < C; ++c) {
          T xhat = static_cast<T>((static_cast<double>(x.data[r * C + c]) - mean[c]) *
                                  static_cast<double>(cache_invstd_[c]));
          cache_in_.data[r * C + c] = xhat;
          y.data[r * C + c] = gamma.data[c] * xhat + beta.data[c];
        }
    } else {
      for (std::size_t c = 0; c < C; ++c)
        cache_invstd_[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(run_var.data[c]) +
                                                          kBatchNormEps));
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < C; ++c)
          y.data[r * C + c] = gamma.data[c] * (x.data[r * C + c] - run_mean.data[c]) *
                                  cache_invstd_[c] +
                              beta.data[c];
    }
    return y;
  }

  Tensor<T> bwd_batchnorm(const Tensor<T>& dy) {
    const std::size_t C = spec.in, rows = dy.numel() / C;
    Tensor<T> dx = Tensor<T>(dy.shape);
    if (!cache_train_) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < C; ++c)
          dx.data[r * C + c] = dy.data[r * C + c] * gamma.data[c] * cache_invstd_[c];
      for (auto& v : ggamma.data) v = T(0);
      for (auto& v : gbeta.data) v = T(0);
      return dx;
    }
    std::vector<double> dbeta(C, 0.0), dgamma(C, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        double g = static_cast<double>(dy.data[r * C + c]);
        dbeta[c] += g;
        dgamma[c] += g * static_cast<double>(cache_in_.data[r * C + c]);
      }
    const double m = static_cast<double>(rows);
    for (std::size_t c = 0; c < C; ++c) {
      ggamma.data[c] = static_cast<T>(dgamma[c]);
      gbeta.data[c] = static_cast<T>(dbeta[c]);
    }
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        double g = static_cast<double>(dy.data[r * C + c]);
        double xhat = static_cast<double>(cache_in_.data[r * C + c]);
        double v = g - dbeta[c] / m - xhat * dgamma[c] / m;
        dx.data[r * C + c] =
            static_cast<T>(static_cast<double>(gamma.data[c]) *
                           static_cast<double>(cache_invstd_[c]) * v);
      }
    return dx;
  }

  // ---- dropout (inverted scaling; eval is the identity) ----
  Tensor<T> fwd_dropout(const Tensor<T>& x, bool train, Rng* rng) {
    if (!train || spec.p == 0.0) {
      cache_train_ = false;
      return x;
    }
    if (rng == nullptr) throw std::runtime_error("dropout: train mode requires an rng");
    cache_train_ = true;
    const T scale = static_cast<T>(1.0 / (1.0 - spec.p));
    cache_in_ = Tensor<T>(x.shape);  // mask-with-scale
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      T m = (rng->next_f64() >= spec.p) ? scale : T(0);
      cache_in_.data[i] = m;
      y.data[i] = x.data[i] * m;
    }
    return y;
  }

  Tensor<T> bwd_dropout(const Tensor<T>& dy) {
    if (!cache_train_) return dy;
    Tensor<T> dx(dy.shape);
    for (std::size_t i = 0; i < dy.numel(); ++i) dx.data[i] = dy.data[i] * cache_in_.data[i];
    return dx;
  }

  // ---- relu (derivative at 0 is 0) ----
  Tensor<T> fwd_relu(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    cache_in_ = y;
    return y;
  }

  Tensor<T> bwd_relu(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape);
    for (std::size_t i = 0; i < dy.numel(); ++i)
      dx.data[i] = cache_in_.data[i] > T(0) ? dy.data[i] : T(0);
    return dx;
  }

  // ---- maxpool 2x2 stride 2 (ties go to the first element scanned) ----
  Tensor<T> fwd_maxpool(const Tensor<T>& x) {
    const std::size_t H = in_shape[0], W = in_shape[1], C = in_shape[2];
    const std::size_t Ho = H / 2, Wo = W / 2;
    Tensor<T> y = out_tensor();
    cache_idx_.assign(y.numel(), 0);
    const T* xd = x.data.data();
    for (std::size_t n = 0; n < batch_; ++n)
      for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox)
          for (std::size_t c = 0; c < C; ++c) {
            std::size_t best = ((n * H + oy * 2) * W + ox * 2) * C + c;
            T bv = xd[best];
            const std::size_t cand[3] = {((n * H + oy * 2) * W + ox * 2 + 1) * C + c,
                                         ((n * H + oy * 2 + 1) * W + ox * 2) * C + c,
                                         ((n * H + oy * 2 + 1) * W + ox * 2 + 1) * C + c};
            for (std::size_t q : cand)
              if (xd[q] > bv) {
                bv = xd[q];
                best = q;
              }
            std::size_t o = ((n * Ho + oy) * Wo + ox) * C + c;
            y.data[o] = bv;
            cache_idx_[o] = static_cast<uint32_t>(best);
          }
    return y;
  }

  Tensor<T> bwd_maxpool(const Tensor<T>& dy) {
    std::vector<std::size_t> s{batch_};
    for (auto e : in_shape) s.push_back(e);
    Tensor<T> dx(s);
    for (std::size_t o = 0; o < dy.numel(); ++o) dx.data[cache_idx_[o]] += dy.data[o];
    return dx;
  }

  // ---- global average pool ----
  Tensor<T> fwd_gap(const Tensor<T>& x) {
    const std::size_t H = in_shape[0], W = in_shape[1], C = in_shape[2];
    Tensor<T> y = out_tensor();
    const double inv = 1.0 / static_cast<double>(H * W);
    for (std::size_t n = 0; n < batch_; ++n)
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t p = 0; p < H * W; ++p)
          acc += static_cast<double>(x.data[(n * H * W + p) * C + c]);
        y.data[n * C + c] = static_cast<T>(acc * inv);
      }
    return y;
  }

  Tensor<T> bwd_gap(const Tensor<T>& dy) {
    const std::size_t H = in_shape[0], W = in_shape[1], C = in_shape[2];
    std::vector<std::size_t> s{batch_, H, W, C};
    Tensor<T> dx(s);
    const T inv = static_cast<T>(1.0 / static_cast<double>(H * W));
    for (std::size_t n = 0; n < batch_; ++n)
      for (std::size_t p = 0; p < H * W; ++p)
        for (std::size_t c = 0; c < C; ++c)
          dx.data[(n * H * W + p) * C + c] = dy.data[n * C + c] * inv;
    return dx;
  }

  // ---- patchify: flatten in patch-major order (a fixed permutation) ----
  Tensor<T> fwd_patchify(const Tensor<T>& x) {
    const std::size_t H = in_shape[0], W = in_shape[1], C = in_shape[2], P = spec.patch;
    const std::size_t per = H * W * C;
    Tensor<T> y = out_tensor();
    for (std::size_t n = 0; n < batch_; ++n) {
      std::size_t o = n * per;
      for (std::size_t py = 0; py < H / P; ++py)
        for (std::size_t px = 0; px < W / P; ++px)
          for (std::size_t iy = 0; iy < P; ++iy)
            for (std::size_t ix = 0; ix < P; ++ix)
              for (std::size_t c = 0; c < C; ++c)
                y.data[o++] = x.data[((n * H + py * P + iy) * W + px * P + ix) * C + c];
    }
    return y;
  }

  Tensor<T> bwd_patchify(const Tensor<T>& dy) {
    const std::size_t H = in_shape[0], W = in_shape[1], C = in_shape[2], P = spec.patch;
    const std::size_t per = H * W * C;
    Tensor<T> dx({batch_, H, W, C});
    for (std::size_t n = 0; n < batch_; ++n) {
      std::size_t o = n * per;
      for (std::size_t py = 0; py < H / P; ++py)
        for (std::size_t px = 0; px < W / P; ++px)
          for (std::size_t iy = 0; iy < P; ++iy)
            for (std::size_t ix = 0; ix < P; ++ix)
              for (std::size_t c = 0; c < C; ++c)
                dx.data[((n * H + py * P + iy) * W + px * P + ix) * C + c] = dy.data[o++];
    }
    return dx;
  }
};

}  // namespace dfd
