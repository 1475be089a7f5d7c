#pragma once

// Sequential models built from LayerSpecs, plus the three backbone presets.
// Parameters are He-uniform initialized from a seeded stream, so
// (spec, seed) fixes every weight bit-exactly.

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfd/layers.hpp"
#include "dfd/rng.hpp"
#include "dfd/tensor.hpp"

namespace dfd {

struct BackboneSpec {
  std::string name;  // preset name or "custom"
  std::size_t input_h = 32, input_w = 32, input_c = 3;
  std::vector<LayerSpec> layers;
  std::size_t embedding_dim = 64;
};

inline nlohmann::json layer_spec_to_json(const LayerSpec& s) {
  nlohmann::json j;
  j["kind"] = layer_kind_name(s.kind);
  if (s.in) j["in"] = s.in;
  if (s.out) j["out"] = s.out;
  if (s.kind == LayerKind::dropout) j["p"] = s.p;
  if (s.patch) j["patch"] = s.patch;
  return j;
}

inline LayerSpec layer_spec_from_json(const nlohmann::json& j) {
  LayerSpec s;
  s.kind = layer_kind_from_name(j.at("kind").get<std::string>());
  s.in = j.value("in", 0);
  s.out = j.value("out", 0);
  s.p = j.value("p", 0.0);
  s.patch = j.value("patch", 0);
  return s;
}

inline nlohmann::json backbone_spec_to_json(const BackboneSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["input"] = {s.input_h, s.input_w, s.input_c};
  j["embedding_dim"] = s.embedding_dim;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : s.layers) j["layers"].push_back(layer_spec_to_json(l));
  return j;
}

inline BackboneSpec backbone_spec_from_json(const nlohmann::json& j) {
  BackboneSpec s;
  s.name = j.at("name").get<std::string>();
  auto in = j.at("input");
  s.input_h = in.at(0);
  s.input_w = in.at(1);
  s.input_c = in.at(2);
  s.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  for (const auto& lj : j.at("layers")) s.layers.push_back(layer_spec_from_json(lj));
  return s;
}

// Toy stand-ins with distinct inductive biases: a plain 3x3 conv stack, a
// mixed 5x5/3x3 conv stack with batchnorm, and a patch-flattening MLP.
inline BackboneSpec backbone_preset(const std::string& name, std::size_t image_size = 32,
                                    std::size_t embedding_dim = 64) {
  BackboneSpec s;
  s.name = name;
  s.input_h = s.input_w = image_size;
  s.input_c = 3;
  s.embedding_dim = embedding_dim;
  if (name == "local-cnn") {
    s.layers = {
        LayerSpec::conv3(3, 4),  LayerSpec::relu_(), LayerSpec::maxpool2_(),
        LayerSpec::conv3(4, 8),  LayerSpec::relu_(), LayerSpec::maxpool2_(),
        LayerSpec::conv3(8, 16), LayerSpec::relu_(), LayerSpec::gap_(),
        LayerSpec::dense_(16, embedding_dim),
    };
  } else if (name == "multiscale-cnn") {
    s.layers = {
        LayerSpec::conv5(3, 4),  LayerSpec::batchnorm_(4),  LayerSpec::relu_(),
        LayerSpec::maxpool2_(),  LayerSpec::conv3(4, 8),    LayerSpec::batchnorm_(8),
        LayerSpec::relu_(),      LayerSpec::maxpool2_(),    LayerSpec::conv3(8, 16),
        LayerSpec::relu_(),      LayerSpec::gap_(),         LayerSpec::dense_(16, embedding_dim),
    };
  } else if (name == "global-mlp") {
    std::size_t flat = image_size * image_size * 3;
    s.layers = {
        LayerSpec::patchify_(4),
        LayerSpec::dense_(flat, 96),
        LayerSpec::batchnorm_(96),
        LayerSpec::relu_(),
        LayerSpec::dropout_(0.1),
        LayerSpec::dense_(96, embedding_dim),
    };
  } else {
    throw std::runtime_error("unknown backbone preset: " + name);
  }
  return s;
}

inline const std::vector<std::string>& backbone_preset_names() {
  static const std::vector<std::string> names = {"local-cnn", "multiscale-cnn", "global-mlp"};
  return names;
}

template <typename T>
class Model {
 public:
  std::vector<Layer<T>> layers;
  std::vector<std::size_t> input_shape;  // per-sample

  Model() = default;

  Tensor<T> forward(const Tensor<T>& x, bool train, Rng* rng = nullptr) {
    Tensor<T> cur = x;
    for (auto& l : layers) cur = l.forward(cur, train, rng);
    return cur;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> cur = dy;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) cur = it->backward(cur);
    return cur;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto p = layers[i].params("layer" + std::to_string(i));
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

  std::vector<ParamRef<T>> state_tensors() {
    std::vector<ParamRef<T>> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto p = layers[i].state("layer" + std::to_string(i));
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

  std::size_t param_count() {
    std::size_t n = 0;
    for (auto& p : params()) n += p.value->numel();
    return n;
  }

  // Content hash over parameter and running-state bytes, in declaration order.
  uint64_t content_hash() {
    uint64_t h = 0xcbf29ce484222325ull;
    for (auto& p : params()) {
      h = fnv1a(p.name, h);
      h = fnv1a(p.value->data.data(), p.value->data.size() * sizeof(T), h);
    }
    for (auto& p : state_tensors()) {
      h = fnv1a(p.name, h);
      h = fnv1a(p.value->data.data(), p.value->data.size() * sizeof(T), h);
    }
    return h;
  }

  template <typename U>
  Model<U> cast() const {
    Model<U> out;
    out.input_shape = input_shape;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) out.layers.push_back(l.template cast<U>());
    return out;
  }
};

namespace detail {
template <typename T>
void he_uniform_init(Layer<T>& layer, Rng& rng) {
  std::size_t fan_in = 0;
  switch (layer.spec.kind) {
    case LayerKind::dense:
      fan_in = layer.spec.in;
      break;
    case LayerKind::conv3x3:
    case LayerKind::conv5x5:
      fan_in = layer.kernel() * layer.kernel() * layer.spec.in;
      break;
    default:
      return;  // batchnorm and stateless layers keep their defaults
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& w : layer.weight.data) w = static_cast<T>(rng.uniform(-limit, limit));
  // biases start at zero
}
}  // namespace detail

template <typename T = float>
Model<T> build_model(const std::vector<LayerSpec>& specs,
                     const std::vector<std::size_t>& input_shape, uint64_t seed) {
  Model<T> m;
  m.input_shape = input_shape;
  std::vector<std::size_t> cur = input_shape;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    m.layers.emplace_back(specs[i], cur);
    cur = m.layers.back().out_shape;
    Rng rng(derive_seed(seed, "init", i));
    detail::he_uniform_init(m.layers.back(), rng);
  }
  return m;
}

template <typename T = float>
Model<T> build_backbone(const BackboneSpec& spec, uint64_t seed) {
  if (spec.layers.empty()) throw std::runtime_error("backbone spec has no layers");
  Model<T> m = build_model<T>(spec.layers, {spec.input_h, spec.input_w, spec.input_c}, seed);
  const auto& out = m.layers.back().out_shape;
  if (out.size() != 1 || out[0] != spec.embedding_dim)
    throw std::runtime_error("backbone '" + spec.name + "' outputs " + shape_str(out) +
                             " per sample, expected [" + std::to_string(spec.embedding_dim) + "]");
  return m;
}

}  // namespace dfd
