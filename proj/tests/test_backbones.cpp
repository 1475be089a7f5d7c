#include "catch_amalgamated.hpp"

#include <set>

#include "dfd/losses.hpp"
#include "dfd/model.hpp"

using namespace dfd;

TEST_CASE("identical spec and seed build bit-identical backbones", "[backbones]") {
  auto spec = backbone_preset("local-cnn", 32);
  auto a = build_backbone<float>(spec, 7);
  auto b = build_backbone<float>(spec, 7);
  CHECK(a.content_hash() == b.content_hash());
  auto c = build_backbone<float>(spec, 8);
  CHECK(a.content_hash() != c.content_hash());
}

TEST_CASE("every preset emits a 64-dim embedding per sample", "[backbones]") {
  for (const auto& name : backbone_preset_names()) {
    auto spec = backbone_preset(name, 32);
    auto model = build_backbone<float>(spec, 3);
    Tensor<float> x({2, 32, 32, 3});
    Rng rng(1);
    for (auto& v : x.data) v = rng.next_f32();
    Rng drop(2);
    auto emb = model.forward(x, true, &drop);
    REQUIRE(emb.shape == std::vector<std::size_t>{2, 64});
    CHECK(emb.all_finite());
  }
}

TEST_CASE("presets are pairwise architecturally distinct", "[backbones]") {
  std::set<std::string> signatures;
  for (const auto& name : backbone_preset_names()) {
    auto spec = backbone_preset(name, 32);
    std::string sig;
    for (const auto& l : spec.layers) sig += std::string(layer_kind_name(l.kind)) + ";";
    signatures.insert(sig);
  }
  CHECK(signatures.size() == 3);
}

TEST_CASE("mismatched layer chain is rejected at build time", "[backbones]") {
  BackboneSpec spec;
  spec.name = "custom";
  spec.input_h = spec.input_w = 8;
  spec.input_c = 3;
  spec.embedding_dim = 4;
  spec.layers = {LayerSpec::gap_(), LayerSpec::dense_(7, 4)};  // gap emits 3 channels
  CHECK_THROWS_WITH(build_backbone<float>(spec, 1),
                    Catch::Matchers::ContainsSubstring("fan-in"));

  spec.layers = {LayerSpec::gap_(), LayerSpec::dense_(3, 7)};  // final width != embedding_dim
  CHECK_THROWS_WITH(build_backbone<float>(spec, 1),
                    Catch::Matchers::ContainsSubstring("expected [4]"));
}

TEST_CASE("he-uniform limits depend on fan-in", "[backbones]") {
  auto model = build_model<float>({LayerSpec::dense_(100, 50)}, {100}, 5);
  const double limit = std::sqrt(6.0 / 100.0);
  float mx = 0;
  for (auto v : model.layers[0].weight.data) {
    CHECK(std::abs(v) <= limit);
    mx = std::max(mx, std::abs(v));
  }
  CHECK(mx > 0.5 * limit);  // draws actually spread over the interval
  for (auto v : model.layers[0].bias.data) CHECK(v == 0.f);
}

TEST_CASE("float and double instantiations agree to float precision", "[backbones]") {
  auto spec = backbone_preset("multiscale-cnn", 16);
  auto mf = build_backbone<float>(spec, 11);
  auto md = mf.cast<double>();
  Tensor<float> x({4, 16, 16, 3});
  Rng rng(4);
  for (auto& v : x.data) v = rng.next_f32();
  auto xd = x.cast<double>();
  auto ef = mf.forward(x, false);
  auto ed = md.forward(xd, false);
  for (std::size_t i = 0; i < ef.numel(); ++i)
    CHECK(std::abs(static_cast<double>(ef.data[i]) - ed.data[i]) < 1e-4);
}

TEST_CASE("backbone forward then supcon runs end to end", "[backbones]") {
  auto spec = backbone_preset("global-mlp", 16);
  auto model = build_backbone<float>(spec, 21);
  Tensor<float> x({6, 16, 16, 3});
  Rng rng(6);
  for (auto& v : x.data) v = rng.next_f32();
  Rng drop(9);
  auto emb = model.forward(x, true, &drop);
  auto norm = l2_normalize_rows(emb);
  auto res = supcon_loss(norm.normalized, {1, 0, 1, 0, 1, 0}, {});
  CHECK(std::isfinite(res.loss));
  CHECK(res.loss >= 0);
  auto demb = l2_normalize_rows_backward(norm.normalized, norm.norms, res.grad);
  auto dx = model.backward(demb);
  CHECK(dx.shape == x.shape);
  CHECK(dx.all_finite());
}
