#include "catch_amalgamated.hpp"

#include "dfd/gradcheck.hpp"
#include "dfd/layers.hpp"
#include "dfd/model.hpp"
#include "dfd/verify.hpp"

using namespace dfd;

TEST_CASE("relu forward and backward", "[layers]") {
  Layer<float> relu(LayerSpec::relu_(), {3});
  Tensor<float> x({1, 3});
  x.data = {-1.f, 0.f, 2.f};
  auto y = relu.forward(x, true, nullptr);
  CHECK(y.data == std::vector<float>{0.f, 0.f, 2.f});

  Layer<float> relu2(LayerSpec::relu_(), {2});
  Tensor<float> x2({1, 2});
  x2.data = {-1.f, 2.f};
  relu2.forward(x2, true, nullptr);
  Tensor<float> g({1, 2});
  g.data = {1.f, 1.f};
  auto dx = relu2.backward(g);
  CHECK(dx.data == std::vector<float>{0.f, 1.f});
}

TEST_CASE("dropout is the identity in eval mode and scales in train mode", "[layers]") {
  Layer<float> drop(LayerSpec::dropout_(0.3), {8});
  Tensor<float> x({2, 8});
  for (size_t i = 0; i < x.numel(); ++i) x.data[i] = static_cast<float>(i) * 0.25f - 1.f;
  auto y = drop.forward(x, false, nullptr);
  CHECK(y.data == x.data);  // exact identity

  Rng rng(5);
  auto yt = drop.forward(x, true, &rng);
  const float scale = 1.0f / 0.7f;
  for (size_t i = 0; i < x.numel(); ++i) {
    bool zero = yt.data[i] == 0.f;
    bool scaled = std::abs(yt.data[i] - x.data[i] * scale) < 1e-6f;
    CHECK((zero || scaled));
  }
  CHECK_THROWS_WITH(drop.forward(x, true, nullptr), Catch::Matchers::ContainsSubstring("rng"));
}

TEST_CASE("dropout train-mode mean stays within 2% of the input", "[layers]") {
  Layer<float> drop(LayerSpec::dropout_(0.3), {1});
  Tensor<float> x({1, 1});
  x.data = {1.f};
  double acc = 0.0;
  Rng rng(77);
  const int n = 10000;
  for (int i = 0; i < n; ++i) acc += drop.forward(x, true, &rng).data[0];
  CHECK(std::abs(acc / n - 1.0) < 0.02);
}

TEST_CASE("batchnorm train output is normalized per channel", "[layers]") {
  Layer<float> bn(LayerSpec::batchnorm_(3), {3});
  Rng rng(3);
  Tensor<float> x({64, 3});
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(-4, 7));
  auto y = bn.forward(x, true, nullptr);
  for (int c = 0; c < 3; ++c) {
    double mean = 0, var = 0;
    for (int r = 0; r < 64; ++r) mean += y.data[r * 3 + c];
    mean /= 64;
    for (int r = 0; r < 64; ++r) {
      double d = y.data[r * 3 + c] - mean;
      var += d * d;
    }
    var /= 64;
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("batchnorm eval uses running statistics", "[layers]") {
  Layer<float> bn(LayerSpec::batchnorm_(2), {2});
  Rng rng(9);
  Tensor<float> x({32, 2});
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(1, 3));
  for (int step = 0; step < 50; ++step) bn.forward(x, true, nullptr);
  auto y = bn.forward(x, false, nullptr);
  // after many identical batches the running stats converge to batch stats,
  // so eval output is near-normalized too
  double mean = 0;
  for (int r = 0; r < 32; ++r) mean += y.data[r * 2];
  CHECK(std::abs(mean / 32) < 0.05);
}

TEST_CASE("dense backward produces the outer-product weight gradient", "[layers]") {
  Layer<float> dense(LayerSpec::dense_(2, 2), {2});
  // W = [[1,2],[3,4]], b = 0
  dense.weight.data = {1, 2, 3, 4};
  Tensor<float> x({1, 2});
  x.data = {5, 6};
  auto y = dense.forward(x, true, nullptr);
  CHECK(y.data[0] == 23.f);  // 5*1 + 6*3
  CHECK(y.data[1] == 34.f);  // 5*2 + 6*4
  Tensor<float> g({1, 2});
  g.data = {1, 1};
  auto dx = dense.backward(g);
  // dW = x^T g
  CHECK(dense.gweight.data == std::vector<float>{5, 5, 6, 6});
  CHECK(dense.gbias.data == std::vector<float>{1, 1});
  CHECK(dx.data == std::vector<float>{3, 7});
}

TEST_CASE("maxpool picks the max and routes gradient to it", "[layers]") {
  Layer<float> pool(LayerSpec::maxpool2_(), {2, 2, 1});
  Tensor<float> x({1, 2, 2, 1});
  x.data = {1, 4, 3, 2};
  auto y = pool.forward(x, true, nullptr);
  CHECK(y.data[0] == 4.f);
  Tensor<float> g({1, 1, 1, 1});
  g.data = {2.f};
  auto dx = pool.backward(g);
  CHECK(dx.data == std::vector<float>{0, 2, 0, 0});
}

TEST_CASE("global average pool averages each channel", "[layers]") {
  Layer<float> gap(LayerSpec::gap_(), {2, 2, 2});
  Tensor<float> x({1, 2, 2, 2});
  x.data = {1, 10, 2, 20, 3, 30, 4, 40};
  auto y = gap.forward(x, true, nullptr);
  CHECK(y.data[0] == Catch::Approx(2.5));
  CHECK(y.data[1] == Catch::Approx(25.0));
}

TEST_CASE("patchify is a bijection", "[layers]") {
  Layer<float> pf(LayerSpec::patchify_(2), {4, 4, 3});
  Tensor<float> x({2, 4, 4, 3});
  for (size_t i = 0; i < x.numel(); ++i) x.data[i] = static_cast<float>(i);
  auto y = pf.forward(x, true, nullptr);
  auto sorted = y.data;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == static_cast<float>(i));
  Tensor<float> back = pf.backward(y);
  CHECK(back.data == x.data);
}

TEST_CASE("conv layers reject channel mismatches", "[layers]") {
  CHECK_THROWS_WITH((Layer<float>(LayerSpec::conv3(4, 8), {8, 8, 3})),
                    Catch::Matchers::ContainsSubstring("channel mismatch"));
  CHECK_THROWS_WITH((Layer<float>(LayerSpec::dense_(10, 4), {12})),
                    Catch::Matchers::ContainsSubstring("fan-in"));
  CHECK_THROWS_WITH((Layer<float>(LayerSpec::maxpool2_(), {5, 5, 2})),
                    Catch::Matchers::ContainsSubstring("even"));
}

TEST_CASE("conv3x3 matches a hand-rolled convolution on a small case", "[layers]") {
  Layer<float> conv(LayerSpec::conv3(1, 1), {3, 3, 1});
  for (size_t i = 0; i < 9; ++i) conv.weight.data[i] = static_cast<float>(i + 1);
  conv.bias.data[0] = 0.5f;
  Tensor<float> x({1, 3, 3, 1});
  for (size_t i = 0; i < 9; ++i) x.data[i] = static_cast<float>(i);
  auto y = conv.forward(x, true, nullptr);
  // center output: full 3x3 window dot kernel + bias
  double expect = 0.5;
  for (int i = 0; i < 9; ++i) expect += (i + 1) * i;
  CHECK(y.data[4] == Catch::Approx(expect));
  // corner output: zero padding kills the out-of-bounds taps
  double corner = 0.5 + 5 * 0 + 6 * 1 + 8 * 3 + 9 * 4;
  CHECK(y.data[0] == Catch::Approx(corner));
}

TEST_CASE("every layer kind passes the central-difference check", "[layers]") {
  for (const auto& res : verify_gradients(7, 16)) {
    INFO(res.name << ": " << res.detail);
    CHECK(res.passed);
  }
}

TEST_CASE("a corrupted gradient is caught by the checker", "[layers]") {
  Model<double> model = build_model<double>({LayerSpec::dense_(4, 3)}, {4}, 11);
  Tensor<double> x({2, 4});
  Rng rng(21);
  for (auto& v : x.data) v = rng.uniform(-1, 1);
  auto loss_fn = [&](Model<double>& m, bool want_grad) {
    Tensor<double> y = m.forward(x, true, nullptr);
    double acc = 0;
    for (auto v : y.data) acc += 0.5 * v * v;
    if (want_grad) m.backward(y);
    return acc;
  };
  auto clean = finite_diff_check(model, loss_fn, 1e-3, 1e-3, 64, 3);
  CHECK(clean.passed);
  auto tampered = finite_diff_check(model, loss_fn, 1e-3, 1e-3, 64, 3,
                                    [](std::vector<Tensor<double>>& grads) {
                                      grads[0].data[0] *= 2.0;
                                    });
  CHECK_FALSE(tampered.passed);
  CHECK(tampered.failures.size() >= 1);
}

TEST_CASE("linear model with squared loss gives near-exact agreement", "[layers]") {
  Model<double> model = build_model<double>({LayerSpec::dense_(3, 2)}, {3}, 5);
  Tensor<double> x({4, 3});
  Rng rng(31);
  for (auto& v : x.data) v = rng.uniform(-1, 1);
  Tensor<double> target({4, 2});
  for (auto& v : target.data) v = rng.uniform(-1, 1);
  auto loss_fn = [&](Model<double>& m, bool want_grad) {
    Tensor<double> y = m.forward(x, true, nullptr);
    double acc = 0;
    Tensor<double> g(y.shape);
    for (size_t i = 0; i < y.numel(); ++i) {
      double d = y.data[i] - target.data[i];
      acc += 0.5 * d * d;
      g.data[i] = d;
    }
    if (want_grad) m.backward(g);
    return acc;
  };
  auto report = finite_diff_check(model, loss_fn, 1e-6, 1e-3, 64, 17);
  INFO(report.summary());
  CHECK(report.passed);
}
