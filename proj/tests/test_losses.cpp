#include "catch_amalgamated.hpp"

#include <cmath>

#include "dfd/gradcheck.hpp"
#include "dfd/losses.hpp"
#include "dfd/rng.hpp"

using namespace dfd;

namespace {

// test-local brute force, written straight from the loss definition
double supcon_reference(const Tensor<double>& z, const std::vector<int>& y, double tau) {
  const size_t n = z.shape[0], d = z.shape[1];
  auto dot = [&](size_t i, size_t j) {
    double acc = 0;
    for (size_t k = 0; k < d; ++k) acc += z.data[i * d + k] * z.data[j * d + k];
    return acc;
  };
  double total = 0;
  size_t anchors = 0;
  for (size_t i = 0; i < n; ++i) {
    double li = 0;
    size_t npos = 0;
    for (size_t p = 0; p < n; ++p) {
      if (p == i || y[p] != y[i]) continue;
      ++npos;
      double denom = 0;
      for (size_t a = 0; a < n; ++a)
        if (a != i) denom += std::exp(dot(i, a) / tau);
      li -= std::log(std::exp(dot(i, p) / tau) / denom);
    }
    if (npos) {
      total += li / npos;
      ++anchors;
    }
  }
  return anchors ? total / anchors : 0.0;
}

Tensor<double> unit_rows(size_t n, size_t d, uint64_t seed) {
  Rng rng(seed);
  Tensor<double> z({n, d});
  for (auto& v : z.data) v = rng.uniform(-1, 1);
  return l2_normalize_rows(z).normalized;
}

}  // namespace

TEST_CASE("l2 row normalization", "[losses]") {
  Tensor<double> z({1, 2});
  z.data = {3, 4};
  auto res = l2_normalize_rows(z);
  CHECK(res.normalized.data[0] == Catch::Approx(0.6));
  CHECK(res.normalized.data[1] == Catch::Approx(0.8));
  CHECK(res.norms[0] == Catch::Approx(5.0));

  // idempotence on an already-unit row
  auto twice = l2_normalize_rows(res.normalized);
  CHECK(std::abs(twice.normalized.data[0] - 0.6) < 1e-7);

  Tensor<double> zero({2, 3});
  zero.data = {1, 0, 0, 0, 0, 0};
  CHECK_THROWS_WITH(l2_normalize_rows(zero), Catch::Matchers::ContainsSubstring("row 1"));
}

TEST_CASE("row norms stay within 1e-6 of one", "[losses]") {
  auto z = unit_rows(16, 8, 5);
  for (size_t i = 0; i < 16; ++i) {
    double norm = 0;
    for (size_t j = 0; j < 8; ++j) norm += z.data[i * 8 + j] * z.data[i * 8 + j];
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
  }
}

TEST_CASE("supcon trivial cases", "[losses]") {
  SECTION("two identical same-label embeddings give zero loss") {
    Tensor<double> z({2, 2});
    z.data = {1, 0, 1, 0};
    auto res = supcon_loss(z, {1, 1}, {0.5});
    CHECK(res.loss == Catch::Approx(0.0).margin(1e-12));
    CHECK_FALSE(res.no_positives);
  }
  SECTION("two different labels: no positives anywhere") {
    Tensor<double> z({2, 2});
    z.data = {1, 0, 0, 1};
    auto res = supcon_loss(z, {1, 0}, {0.5});
    CHECK(res.loss == 0.0);
    CHECK(res.no_positives);
    for (auto g : res.grad.data) CHECK(g == 0.0);
  }
  SECTION("batch of one is rejected") {
    Tensor<double> z({1, 2});
    z.data = {1, 0};
    CHECK_THROWS(supcon_loss(z, {1}, {}));
  }
}

TEST_CASE("supcon matches the double-loop reference on fixed batches", "[losses]") {
  auto z = unit_rows(4, 2, 42);
  std::vector<int> y = {1, 0, 1, 0};
  auto res = supcon_loss(z, y, {0.5});
  CHECK(res.loss == Catch::Approx(supcon_reference(z, y, 0.5)).margin(1e-6));

  for (uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed * 7 + 1);
    size_t n = 2 + rng.below(15), d = 2 + rng.below(7);
    auto zz = unit_rows(n, d, seed + 1000);
    std::vector<int> yy(n);
    for (auto& v : yy) v = static_cast<int>(rng.below(2));
    for (double tau : {0.07, 0.5, 1.0}) {
      auto r = supcon_loss(zz, yy, {tau});
      INFO("n=" << n << " d=" << d << " tau=" << tau);
      CHECK(r.loss == Catch::Approx(supcon_reference(zz, yy, tau)).margin(1e-6));
      CHECK(r.loss >= 0.0);
    }
  }
}

TEST_CASE("supcon gradient matches central differences", "[losses]") {
  auto z = unit_rows(4, 2, 9);
  std::vector<int> y = {1, 0, 1, 0};
  auto res = supcon_loss(z, y, {0.5});
  auto loss_at = [&](const Tensor<double>& zz) { return supcon_loss(zz, y, {0.5}).loss; };
  auto report = finite_diff_input_check(loss_at, z, res.grad, 1e-4, 1e-3, 64, 2);
  INFO(report.summary());
  CHECK(report.passed);
}

TEST_CASE("supcon invariances", "[losses]") {
  const size_t n = 8, d = 4;
  auto z = unit_rows(n, d, 31);
  std::vector<int> y = {1, 1, 0, 1, 0, 0, 1, 0};
  double base = supcon_loss(z, y, {}).loss;

  SECTION("batch permutation") {
    std::vector<size_t> perm = {3, 1, 7, 0, 5, 6, 2, 4};
    Tensor<double> zp({n, d});
    std::vector<int> yp(n);
    for (size_t i = 0; i < n; ++i) {
      yp[i] = y[perm[i]];
      for (size_t j = 0; j < d; ++j) zp.data[i * d + j] = z.data[perm[i] * d + j];
    }
    CHECK(supcon_loss(zp, yp, {}).loss == Catch::Approx(base).margin(1e-6));
  }

  SECTION("global label flip") {
    std::vector<int> flipped(n);
    for (size_t i = 0; i < n; ++i) flipped[i] = 1 - y[i];
    CHECK(supcon_loss(z, flipped, {}).loss == Catch::Approx(base).margin(1e-6));
  }

  SECTION("orthogonal rotation of all embeddings") {
    // Givens rotations across a few planes keep dot products intact
    Tensor<double> zr = z;
    auto rotate = [&](size_t a, size_t b, double angle) {
      double c = std::cos(angle), s = std::sin(angle);
      for (size_t i = 0; i < n; ++i) {
        double va = zr.data[i * d + a], vb = zr.data[i * d + b];
        zr.data[i * d + a] = c * va - s * vb;
        zr.data[i * d + b] = s * va + c * vb;
      }
    };
    rotate(0, 1, 0.7);
    rotate(1, 3, -1.2);
    rotate(2, 0, 2.1);
    CHECK(supcon_loss(zr, y, {}).loss == Catch::Approx(base).margin(1e-6));
  }
}

TEST_CASE("supcon gradient lies in the span of the batch embeddings", "[losses]") {
  const size_t n = 6, d = 4;
  auto z = unit_rows(n, d, 77);
  std::vector<int> y = {1, 0, 1, 0, 1, 0};
  auto res = supcon_loss(z, y, {});
  // least squares: grad_i ~ Z^T c; residual should vanish
  for (size_t i = 0; i < n; ++i) {
    // normal equations G c = b with G = Z Z^T (n x n)
    std::vector<double> G(n * n, 0.0), b(n, 0.0);
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = 0; q < n; ++q)
        for (size_t k = 0; k < d; ++k) G[p * n + q] += z.data[p * d + k] * z.data[q * d + k];
      for (size_t k = 0; k < d; ++k) b[p] += z.data[p * d + k] * res.grad.data[i * d + k];
    }
    // solve via Gaussian elimination with partial pivoting
    std::vector<double> A = G;
    std::vector<double> c = b;
    for (size_t col = 0; col < n; ++col) {
      size_t piv = col;
      for (size_t r = col + 1; r < n; ++r)
        if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
      for (size_t k = 0; k < n; ++k) std::swap(A[col * n + k], A[piv * n + k]);
      std::swap(c[col], c[piv]);
      double diag = A[col * n + col];
      if (std::abs(diag) < 1e-12) continue;
      for (size_t r = 0; r < n; ++r) {
        if (r == col) continue;
        double f = A[r * n + col] / diag;
        for (size_t k = 0; k < n; ++k) A[r * n + k] -= f * A[col * n + k];
        c[r] -= f * c[col];
      }
    }
    for (size_t r = 0; r < n; ++r)
      c[r] = std::abs(A[r * n + r]) > 1e-12 ? c[r] / A[r * n + r] : 0.0;
    // residual of grad_i - Z^T c
    double resid = 0;
    for (size_t k = 0; k < d; ++k) {
      double fit = 0;
      for (size_t p = 0; p < n; ++p) fit += z.data[p * d + k] * c[p];
      double diff = res.grad.data[i * d + k] - fit;
      resid += diff * diff;
    }
    CHECK(std::sqrt(resid) < 1e-6);
  }
}

TEST_CASE("supcon approaches zero for collapsed single-positive pairs", "[losses]") {
  // 2 reals collapsed at +e1, 2 fakes collapsed at -e1 gives each anchor one
  // positive; with antipodal classes the loss vanishes
  Tensor<double> z({4, 2});
  z.data = {1, 0, 1, 0, -1, 0, -1, 0};
  std::vector<int> y = {1, 1, 0, 0};
  auto tight = supcon_loss(z, y, {0.07});
  CHECK(tight.loss < 1e-9);

  // pulling a positive away increases the loss
  Tensor<double> z2 = z;
  z2.data[2] = 0.0;
  z2.data[3] = 1.0;
  CHECK(supcon_loss(z2, y, {0.07}).loss > tight.loss);
}

TEST_CASE("bce with logits: worked values", "[losses]") {
  Tensor<double> x({1});
  SECTION("x=0, y=0 gives log 2") {
    x.data = {0.0};
    CHECK(bce_logits_loss(x, {0}).loss == Catch::Approx(std::log(2.0)).margin(1e-9));
  }
  SECTION("x=100, y=1 saturates to ~0") {
    x.data = {100.0};
    CHECK(bce_logits_loss(x, {1}).loss < 1e-40);
  }
  SECTION("x=100, y=0 costs ~100 without overflow") {
    x.data = {100.0};
    double loss = bce_logits_loss(x, {0}).loss;
    CHECK(std::isfinite(loss));
    CHECK(loss == Catch::Approx(100.0).margin(1e-6));
  }
}

TEST_CASE("bce equals the naive formula for moderate logits", "[losses]") {
  Rng rng(15);
  for (int rep = 0; rep < 50; ++rep) {
    size_t n = 1 + rng.below(16);
    Tensor<double> x({n});
    std::vector<int> y(n);
    double naive = 0;
    for (size_t i = 0; i < n; ++i) {
      x.data[i] = rng.uniform(-20, 20);
      y[i] = static_cast<int>(rng.below(2));
      double s = 1.0 / (1.0 + std::exp(-x.data[i]));
      naive += -(y[i] * std::log(s) + (1 - y[i]) * std::log(1 - s));
    }
    naive /= n;
    CHECK(bce_logits_loss(x, y).loss == Catch::Approx(naive).margin(1e-6));
  }
}

TEST_CASE("bce gradient matches central differences", "[losses]") {
  Rng rng(16);
  Tensor<double> x({12});
  std::vector<int> y(12);
  for (size_t i = 0; i < 12; ++i) {
    x.data[i] = rng.uniform(-5, 5);
    y[i] = static_cast<int>(rng.below(2));
  }
  auto res = bce_logits_loss(x, y);
  auto loss_at = [&](const Tensor<double>& xx) { return bce_logits_loss(xx, y).loss; };
  auto report = finite_diff_input_check(loss_at, x, res.grad, 1e-4, 1e-3, 64, 3);
  INFO(report.summary());
  CHECK(report.passed);
}

TEST_CASE("bce rejects non-binary targets", "[losses]") {
  Tensor<double> x({2});
  CHECK_THROWS(bce_logits_loss(x, {0, 2}));
}
