#include "catch_amalgamated.hpp"

#include <filesystem>

#include "dfd/augment.hpp"
#include "dfd/synth.hpp"

using namespace dfd;
namespace fs = std::filesystem;

TEST_CASE("rgb-hsv worked conversions", "[augment]") {
  float h, s, v;
  rgb_to_hsv(1.f, 0.f, 0.f, h, s, v);
  CHECK(h == Catch::Approx(0.f));
  CHECK(s == Catch::Approx(1.f));
  CHECK(v == Catch::Approx(1.f));

  rgb_to_hsv(0.4f, 0.4f, 0.4f, h, s, v);
  CHECK(s == 0.f);
  CHECK(v == Catch::Approx(0.4f));
}

TEST_CASE("rgb-hsv round trip within 1e-5", "[augment]") {
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    float r = rng.next_f32(), g = rng.next_f32(), b = rng.next_f32();
    float h, s, v;
    rgb_to_hsv(r, g, b, h, s, v);
    if (s <= 1e-3f) continue;
    float r2, g2, b2;
    hsv_to_rgb(h, s, v, r2, g2, b2);
    CHECK(std::abs(r - r2) < 1e-5f);
    CHECK(std::abs(g - g2) < 1e-5f);
    CHECK(std::abs(b - b2) < 1e-5f);
  }
}

TEST_CASE("identity parameters leave the image unchanged", "[augment]") {
  auto img = generate_real_image(4, 32);
  auto rot0 = apply_transform(img, TransformSpec::canonical(TransformKind::rotation), 0.0);
  for (size_t i = 0; i < img.px.size(); ++i) CHECK(std::abs(rot0.px[i] - img.px[i]) < 1e-6f);

  auto b1 = apply_transform(img, TransformSpec::canonical(TransformKind::brightness), 1.0);
  for (size_t i = 0; i < img.px.size(); ++i) CHECK(std::abs(b1.px[i] - img.px[i]) < 1e-6f);

  auto s1 = apply_transform(img, TransformSpec::canonical(TransformKind::saturation), 1.0);
  for (size_t i = 0; i < img.px.size(); ++i) CHECK(std::abs(s1.px[i] - img.px[i]) < 1e-5f);

  auto h0 = apply_transform(img, TransformSpec::canonical(TransformKind::hue), 0.0);
  for (size_t i = 0; i < img.px.size(); ++i) CHECK(std::abs(h0.px[i] - img.px[i]) < 1e-5f);
}

TEST_CASE("hflip mirrors rows and both flips are involutions", "[augment]") {
  Image one_row(1, 3);
  one_row.at(0, 0, 0) = 0.1f;
  one_row.at(0, 1, 0) = 0.2f;
  one_row.at(0, 2, 0) = 0.3f;
  auto flipped = apply_transform(one_row, TransformSpec::canonical(TransformKind::hflip), 0);
  CHECK(flipped.at(0, 0, 0) == 0.3f);
  CHECK(flipped.at(0, 1, 0) == 0.2f);
  CHECK(flipped.at(0, 2, 0) == 0.1f);

  auto img = generate_real_image(9, 16);
  for (auto kind : {TransformKind::hflip, TransformKind::vflip}) {
    auto once = apply_transform(img, TransformSpec::canonical(kind), 0);
    auto twice = apply_transform(once, TransformSpec::canonical(kind), 0);
    CHECK(twice.px == img.px);
  }
}

TEST_CASE("hue shift leaves gray images alone", "[augment]") {
  Image gray(8, 8);
  for (auto& v : gray.px) v = 0.6f;
  auto shifted = apply_transform(gray, TransformSpec::canonical(TransformKind::hue), 18.0);
  CHECK(shifted.px == gray.px);
}

TEST_CASE("outputs stay in unit range over the whole parameter range", "[augment]") {
  auto img = generate_real_image(13, 16);
  for (auto kind : OnlineAugConfig::pipelines()) {
    auto spec = TransformSpec::canonical(kind);
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      double param = spec.lo + t * (spec.hi - spec.lo);
      auto out = apply_transform(img, spec, param);
      for (auto v : out.px) {
        CHECK(v >= 0.f);
        CHECK(v <= 1.f);
      }
    }
  }
}

TEST_CASE("parameters outside the documented range are rejected", "[augment]") {
  auto img = generate_real_image(2, 16);
  CHECK_THROWS(apply_transform(img, TransformSpec::canonical(TransformKind::brightness), 1.5));
  CHECK_THROWS(apply_transform(img, TransformSpec::canonical(TransformKind::rotation), 90.0));
}

TEST_CASE("online augmentation respects p_aug and is seeded", "[augment]") {
  auto img = generate_real_image(21, 16);

  SECTION("p_aug = 0 is always the identity") {
    OnlineAugConfig cfg;
    cfg.p_aug = 0.0;
    Rng rng(1);
    for (int i = 0; i < 20; ++i) CHECK(online_augment(img, cfg, rng).px == img.px);
  }

  SECTION("same seed gives identical output") {
    OnlineAugConfig cfg;
    Rng a(33), b(33);
    CHECK(online_augment(img, cfg, a).px == online_augment(img, cfg, b).px);
  }

  SECTION("pipeline frequencies are uniform at p_aug = 1") {
    OnlineAugConfig cfg;
    cfg.p_aug = 1.0;
    Rng rng(90);
    // count pipeline picks directly with the same draw sequence the
    // augmenter uses: trigger draw, then pipeline index
    std::vector<int> counts(6, 0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
      double trig = rng.next_f64();
      CHECK(trig < 1.0);
      counts[static_cast<size_t>(rng.below(6))]++;
      auto spec = TransformSpec::canonical(OnlineAugConfig::pipelines()[0]);
      (void)spec;
      rng.next_f64();  // parameter draw (flips draw none, but this stream is standalone)
    }
    for (int k = 0; k < 6; ++k)
      CHECK(std::abs(counts[k] / static_cast<double>(n) - 1.0 / 6) < 0.01);
  }
}

TEST_CASE("offline augmentation count arithmetic", "[augment]") {
  CHECK(offline_augment_count(42690, 0.5) == 21345);
  // the published corpus added 21,335; floor(0.5 * N) lands within 0.1%
  CHECK(std::abs(21345.0 - 21335.0) / 21335.0 < 0.001);
  CHECK(offline_augment_count(2000, 0.5) == 1000);
  CHECK(offline_augment_count(2000, 0.0) == 0);
}

TEST_CASE("offline augmentation appends only real train records", "[augment]") {
  auto dir = fs::temp_directory_path() / "dfd-test-offaug";
  fs::remove_all(dir);
  DatasetCounts counts;
  counts.train_real = 30;
  counts.train_fake = 20;
  counts.val_real = 8;
  counts.val_fake = 8;
  auto manifest = generate_dataset(counts, {0.25, 0.25, 0.25, 0.25}, 5, dir.string(), 16);

  SECTION("fraction 0 leaves the manifest unchanged") {
    auto out = offline_augment(manifest, 0.0, 5, dir.string());
    CHECK(out.size() == manifest.size());
  }

  SECTION("fraction 0.5 appends floor(r*N) real-offline-aug records") {
    auto out = offline_augment(manifest, 0.5, 5, dir.string());
    REQUIRE(out.size() == manifest.size() + 15);
    for (size_t i = manifest.size(); i < out.size(); ++i) {
      CHECK(out[i].source == "real-offline-aug");
      CHECK(out[i].label == 1);
      CHECK(out[i].split == "train");
      CHECK(fs::exists(dir / out[i].path));
    }
    // deterministic: same seed picks the same images and parameters
    auto again = offline_augment(manifest, 0.5, 5, dir.string());
    REQUIRE(again.size() == out.size());
    for (size_t i = 0; i < out.size(); ++i) CHECK(again[i].id == out[i].id);
  }
  fs::remove_all(dir);
}

TEST_CASE("augmentation never touches id or label", "[augment]") {
  // labels/ids live in the manifest; the transform API only sees pixels, so
  // this asserts the property at the record level after a full offline pass
  auto dir = fs::temp_directory_path() / "dfd-test-labels";
  fs::remove_all(dir);
  DatasetCounts counts;
  counts.train_real = 10;
  counts.train_fake = 6;
  counts.val_real = 4;
  counts.val_fake = 4;
  auto manifest = generate_dataset(counts, {0.25, 0.25, 0.25, 0.25}, 6, dir.string(), 16);
  auto out = offline_augment(manifest, 1.0, 6, dir.string());
  for (size_t i = 0; i < manifest.size(); ++i) {
    CHECK(out[i].id == manifest[i].id);
    CHECK(out[i].label == manifest[i].label);
  }
  fs::remove_all(dir);
}
