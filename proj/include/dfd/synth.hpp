#pragma once

// Synthetic corpus: smooth low-frequency "real" images and four artifact
// injectors standing in for distinct fake-generation families. Everything is
// keyed by (seed, sample id) so generation is order- and thread-independent.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfd/image.hpp"
#include "dfd/manifest.hpp"
#include "dfd/rng.hpp"

namespace dfd {

inline Image generate_real_image(uint64_t seed, int size = 32) {
  Rng rng(seed);
  float base[3];
  for (auto& b : base) b = static_cast<float>(rng.uniform(0.25, 0.75));
  const double cx = size * rng.uniform(0.35, 0.65);
  const double cy = size * rng.uniform(0.35, 0.65);
  const double radial_amp = rng.uniform(0.10, 0.30) * (rng.below(2) ? 1.0 : -1.0);
  struct Wave {
    double dx, dy, freq, phase, amp[3];
  } waves[2];
  for (auto& w : waves) {
    double theta = rng.uniform(0.0, 3.14159265358979323846);
    w.dx = std::cos(theta);
    w.dy = std::sin(theta);
    w.freq = rng.uniform(0.5, 2.5);
    w.phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    for (auto& a : w.amp) a = rng.uniform(0.03, 0.15);
  }
  const double rmax = size * 0.7071067811865476;
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double r = std::hypot(x - cx, y - cy) / rmax;
      double radial = radial_amp * (0.5 - r);
      for (int c = 0; c < 3; ++c) {
        double v = base[c] + radial;
        for (const auto& w : waves)
          v += w.amp[c] *
               std::sin(2.0 * 3.14159265358979323846 * w.freq * (x * w.dx + y * w.dy) / size +
                        w.phase);
        img.at(y, x, c) = static_cast<float>(v);
      }
    }
  img.clamp01();
  return img;
}

enum class FakeKind { blend_seam, checker_artifact, patch_swap, color_shift };

inline const char* fake_kind_name(FakeKind k) {
  switch (k) {
    case FakeKind::blend_seam: return "blend-seam";
    case FakeKind::checker_artifact: return "checker-artifact";
    case FakeKind::patch_swap: return "patch-swap";
    case FakeKind::color_shift: return "color-shift";
  }
  return "?";
}

struct FakeMethodSpec {
  int method_id = 1;  // 1..4
  FakeKind kind = FakeKind::blend_seam;
  double strength = 0.0;

  // Documented strength ranges per kind; defaults are mid-range.
  static FakeMethodSpec preset(int method_id) {
    switch (method_id) {
      case 1: return {1, FakeKind::blend_seam, 0.60};
      case 2: return {2, FakeKind::checker_artifact, 0.12};
      case 3: return {3, FakeKind::patch_swap, 0.60};
      case 4: return {4, FakeKind::color_shift, 0.45};
    }
    throw std::runtime_error("fake method id must be 1..4");
  }

  void validate() const {
    double hi = kind == FakeKind::checker_artifact ? 0.5 : 1.0;
    if (strength < 0.0 || strength > hi)
      throw std::runtime_error(std::string("fake method ") + fake_kind_name(kind) +
                               ": strength out of range [0," + std::to_string(hi) + "]");
  }
};

inline Image inject_fake_artifact(const Image& img, const FakeMethodSpec& spec, uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Image out = img;
  const int H = img.h, W = img.w;
  switch (spec.kind) {
    case FakeKind::blend_seam: {
      // alpha-blend a second pattern over a hard-edged vertical band
      Image overlay = generate_real_image(derive_seed(seed, "seam-overlay"), std::max(H, W));
      int x0 = static_cast<int>(std::lround(rng.uniform(0.15, 0.55) * W));
      int width = std::max(1, static_cast<int>(std::lround(rng.uniform(0.20, 0.35) * W)));
      int x1 = std::min(W, x0 + width);
      float alpha = static_cast<float>(spec.strength);
      for (int y = 0; y < H; ++y)
        for (int x = x0; x < x1; ++x)
          for (int c = 0; c < 3; ++c)
            out.at(y, x, c) = (1.f - alpha) * img.at(y, x, c) + alpha * overlay.at(y, x, c);
      break;
    }
    case FakeKind::checker_artifact: {
      // +/- strength on 2x2 cell parity inside a square region
      int side = std::max(4, static_cast<int>(std::lround(rng.uniform(0.4, 0.7) * std::min(H, W))));
      side = std::min(side, std::min(H, W));
      int y0 = static_cast<int>(rng.below(static_cast<uint64_t>(H - side + 1)));
      int x0 = static_cast<int>(rng.below(static_cast<uint64_t>(W - side + 1)));
      float s = static_cast<float>(spec.strength);
      for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) {
          float delta = (((y - y0) / 2 + (x - x0) / 2) % 2 == 0) ? s : -s;
          for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, c) + delta;
        }
      break;
    }
    case FakeKind::patch_swap: {
      // exchange two equal patches from opposite halves; exact involution
      int p = static_cast<int>(std::lround(spec.strength * std::min(H, W) / 2.0));
      if (p < 1) break;
      p = std::min(p, W / 2);
      p = std::min(p, H);
      int ay = static_cast<int>(rng.below(static_cast<uint64_t>(H - p + 1)));
      int ax = static_cast<int>(rng.below(static_cast<uint64_t>(W / 2 - p + 1)));
      int by = static_cast<int>(rng.below(static_cast<uint64_t>(H - p + 1)));
      int bx = W / 2 + static_cast<int>(rng.below(static_cast<uint64_t>(W - W / 2 - p + 1)));
      for (int dy = 0; dy < p; ++dy)
        for (int dx = 0; dx < p; ++dx)
          for (int c = 0; c < 3; ++c)
            std::swap(out.at(ay + dy, ax + dx, c), out.at(by + dy, bx + dx, c));
      break;
    }
    case FakeKind::color_shift: {
      // linear remap of one region's channel statistics
      int region = static_cast<int>(rng.below(5));
      int y0 = 0, y1 = H, x0 = 0, x1 = W;
      switch (region) {
        case 0: x1 = W / 2; break;
        case 1: x0 = W / 2; break;
        case 2: y1 = H / 2; break;
        case 3: y0 = H / 2; break;
        case 4: y0 = H / 4; y1 = H - H / 4; x0 = W / 4; x1 = W - W / 4; break;
      }
      for (int c = 0; c < 3; ++c) {
        double sign = rng.below(2) ? 1.0 : -1.0;
        double gain = 1.0 + sign * rng.uniform(0.5, 1.0) * spec.strength;
        double offset = rng.uniform(-0.3, 0.3) * spec.strength;
        double mean = 0.0;
        int count = 0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) {
            mean += img.at(y, x, c);
            ++count;
          }
        mean /= std::max(1, count);
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x)
            out.at(y, x, c) =
                static_cast<float>(mean + gain * (img.at(y, x, c) - mean) + offset);
      }
      break;
    }
  }
  out.clamp01();
  return out;
}

struct DatasetCounts {
  int train_real = 2000;
  int train_fake = 6000;
  int train_generated = 0;
  int val_real = 400;
  int val_fake = 400;
};

// Largest-remainder apportionment: per-method counts within +/-1 of exact.
inline std::vector<int> apportion(int total, const std::vector<double>& mix) {
  double sum = std::accumulate(mix.begin(), mix.end(), 0.0);
  if (mix.empty() || sum <= 0) throw std::runtime_error("method mix must have positive mass");
  std::vector<int> out(mix.size());
  std::vector<std::pair<double, std::size_t>> rem;
  int assigned = 0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    double exact = total * mix[i] / sum;
    out[i] = static_cast<int>(std::floor(exact));
    assigned += out[i];
    rem.push_back({exact - out[i], i});
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < total - assigned; ++k) out[rem[static_cast<std::size_t>(k)].second] += 1;
  return out;
}

namespace detail {
inline std::string sample_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%05d", prefix, i);
  return buf;
}
}  // namespace detail

// Writes images + manifest under out_dir and returns the manifest records.
// Per-sample RNG is keyed by (seed, id), so regeneration is byte-identical.
inline std::vector<ManifestRecord> generate_dataset(const DatasetCounts& counts,
                                                    const std::vector<double>& method_mix,
                                                    uint64_t seed, const std::string& out_dir,
                                                    int image_size = 32) {
  if (method_mix.size() != 4) throw std::runtime_error("method mix must have 4 entries");
  namespace fs = std::filesystem;
  fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  if (ec) throw std::runtime_error("cannot create " + (root / "images").string());

  std::vector<ManifestRecord> records;
  auto emit = [&](const std::string& id, const Image& img, int label, const std::string& source,
                  const std::string& split) {
    ManifestRecord r{id, "images/" + id + ".png", label, source, split};
    png_write((root / r.path).string(), img);
    records.push_back(std::move(r));
  };

  auto make_fake = [&](const std::string& id, int method) {
    Image src = generate_real_image(derive_seed(seed, "fake-src", id), image_size);
    FakeMethodSpec spec = FakeMethodSpec::preset(method);
    return inject_fake_artifact(src, spec, derive_seed(seed, "inject", id));
  };

  auto method_of = [](const std::vector<int>& quota, int j) {
    int acc = 0;
    for (std::size_t m = 0; m < quota.size(); ++m) {
      acc += quota[m];
      if (j < acc) return static_cast<int>(m) + 1;
    }
    return static_cast<int>(quota.size());
  };

  for (int i = 0; i < counts.train_real; ++i) {
    std::string id = detail::sample_id("tr-r", i);
    emit(id, generate_real_image(derive_seed(seed, "real", id), image_size), 1, "real-orig",
         "train");
  }
  auto train_quota = apportion(counts.train_fake, method_mix);
  for (int i = 0; i < counts.train_fake; ++i) {
    std::string id = detail::sample_id("tr-f", i);
    int m = method_of(train_quota, i);
    emit(id, make_fake(id, m), 0, "fake-method-" + std::to_string(m), "train");
  }
  auto gen_quota = apportion(counts.train_generated, method_mix);
  for (int i = 0; i < counts.train_generated; ++i) {
    std::string id = detail::sample_id("tr-g", i);
    emit(id, make_fake(id, method_of(gen_quota, i)), 0, "fake-generated", "train");
  }
  for (int i = 0; i < counts.val_real; ++i) {
    std::string id = detail::sample_id("va-r", i);
    emit(id, generate_real_image(derive_seed(seed, "real", id), image_size), 1, "real-orig",
         "val");
  }
  auto val_quota = apportion(counts.val_fake, method_mix);
  for (int i = 0; i < counts.val_fake; ++i) {
    std::string id = detail::sample_id("va-f", i);
    int m = method_of(val_quota, i);
    emit(id, make_fake(id, m), 0, "fake-method-" + std::to_string(m), "val");
  }

  write_manifest((root / "manifest.jsonl").string(), records);
  return records;
}

}  // namespace dfd
