#pragma once

// Offline (persisted) and online (per-batch stochastic) augmentation. Six
// online pipelines, each a single transform: brightness, hue, saturation,
// rotation, hflip, vflip. Offline augmentation draws from the four
// non-flip transforms and appends real-offline-aug records.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfd/image.hpp"
#include "dfd/manifest.hpp"
#include "dfd/rng.hpp"

namespace dfd {

// ---- RGB <-> HSV (hexcone; h in [0,360), s,v in [0,1]) ----

inline void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  float mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  float delta = mx - mn;
  s = mx > 0.f ? delta / mx : 0.f;
  if (delta <= 0.f) {
    h = 0.f;
    return;
  }
  if (mx == r)
    h = 60.f * std::fmod((g - b) / delta + 6.f, 6.f);
  else if (mx == g)
    h = 60.f * ((b - r) / delta + 2.f);
  else
    h = 60.f * ((r - g) / delta + 4.f);
}

inline void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  if (s <= 0.f) {
    r = g = b = v;
    return;
  }
  float hh = std::fmod(h, 360.f) / 60.f;
  int sector = static_cast<int>(hh) % 6;
  float f = hh - static_cast<float>(static_cast<int>(hh));
  float p = v * (1.f - s);
  float q = v * (1.f - s * f);
  float t = v * (1.f - s * (1.f - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

enum class TransformKind { brightness, hue, saturation, rotation, hflip, vflip };

inline const char* transform_kind_name(TransformKind k) {
  switch (k) {
    case TransformKind::brightness: return "brightness";
    case TransformKind::hue: return "hue";
    case TransformKind::saturation: return "saturation";
    case TransformKind::rotation: return "rotation";
    case TransformKind::hflip: return "hflip";
    case TransformKind::vflip: return "vflip";
  }
  return "?";
}

struct TransformSpec {
  TransformKind kind;
  double lo = 0.0, hi = 0.0;  // parameter range; flips are parameterless

  static TransformSpec canonical(TransformKind k) {
    switch (k) {
      case TransformKind::brightness: return {k, 0.8, 1.2};
      case TransformKind::hue: return {k, -18.0, 18.0};
      case TransformKind::saturation: return {k, 0.7, 1.3};
      case TransformKind::rotation: return {k, -15.0, 15.0};
      default: return {k, 0.0, 0.0};
    }
  }
};

namespace detail {
// reflect-101 (mirror about the edge pixel)
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}
}  // namespace detail

inline Image rotate_bilinear(const Image& img, double degrees) {
  const int H = img.h, W = img.w;
  const double rad = degrees * 3.14159265358979323846 / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cy = (H - 1) / 2.0, cx = (W - 1) / 2.0;
  Image out(H, W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      // inverse map: rotate the output coordinate back into the source
      double dx = x - cx, dy = y - cy;
      double sx = c * dx + s * dy + cx;
      double sy = -s * dx + c * dy + cy;
      int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      double fx = sx - x0, fy = sy - y0;
      int x0r = detail::reflect_index(x0, W), x1r = detail::reflect_index(x0 + 1, W);
      int y0r = detail::reflect_index(y0, H), y1r = detail::reflect_index(y0 + 1, H);
      for (int ch = 0; ch < 3; ++ch) {
        double v00 = img.at(y0r, x0r, ch), v01 = img.at(y0r, x1r, ch);
        double v10 = img.at(y1r, x0r, ch), v11 = img.at(y1r, x1r, ch);
        double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
        out.at(y, x, ch) = static_cast<float>(v);
      }
    }
  return out;
}

inline Image apply_transform(const Image& img, const TransformSpec& spec, double param) {
  if (spec.lo != spec.hi && (param < spec.lo || param > spec.hi))
    throw std::runtime_error(std::string("transform ") + transform_kind_name(spec.kind) +
                             ": parameter out of range");
  Image out = img;
  switch (spec.kind) {
    case TransformKind::brightness:
      for (auto& v : out.px) v = static_cast<float>(v * param);
      out.clamp01();
      break;
    case TransformKind::hue:
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
          float h, s, v;
          rgb_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), h, s, v);
          h = std::fmod(h + static_cast<float>(param) + 360.f, 360.f);
          hsv_to_rgb(h, s, v, out.at(y, x, 0), out.at(y, x, 1), out.at(y, x, 2));
        }
      out.clamp01();
      break;
    case TransformKind::saturation:
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
          float h, s, v;
          rgb_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), h, s, v);
          s = std::min(1.f, std::max(0.f, s * static_cast<float>(param)));
          hsv_to_rgb(h, s, v, out.at(y, x, 0), out.at(y, x, 1), out.at(y, x, 2));
        }
      out.clamp01();
      break;
    case TransformKind::rotation:
      out = rotate_bilinear(img, param);
      out.clamp01();
      break;
    case TransformKind::hflip:
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
          for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = img.at(y, img.w - 1 - x, ch);
      break;
    case TransformKind::vflip:
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
          for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = img.at(img.h - 1 - y, x, ch);
      break;
  }
  return out;
}

struct OnlineAugConfig {
  double p_aug = 0.5;
  // exactly six single-transform pipelines
  static const std::vector<TransformKind>& pipelines() {
    static const std::vector<TransformKind> kinds = {
        TransformKind::brightness, TransformKind::hue,   TransformKind::saturation,
        TransformKind::rotation,   TransformKind::hflip, TransformKind::vflip};
    return kinds;
  }

  void validate() const {
    if (p_aug < 0.0 || p_aug > 1.0) throw std::runtime_error("online aug: p_aug must be in [0,1]");
  }
};

// With probability p_aug, one of the six pipelines (uniform) with a freshly
// drawn parameter; otherwise the identity. Draw order is fixed.
inline Image online_augment(const Image& img, const OnlineAugConfig& cfg, Rng& rng) {
  if (rng.next_f64() >= cfg.p_aug) return img;
  const auto& kinds = OnlineAugConfig::pipelines();
  TransformKind kind = kinds[static_cast<std::size_t>(rng.below(kinds.size()))];
  TransformSpec spec = TransformSpec::canonical(kind);
  double param = spec.lo == spec.hi ? 0.0 : rng.uniform(spec.lo, spec.hi);
  return apply_transform(img, spec, param);
}

inline std::size_t offline_augment_count(std::size_t n_real, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n_real)));
}

// For floor(r * N_real) seeded-randomly chosen original real train images,
// apply one of {rotation, brightness, hue, saturation} with a uniform
// parameter; persist beside the originals and append real-offline-aug
// records. Returns the extended manifest (and rewrites manifest.jsonl).
inline std::vector<ManifestRecord> offline_augment(const std::vector<ManifestRecord>& manifest,
                                                   double fraction, uint64_t seed,
                                                   const std::string& data_dir) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::runtime_error("offline aug: fraction must be in [0,1]");
  namespace fs = std::filesystem;
  std::vector<std::size_t> real_idx;
  for (std::size_t i = 0; i < manifest.size(); ++i)
    if (manifest[i].split == "train" && manifest[i].source == "real-orig") real_idx.push_back(i);

  std::size_t n_new = offline_augment_count(real_idx.size(), fraction);
  Rng pick_rng(derive_seed(seed, "offline-pick"));
  pick_rng.shuffle(real_idx);
  real_idx.resize(n_new);

  static const TransformKind kChoices[4] = {TransformKind::rotation, TransformKind::brightness,
                                            TransformKind::hue, TransformKind::saturation};

  std::vector<ManifestRecord> out = manifest;
  for (std::size_t k = 0; k < real_idx.size(); ++k) {
    const ManifestRecord& src = manifest[real_idx[k]];
    Rng rng(derive_seed(seed, "offline-aug", src.id));
    TransformSpec spec = TransformSpec::canonical(kChoices[rng.below(4)]);
    double param = rng.uniform(spec.lo, spec.hi);
    Image img = png_read((fs::path(data_dir) / src.path).string());
    Image aug = apply_transform(img, spec, param);
    ManifestRecord rec;
    rec.id = src.id + "-aug";
    rec.path = "images/" + rec.id + ".png";
    rec.label = 1;
    rec.source = "real-offline-aug";
    rec.split = "train";
    png_write((fs::path(data_dir) / rec.path).string(), aug);
    out.push_back(std::move(rec));
  }
  write_manifest((fs::path(data_dir) / "manifest.jsonl").string(), out);
  return out;
}

}  // namespace dfd
