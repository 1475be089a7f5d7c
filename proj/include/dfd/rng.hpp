#pragma once

// Deterministic, platform-independent randomness. Every random draw in the
// project flows through SplitMix64 streams derived by hashing a root seed
// with a stream label, so identical seeds reproduce identical results on
// any platform and with any thread count. No <random> distributions are
// used anywhere (their output is implementation-defined).

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dfd {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// FNV-1a over raw bytes; also used for content hashing (checkpoint integrity).
inline uint64_t fnv1a(const void* data, std::size_t n,
                      uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(s.data(), s.size(), h);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return splitmix64(state_); }

  // [0, 1) with 53 / 24 bits of precision.
  double next_f64() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  float next_f32() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_f64(); }

  // Modulo bias is ~n / 2^64, irrelevant at this project's scales.
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

// Independent stream derivation: hash the root seed with a label and up to
// three indices. Used for per-sample / per-epoch / per-layer streams.
inline uint64_t derive_seed(uint64_t seed, std::string_view label,
                            uint64_t a = 0, uint64_t b = 0, uint64_t c = 0) {
  uint64_t h = fnv1a(label);
  h = fnv1a(&seed, sizeof seed, h);
  h = fnv1a(&a, sizeof a, h);
  h = fnv1a(&b, sizeof b, h);
  h = fnv1a(&c, sizeof c, h);
  uint64_t s = h;
  return splitmix64(s);
}

inline uint64_t derive_seed(uint64_t seed, std::string_view label,
                            std::string_view id, uint64_t a = 0) {
  return derive_seed(seed, label, fnv1a(id), a);
}

}  // namespace dfd
