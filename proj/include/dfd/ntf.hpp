#pragma once

// NTF tensor blobs: magic "NTF1", u32-LE rank, u32-LE extents, then raw
// float32-LE payload. Floats round-trip bit-exactly (raw IEEE-754 bytes).

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "dfd/tensor.hpp"

namespace dfd {

static_assert(std::endian::native == std::endian::little,
              "NTF writer assumes a little-endian host");

inline void ntf_write(std::ostream& os, const Tensor<float>& t) {
  os.write("NTF1", 4);
  uint32_t rank = static_cast<uint32_t>(t.shape.size());
  os.write(reinterpret_cast<const char*>(&rank), 4);
  for (auto e : t.shape) {
    uint32_t ext = static_cast<uint32_t>(e);
    os.write(reinterpret_cast<const char*>(&ext), 4);
  }
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!os) throw std::runtime_error("ntf: write failed");
}

inline Tensor<float> ntf_read(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "NTF1", 4) != 0)
    throw std::runtime_error("ntf: bad magic (expected NTF1)");
  uint32_t rank = 0;
  is.read(reinterpret_cast<char*>(&rank), 4);
  if (!is || rank > 8) throw std::runtime_error("ntf: bad rank");
  std::vector<std::size_t> shape(rank);
  for (uint32_t i = 0; i < rank; ++i) {
    uint32_t ext = 0;
    is.read(reinterpret_cast<char*>(&ext), 4);
    if (!is) throw std::runtime_error("ntf: truncated header");
    shape[i] = ext;
  }
  Tensor<float> t(shape);
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!is) throw std::runtime_error("ntf: truncated payload");
  return t;
}

}  // namespace dfd
