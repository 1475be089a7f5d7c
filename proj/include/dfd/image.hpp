#pragma once

// Float RGB image in [0,1] plus 8-bit PNG persistence (libpng). Quantization
// to 8 bits is part of the data contract: disk round-trips are exact at the
// 1/255 grid.

#include <png.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfd {

struct Image {
  int h = 0, w = 0;
  std::vector<float> px;  // h*w*3, row-major RGB

  Image() = default;
  Image(int height, int width) : h(height), w(width), px(static_cast<size_t>(height) * width * 3, 0.f) {}

  float& at(int y, int x, int c) { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
  float at(int y, int x, int c) const { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }

  void clamp01() {
    for (auto& v : px) v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  }
};

inline float mean_abs_diff(const Image& a, const Image& b) {
  if (a.px.size() != b.px.size()) throw std::runtime_error("mean_abs_diff: size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.px.size(); ++i) acc += std::abs(static_cast<double>(a.px[i]) - b.px[i]);
  return static_cast<float>(acc / static_cast<double>(a.px.size()));
}

inline unsigned char quantize8(float v) {
  float x = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  return static_cast<unsigned char>(std::lround(x * 255.0f));
}

inline void png_write(const std::string& path, const Image& img) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open for write: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng init failed for: " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("png write failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.w), static_cast<png_uint_32>(img.h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<size_t>(img.w) * 3);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) row[static_cast<size_t>(x) * 3 + c] = quantize8(img.at(y, x, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline Image png_read(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot open for read: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("libpng init failed for: " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("png read failed: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  // normalize any valid PNG to 8-bit RGB
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  Image img(static_cast<int>(h), static_cast<int>(w));
  std::vector<unsigned char> row(static_cast<size_t>(w) * 3);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(static_cast<int>(y), static_cast<int>(x), c) =
            static_cast<float>(row[static_cast<size_t>(x) * 3 + c]) / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

}  // namespace dfd
