#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rgan/tensor.hpp"

namespace rgan::io {

// 8-bit interleaved RGB image as decoded from disk.
struct RawImage {
  Index height = 0;
  Index width = 0;
  Index channels = 0;  // 1 or 3
  std::vector<uint8_t> pixels;  // row-major, interleaved

  uint8_t at(Index y, Index x, Index c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

// Decodes a PNG or JPEG file (dispatch on magic bytes). Throws a data error
// on undecodable input.
RawImage decode_image(const std::filesystem::path& path);

// Affine pixel map used across the project: p/127.5 - 1 maps [0,255] onto
// [-1, 1] with 127.5 at exactly 0.
inline double pixel_to_unit(double p) { return p / 127.5 - 1.0; }
inline uint8_t unit_to_pixel(double u) {
  double p = (u + 1.0) * 127.5;
  if (p < 0.0) p = 0.0;
  if (p > 255.0) p = 255.0;
  return static_cast<uint8_t>(p + 0.5);
}

// Writes a (C,H,W) tensor in [-1,1] as an 8-bit PNG (C must be 1 or 3).
// The write is atomic (temp + rename).
void write_png(const std::filesystem::path& path, const Tensor& chw);

// Decoded image -> (3,H,W) tensor in [-1,1]; grayscale is replicated.
Tensor raw_to_chw(const RawImage& img);

// Center-crop to square then bilinear-resize to (size, size).
Tensor center_crop_resize(const Tensor& chw, Index size);

}  // namespace rgan::io
