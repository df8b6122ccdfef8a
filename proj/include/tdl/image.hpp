#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tdl {

/// 8-bit RGB image, row-major interleaved.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  std::uint8_t at(int y, int x, int c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
  std::uint8_t& at(int y, int x, int c) {
    return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
  }
};

/// Decodes a PNG or BMP file (sniffed by signature). Gray/palette/alpha PNGs
/// are expanded to RGB; BMP support covers uncompressed 24/32-bit.
Image load_image(const std::filesystem::path& path);

/// Writes a 24-bit uncompressed BMP.
void save_bmp(const Image& img, const std::filesystem::path& path);

/// Bilinear resampling with half-pixel center alignment:
/// src = (dst + 0.5) * in/out - 0.5, clamped to the source rectangle.
Image resize_bilinear(const Image& img, int out_height, int out_width);

struct Hsv {
  double h, s, v;  // all in [0,1]; hue is angle/360
};

struct Lab {
  double l, a, b;  // L in [0,100], a/b in roughly [-128,127]
};

/// Inputs are 8-bit channel values.
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// sRGB with D65 white point (formulas pinned in docs/formats.md).
Lab rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace tdl
