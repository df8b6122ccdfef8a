#include "tdl/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "tdl/errors.hpp"

namespace tdl {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open image: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }

  std::vector<png_bytep> row_ptrs;
  Image img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG: " + path.string());
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  if (png_get_rowbytes(png, info) != width * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unexpected PNG row layout: " + path.string());
  }

  img.height = static_cast<int>(height);
  img.width = static_cast<int>(width);
  img.pixels.resize(static_cast<std::size_t>(height) * width * 3);
  row_ptrs.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    row_ptrs[y] = img.pixels.data() + static_cast<std::size_t>(y) * width * 3;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

Image load_bmp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 54 || data[0] != 'B' || data[1] != 'M') {
    throw IoError("not a BMP file: " + path.string());
  }
  const std::uint32_t pixel_offset = le32(&data[10]);
  const std::uint32_t header_size = le32(&data[14]);
  if (header_size < 40) throw IoError("unsupported BMP header: " + path.string());
  const auto raw_height = static_cast<std::int32_t>(le32(&data[22]));
  const auto width = static_cast<std::int32_t>(le32(&data[18]));
  const std::uint16_t bpp = le16(&data[28]);
  const std::uint32_t compression = le32(&data[30]);
  if (width <= 0 || raw_height == 0) throw IoError("bad BMP dimensions: " + path.string());
  if (compression != 0 || (bpp != 24 && bpp != 32)) {
    throw IoError("unsupported BMP variant (need uncompressed 24/32-bit): " + path.string());
  }
  const bool top_down = raw_height < 0;
  const std::int32_t height = top_down ? -raw_height : raw_height;
  const std::size_t bytes_pp = bpp / 8;
  const std::size_t row_stride = (static_cast<std::size_t>(width) * bytes_pp + 3) & ~std::size_t{3};
  if (data.size() < pixel_offset + row_stride * static_cast<std::size_t>(height)) {
    throw IoError("truncated BMP: " + path.string());
  }

  Image img;
  img.height = height;
  img.width = width;
  img.pixels.resize(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * 3);
  for (std::int32_t y = 0; y < height; ++y) {
    const std::int32_t src_y = top_down ? y : height - 1 - y;
    const unsigned char* row = data.data() + pixel_offset + row_stride * static_cast<std::size_t>(src_y);
    for (std::int32_t x = 0; x < width; ++x) {
      const unsigned char* px = row + static_cast<std::size_t>(x) * bytes_pp;
      img.at(y, x, 0) = px[2];  // BMP stores BGR
      img.at(y, x, 1) = px[1];
      img.at(y, x, 2) = px[0];
    }
  }
  return img;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open image: " + path.string());
  unsigned char sig[8] = {};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (std::memcmp(sig, png_sig, 8) == 0) return load_png(path);
  if (sig[0] == 'B' && sig[1] == 'M') return load_bmp(path);
  throw IoError("unsupported image format (need PNG or BMP): " + path.string());
}

void save_bmp(const Image& img, const std::filesystem::path& path) {
  if (img.height <= 0 || img.width <= 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.height) * img.width * 3) {
    throw InvalidInputError("save_bmp: malformed image");
  }
  const std::size_t row_stride = (static_cast<std::size_t>(img.width) * 3 + 3) & ~std::size_t{3};
  const std::size_t pixel_bytes = row_stride * static_cast<std::size_t>(img.height);
  const std::uint32_t file_size = static_cast<std::uint32_t>(54 + pixel_bytes);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open image for writing: " + path.string());
  auto put16 = [&](std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  auto put32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
  };
  out.write("BM", 2);
  put32(file_size);
  put32(0);
  put32(54);  // pixel data offset
  put32(40);  // BITMAPINFOHEADER
  put32(static_cast<std::uint32_t>(img.width));
  put32(static_cast<std::uint32_t>(img.height));
  put16(1);
  put16(24);
  put32(0);  // BI_RGB
  put32(static_cast<std::uint32_t>(pixel_bytes));
  put32(2835);
  put32(2835);
  put32(0);
  put32(0);

  std::vector<char> row(row_stride, 0);
  for (int y = img.height - 1; y >= 0; --y) {  // bottom-up
    for (int x = 0; x < img.width; ++x) {
      row[static_cast<std::size_t>(x) * 3 + 0] = static_cast<char>(img.at(y, x, 2));
      row[static_cast<std::size_t>(x) * 3 + 1] = static_cast<char>(img.at(y, x, 1));
      row[static_cast<std::size_t>(x) * 3 + 2] = static_cast<char>(img.at(y, x, 0));
    }
    out.write(row.data(), static_cast<std::streamsize>(row_stride));
  }
  if (!out) throw IoError("failed writing image: " + path.string());
}

Image resize_bilinear(const Image& img, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0) {
    throw InvalidInputError("resize_bilinear: output dimensions must be positive");
  }
  if (img.height <= 0 || img.width <= 0) {
    throw InvalidInputError("resize_bilinear: empty source image");
  }
  Image out;
  out.height = out_height;
  out.width = out_width;
  out.pixels.resize(static_cast<std::size_t>(out_height) * out_width * 3);

  const double sy = static_cast<double>(img.height) / out_height;
  const double sx = static_cast<double>(img.width) / out_width;
  for (int y = 0; y < out_height; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        const double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        const double v = (1.0 - wy) * top + wy * bot;
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out{0.0, 0.0, mx};
  if (mx > 0.0) out.s = delta / mx;
  if (delta > 0.0) {
    double h;
    if (mx == r) {
      h = std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = (b - r) / delta + 2.0;
    } else {
      h = (r - g) / delta + 4.0;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
    out.h = h;
  }
  return out;
}

namespace {

// 256-entry sRGB-to-linear table.
const double* srgb_linear_table() {
  static const auto table = [] {
    static double t[256];
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return t;
  }();
  return table;
}

double lab_f(double t) {
  constexpr double kCube = 216.0 / 24389.0;  // (6/29)^3
  constexpr double kSlope = 841.0 / 108.0;   // 1 / (3 (6/29)^2)
  return t > kCube ? std::cbrt(t) : kSlope * t + 4.0 / 29.0;
}

}  // namespace

Lab rgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double* lut = srgb_linear_table();
  const double r = lut[r8], g = lut[g8], b = lut[b8];
  // sRGB D65 primaries
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.0);
  const double fz = lab_f(z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace tdl
