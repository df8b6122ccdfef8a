#include "tdl/features.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "tdl/errors.hpp"
#include "tdl/hash.hpp"

namespace tdl {

int DescriptorPreset::appearance_dim() const {
  const PatchGrid grid =
      build_patch_grid(frame_height, frame_width, patch_height, patch_width, patch_overlap);
  return static_cast<int>(grid.rects.size()) * patch_block_dim();
}

std::string DescriptorPreset::content_hash() const {
  Fnv1a64 h;
  h.update(name).update("|");
  for (int v : {frame_height, frame_width, patch_height, patch_width, lbp_bins, st_cells_y,
                st_cells_x, st_cells_t, st_orientation_bins}) {
    h.update(static_cast<std::uint64_t>(v));
  }
  h.update(patch_overlap);
  return h.hex();
}

PatchGrid build_patch_grid(int img_h, int img_w, int patch_h, int patch_w,
                           double overlap_fraction) {
  if (img_h <= 0 || img_w <= 0 || patch_h <= 0 || patch_w <= 0) {
    throw InvalidInputError("build_patch_grid: dimensions must be positive");
  }
  if (patch_h > img_h || patch_w > img_w) {
    throw InvalidInputError("build_patch_grid: patch exceeds image size");
  }
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw InvalidInputError("build_patch_grid: overlap_fraction must be in [0,1)");
  }
  auto stride_of = [](int patch, double overlap) {
    const double s = patch * (1.0 - overlap);
    const double rounded = std::round(s);
    if (std::abs(s - rounded) > 1e-9 || rounded < 1.0) {
      throw InvalidInputError("build_patch_grid: non-integral stride " + std::to_string(s));
    }
    return static_cast<int>(rounded);
  };
  const int stride_y = stride_of(patch_h, overlap_fraction);
  const int stride_x = stride_of(patch_w, overlap_fraction);

  PatchGrid grid;
  grid.image_height = img_h;
  grid.image_width = img_w;
  const int ny = (img_h - patch_h) / stride_y + 1;
  const int nx = (img_w - patch_w) / stride_x + 1;
  grid.rects.reserve(static_cast<std::size_t>(ny) * nx);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      grid.rects.push_back({iy * stride_y, ix * stride_x, patch_h, patch_w});
    }
  }
  return grid;
}

namespace {

// Coarse LBP buckets: 8-neighbor codes (>= comparison against the center on
// luma, clockwise from the top-left neighbor), classified by the number of
// circular 0->1 transitions and the popcount.
//   0: constant code (all zeros or all ones)
//   1: one 0->1 transition, at most 4 set bits
//   2: one 0->1 transition, 5 or more set bits
//   3: two or more 0->1 transitions
//   4: flat (every neighbor exactly equals the center)
double luma(const Image& img, int y, int x) {
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

int lbp_bucket(const std::vector<double>& lum, int h, int w, int y, int x) {
  static constexpr int offsets[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, 1},
                                        {1, 1},   {1, 0},  {1, -1}, {0, -1}};
  const double center = lum[static_cast<std::size_t>(y) * w + x];
  unsigned code = 0;
  bool flat = true;
  for (int p = 0; p < 8; ++p) {
    const int ny = std::clamp(y + offsets[p][0], 0, h - 1);
    const int nx = std::clamp(x + offsets[p][1], 0, w - 1);
    const double v = lum[static_cast<std::size_t>(ny) * w + nx];
    if (v != center) flat = false;
    if (v >= center) code |= 1u << p;
  }
  if (flat) return 4;
  int rises = 0;
  for (int p = 0; p < 8; ++p) {
    const unsigned cur = (code >> p) & 1u;
    const unsigned nxt = (code >> ((p + 1) % 8)) & 1u;
    if (cur == 0 && nxt == 1) ++rises;
  }
  if (rises == 0) return 0;
  if (rises == 1) return std::popcount(code) <= 4 ? 1 : 2;
  return 3;
}

// Normalized LAB channels: L/100, (a+128)/255, (b+128)/255, clamped to [0,1].
std::array<double, 3> lab_unit(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const Lab lab = rgb_to_lab(r, g, b);
  return {std::clamp(lab.l / 100.0, 0.0, 1.0), std::clamp((lab.a + 128.0) / 255.0, 0.0, 1.0),
          std::clamp((lab.b + 128.0) / 255.0, 0.0, 1.0)};
}

// Splits n into k contiguous parts, remainder going to the earliest parts;
// returns the start offsets (k+1 entries).
std::vector<int> split_bounds(int n, int k) {
  std::vector<int> bounds(static_cast<std::size_t>(k) + 1, 0);
  const int base = n / k;
  const int rem = n % k;
  for (int i = 0; i < k; ++i) {
    bounds[static_cast<std::size_t>(i) + 1] = bounds[static_cast<std::size_t>(i)] + base + (i < rem ? 1 : 0);
  }
  return bounds;
}

std::vector<int> cell_index_of(int n, int k) {
  const std::vector<int> bounds = split_bounds(n, k);
  std::vector<int> idx(static_cast<std::size_t>(n));
  int cell = 0;
  for (int i = 0; i < n; ++i) {
    while (i >= bounds[static_cast<std::size_t>(cell) + 1]) ++cell;
    idx[static_cast<std::size_t>(i)] = cell;
  }
  return idx;
}

// 20 unit orientation vectors: the vertices of a regular dodecahedron,
// enumerated (x, y, t) and scaled to unit norm. Assignment is a signed
// nearest-neighbor by dot product, so opposite gradients land in
// different bins.
const std::array<std::array<double, 3>, 20>& orientation_table() {
  static const auto table = [] {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double inv = 1.0 / phi;
    std::array<std::array<double, 3>, 20> t{};
    std::size_t n = 0;
    for (double sx : {-1.0, 1.0}) {
      for (double sy : {-1.0, 1.0}) {
        for (double sz : {-1.0, 1.0}) t[n++] = {sx, sy, sz};
      }
    }
    for (double sa : {-1.0, 1.0}) {
      for (double sb : {-1.0, 1.0}) {
        t[n++] = {0.0, sa * inv, sb * phi};
        t[n++] = {sa * inv, sb * phi, 0.0};
        t[n++] = {sa * phi, 0.0, sb * inv};
      }
    }
    const double norm = std::sqrt(3.0);
    for (auto& v : t) {
      for (double& c : v) c /= norm;
    }
    return t;
  }();
  return table;
}

}  // namespace

Eigen::VectorXd frame_descriptor(const Image& frame, const PatchGrid& grid,
                                 const DescriptorPreset& preset) {
  if (frame.height != grid.image_height || frame.width != grid.image_width) {
    throw InvalidInputError("frame_descriptor: frame is " + std::to_string(frame.height) + "x" +
                            std::to_string(frame.width) + " but grid expects " +
                            std::to_string(grid.image_height) + "x" +
                            std::to_string(grid.image_width));
  }
  const int h = frame.height, w = frame.width;
  const std::size_t npx = static_cast<std::size_t>(h) * w;

  // Per-pixel channel values and LBP buckets, computed once per frame.
  std::array<std::vector<double>, 6> chan;
  for (auto& c : chan) c.resize(npx);
  std::vector<double> lum(npx);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const std::uint8_t r = frame.at(y, x, 0), g = frame.at(y, x, 1), b = frame.at(y, x, 2);
      const Hsv hsv = rgb_to_hsv(r, g, b);
      const auto lab = lab_unit(r, g, b);
      chan[0][i] = hsv.h;
      chan[1][i] = hsv.s;
      chan[2][i] = hsv.v;
      chan[3][i] = lab[0];
      chan[4][i] = lab[1];
      chan[5][i] = lab[2];
      lum[i] = luma(frame, y, x);
    }
  }
  std::vector<int> bucket(npx);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bucket[static_cast<std::size_t>(y) * w + x] = lbp_bucket(lum, h, w, y, x);
    }
  }

  const int block = preset.patch_block_dim();
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.rects.size()) * block);
  Eigen::Index off = 0;
  for (const PatchRect& rect : grid.rects) {
    std::array<double, 6> sums{};
    std::vector<double> hist(static_cast<std::size_t>(preset.lbp_bins), 0.0);
    for (int y = rect.top; y < rect.top + rect.height; ++y) {
      for (int x = rect.left; x < rect.left + rect.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        for (int c = 0; c < 6; ++c) sums[static_cast<std::size_t>(c)] += chan[static_cast<std::size_t>(c)][i];
        ++hist[static_cast<std::size_t>(std::min(bucket[i], preset.lbp_bins - 1))];
      }
    }
    const double count = static_cast<double>(rect.height) * rect.width;
    for (int c = 0; c < 6; ++c) out(off + c) = sums[static_cast<std::size_t>(c)] / count;
    for (int c = 0; c < preset.lbp_bins; ++c) {
      out(off + 6 + c) = hist[static_cast<std::size_t>(c)] / count;
    }
    off += block;
  }
  return out;
}

Eigen::VectorXd average_pool(const std::vector<Eigen::VectorXd>& frame_descriptors) {
  if (frame_descriptors.empty()) throw InvalidInputError("average_pool: empty input");
  const Eigen::Index d = frame_descriptors.front().size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (const Eigen::VectorXd& v : frame_descriptors) {
    if (v.size() != d) throw InvalidInputError("average_pool: inconsistent dimensions");
    sum += v;
  }
  return sum / static_cast<double>(frame_descriptors.size());
}

Eigen::VectorXd spacetime_descriptor(const std::vector<Image>& video,
                                     const DescriptorPreset& preset) {
  if (video.size() < 2) {
    throw InvalidInputError("spacetime_descriptor: need at least 2 frames, got " +
                            std::to_string(video.size()));
  }
  const int h = preset.frame_height, w = preset.frame_width;
  const int t_count = static_cast<int>(video.size());
  for (const Image& f : video) {
    if (f.height != h || f.width != w) {
      throw InvalidInputError("spacetime_descriptor: frame size mismatch with preset");
    }
  }

  std::vector<double> volume(static_cast<std::size_t>(t_count) * h * w);
  for (int t = 0; t < t_count; ++t) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        volume[(static_cast<std::size_t>(t) * h + y) * w + x] = luma(video[static_cast<std::size_t>(t)], y, x);
      }
    }
  }
  auto vox = [&](int t, int y, int x) {
    return volume[(static_cast<std::size_t>(t) * h + y) * w + x];
  };

  const std::vector<int> cy = cell_index_of(h, preset.st_cells_y);
  const std::vector<int> cx = cell_index_of(w, preset.st_cells_x);
  const std::vector<int> ct = cell_index_of(t_count, preset.st_cells_t);
  const auto& dirs = orientation_table();
  const int bins = preset.st_orientation_bins;
  const int cells = preset.st_cells_y * preset.st_cells_x * preset.st_cells_t;

  Eigen::VectorXd hist = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells) * bins);
  for (int t = 0; t < t_count; ++t) {
    const int tm = std::max(t - 1, 0), tp = std::min(t + 1, t_count - 1);
    for (int y = 0; y < h; ++y) {
      const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
      for (int x = 0; x < w; ++x) {
        const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
        const double gx = (vox(t, y, xp) - vox(t, y, xm)) / 2.0;
        const double gy = (vox(t, yp, x) - vox(t, ym, x)) / 2.0;
        const double gt = (vox(tp, y, x) - vox(tm, y, x)) / 2.0;
        const double mag = std::sqrt(gx * gx + gy * gy + gt * gt);
        if (mag < 1e-12) continue;
        int best = 0;
        double best_dot = -std::numeric_limits<double>::infinity();
        for (int b = 0; b < bins; ++b) {
          const auto& v = dirs[static_cast<std::size_t>(b)];
          const double dot = gx * v[0] + gy * v[1] + gt * v[2];
          if (dot > best_dot) {
            best_dot = dot;
            best = b;
          }
        }
        const int cell = (cy[static_cast<std::size_t>(y)] * preset.st_cells_x +
                          cx[static_cast<std::size_t>(x)]) *
                             preset.st_cells_t +
                         ct[static_cast<std::size_t>(t)];
        hist(static_cast<Eigen::Index>(cell) * bins + best) += mag;
      }
    }
  }

  for (int c = 0; c < cells; ++c) {
    const auto seg = hist.segment(static_cast<Eigen::Index>(c) * bins, bins);
    const double mass = seg.sum();
    if (mass >= 1e-12) hist.segment(static_cast<Eigen::Index>(c) * bins, bins) /= mass;
    // below the guard threshold the block stays all-zero
  }
  return hist;
}

VideoDescriptor video_descriptor(const std::vector<Image>& video, const DescriptorPreset& preset) {
  if (video.size() < 2) {
    throw InvalidInputError("video_descriptor: need at least 2 frames, got " +
                            std::to_string(video.size()));
  }
  std::vector<Image> frames;
  frames.reserve(video.size());
  for (const Image& f : video) {
    if (f.height == preset.frame_height && f.width == preset.frame_width) {
      frames.push_back(f);
    } else {
      frames.push_back(resize_bilinear(f, preset.frame_height, preset.frame_width));
    }
  }

  const PatchGrid grid = build_patch_grid(preset.frame_height, preset.frame_width,
                                          preset.patch_height, preset.patch_width,
                                          preset.patch_overlap);
  std::vector<Eigen::VectorXd> per_frame;
  per_frame.reserve(frames.size());
  for (const Image& f : frames) per_frame.push_back(frame_descriptor(f, grid, preset));

  VideoDescriptor out;
  out.appearance = average_pool(per_frame);
  out.spacetime = spacetime_descriptor(frames, preset);
  out.combined.resize(out.spacetime.size() + out.appearance.size());
  out.combined << out.spacetime, out.appearance;
  return out;
}

}  // namespace tdl
