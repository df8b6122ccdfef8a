#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tdl/image.hpp"

namespace tdl {

/// Descriptor layout. The default reproduces the reference configuration:
/// 128x48 frames, 8x16 patches at 50% overlap (155 patches of 11 values
/// each = 1705), and a 6x2x5-cell space-time histogram with 20 orientation
/// bins (1200), 2905 combined.
struct DescriptorPreset {
  std::string name = "paper-2905";
  int frame_height = 128;
  int frame_width = 48;
  int patch_height = 8;
  int patch_width = 16;
  double patch_overlap = 0.5;
  int lbp_bins = 5;
  int st_cells_y = 6;
  int st_cells_x = 2;
  int st_cells_t = 5;
  int st_orientation_bins = 20;

  int patch_block_dim() const { return 6 + lbp_bins; }
  int appearance_dim() const;
  int spacetime_dim() const { return st_cells_y * st_cells_x * st_cells_t * st_orientation_bins; }
  int combined_dim() const { return appearance_dim() + spacetime_dim(); }

  /// Fingerprint of every layout parameter; stored in feature files so
  /// stores built under different presets cannot be mixed.
  std::string content_hash() const;
};

struct PatchRect {
  int top;
  int left;
  int height;
  int width;
};

/// Ordered patch rectangles covering one frame, row-major.
struct PatchGrid {
  int image_height = 0;
  int image_width = 0;
  std::vector<PatchRect> rects;
};

struct VideoDescriptor {
  Eigen::VectorXd appearance;  // pooled color/LBP blocks
  Eigen::VectorXd spacetime;   // space-time gradient histogram
  Eigen::VectorXd combined;    // [spacetime | appearance]
};

/// Strides are patch size times (1 - overlap) and must come out integral;
/// counts are floor((image - patch) / stride) + 1 per axis.
PatchGrid build_patch_grid(int img_h, int img_w, int patch_h, int patch_w,
                           double overlap_fraction);

/// Per patch: 6 color-channel means (HSV, then normalized LAB) followed by
/// an L1-normalized coarse LBP histogram; blocks concatenated in grid order.
Eigen::VectorXd frame_descriptor(const Image& frame, const PatchGrid& grid,
                                 const DescriptorPreset& preset);

/// Elementwise mean over per-frame descriptors.
Eigen::VectorXd average_pool(const std::vector<Eigen::VectorXd>& frame_descriptors);

/// Space-time gradient histogram over the whole video volume: central
/// differences, magnitude-weighted orientation binning against a fixed
/// 20-direction table, per-cell L1 normalization (all-zero cells stay
/// zero). Needs at least 2 frames, all at preset frame size.
Eigen::VectorXd spacetime_descriptor(const std::vector<Image>& video,
                                     const DescriptorPreset& preset);

/// Full per-video descriptor; frames are resized to the preset size first
/// when needed. combined = [spacetime | pooled appearance].
VideoDescriptor video_descriptor(const std::vector<Image>& video, const DescriptorPreset& preset);

}  // namespace tdl
