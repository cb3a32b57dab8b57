#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "normnet/codebook.hpp"
#include "normnet/edge_label.hpp"
#include "normnet/layout_codebook.hpp"
#include "normnet/normal_map.hpp"
#include "normnet/tensor.hpp"

namespace normnet {

struct SceneConfig {
  int img_w = 260;
  int img_h = 195;
  int cell = 13;
  double hfov_deg = 60.0;
  int cuboid_min = 0;
  int cuboid_max = 3;
  double noise_sigma = 4.0 / 255.0;
  double room_min = 3.5, room_max = 6.0;        // wall-to-wall extents
  double height_min = 2.6, height_max = 3.2;    // floor-to-ceiling
  double axis_aligned_prob = 0.35;              // else oblique yaw in the safe band
};

struct SceneSample {
  int img_w = 0, img_h = 0;
  std::vector<std::uint8_t> image;  // h*w*3 rgb
  NormalMap normals;                // camera frame, z <= 0
  std::vector<float> depth;         // z-depth, meters
  NormalMap layout_gt;              // room-only normals (empty after load from disk)
  int layout_class = -1;
  int edge_rows = 0, edge_cols = 0;
  std::vector<EdgeLabel> edges;
  std::array<Vec3, 3> vps{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  double focal = 0.0;

  EdgeLabel edge_at(int r, int c) const { return edges[std::size_t(r) * edge_cols + c]; }
};

double canonical_focal(int img_w, double hfov_deg = 60.0);

// Ray-cast axis-aligned room with 0..N cuboids; exact normals/depth, analytic
// edge labels, Manhattan vps in camera frame. layout_class is left at -1 (the
// caller encodes it against a layout codebook).
SceneSample generate_scene(const SceneConfig& cfg, std::uint64_t seed);

// Per-cell labels from depth/normal maps. Occlusion when the max adjacent
// depth ratio exceeds depth_ratio; else convex/concave when the max adjacent
// normal angle exceeds angle_thresh, signed by (n1-n2).(p2-p1) over 3D
// backprojections (positive = concave); else no-edge. focal 0 uses the
// generator's canonical intrinsics.
std::vector<EdgeLabel> derive_edge_labels(std::span<const float> depth, const NormalMap& normals,
                                          int cell = 13, double focal = 0.0,
                                          double depth_ratio = 1.07, double angle_thresh_deg = 20.0);

NormalMap downsample_normals(const NormalMap& full, int grid_w, int grid_h);

// argmax class of the codebook encoding (lowest index on ties)
int normal_class(const NormalCodebook& cb, const Vec3& n);

// Layout class for a full-resolution room layout map.
int layout_class_of(const LayoutCodebook& lcb, const NormalMap& layout_full);

SceneSample flip_horizontal(const SceneSample& s, const LayoutCodebook* lcb = nullptr);
SceneSample color_jitter(const SceneSample& s, const std::array<float, 3>& scales);
SceneSample crop_resize(const SceneSample& s, int top, int left, int crop_h, int crop_w,
                        const LayoutCodebook* lcb = nullptr);

// Random crop + color scales in [0.8, 1.2] + coin-flip mirror.
SceneSample augment(const SceneSample& s, std::uint64_t seed, const LayoutCodebook* lcb = nullptr);

struct Patch {
  Tensor image;  // (patch, patch, 3) in [0,1]
  std::vector<int> normal_labels;          // center cell-size^2 classes, row-major
  std::vector<std::uint8_t> label_valid;
  EdgeLabel edge = EdgeLabel::NoEdge;
  int top = 0, left = 0;
};
std::vector<Patch> sample_patches(const SceneSample& s, const NormalCodebook& cb, int count,
                                  int patch = 55, std::uint64_t seed = 0);

}  // namespace normnet
