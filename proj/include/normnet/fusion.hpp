#pragma once

#include <array>
#include <filesystem>

#include "normnet/codebook.hpp"
#include "normnet/infer.hpp"
#include "normnet/layout_codebook.hpp"
#include "normnet/normal_map.hpp"
#include "normnet/tensor.hpp"

namespace normnet {

// Fusion input stack, 18 channels in fixed order:
//   0-2   coarse prediction xyz (upsampled)
//   3-5   room layout xyz (zeros when disabled)
//   6-8   local per-pixel prediction xyz
//   9-11  edge probabilities convex/concave/occlusion (zeros when disabled)
//   12-14 vp-rectified coarse xyz (zeros when disabled)
//   15-17 image rgb in [0,1]
inline constexpr int kFusionChannels = 18;

// Decode a (gh, gw, K) site distribution and upsample nearest to out size
// (site = pixel * grid / out).
NormalMap coarse_to_map(const NormalCodebook& cb, const Tensor& site_dist, int out_w, int out_h);

// Argmax class (lowest index on ties), then the medoid map upsampled.
NormalMap layout_to_map(const LayoutCodebook& lcb, std::span<const float> layout_dist, int out_w,
                        int out_h);
NormalMap layout_class_to_map(const LayoutCodebook& lcb, int layout_class, int out_w, int out_h);

// Broadcast per-cell 4-way edge distributions to per-pixel (H, W, 3) planes,
// dropping the no-edge component.
Tensor edges_to_map(const Tensor& edge_dist, int out_w, int out_h, int cell = 13);

// Snap each normal to the nearest camera-facing signed vp axis when within
// tau degrees; otherwise keep it. vps must be orthonormal.
NormalMap vp_rectify(const NormalMap& in, const std::array<Vec3, 3>& vps, double tau_deg = 30.0);

// Null optional inputs zero-fill their channels. All maps must match the
// image resolution.
Tensor assemble_fusion_input(const Tensor& image, const NormalMap& coarse, const NormalMap& local,
                             const NormalMap* layout, const Tensor* edge_map,
                             const NormalMap* vp_coarse);

struct FusionToggles {
  bool layout = true;
  bool edge = true;
  bool vp = true;
};

// Full stack from raw network outputs: decodes the coarse/layout/local
// distributions, broadcasts edges, applies vp rectification, and zero-fills
// toggled-off channel groups.
Tensor assemble(const NormalCodebook& coarse_cb, const LayoutCodebook& lcb,
                const NormalCodebook& local_cb, const Tensor& coarse_dist,
                std::span<const float> layout_dist, const Tensor& local_dist,
                const Tensor& edge_dist, const std::array<Vec3, 3>& vps, const Tensor& image,
                const FusionToggles& toggles = {}, double tau_deg = 30.0);

void save_feature_stack(const std::filesystem::path& path, const Tensor& t);
Tensor load_feature_stack(const std::filesystem::path& path);

// Slide the fusion network over the stack and decode per-pixel distributions.
NormalMap fuse_predict(const NetworkSpec& spec, NetworkState& state, const NormalCodebook& cb,
                       const Tensor& stack, bool soft_decode = false);

// Decode a (H, W, K) per-pixel distribution tensor.
NormalMap decode_pixel_dist(const NormalCodebook& cb, const Tensor& pixel_dist, bool soft_decode);

}  // namespace normnet
