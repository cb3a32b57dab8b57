#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "normnet/net.hpp"
#include "normnet/tensor.hpp"

namespace normnet {

// RGB bytes to a [0,1] float tensor (h, w, 3).
Tensor image_to_tensor(std::span<const std::uint8_t> rgb, int h, int w);

// Nearest-neighbor resample (center rule) to (out_h, out_w).
Tensor resize_nearest(const Tensor& img, int out_h, int out_w);

struct TopDownOut {
  Tensor normal_dist;              // (20, 20, K_t) softmax per site
  std::vector<float> layout_dist;  // K_l softmax
};
TopDownOut infer_topdown(const NetworkSpec& spec, NetworkState& state, const Tensor& image55);

// Window placement for stride-13 sliding inference: the window whose center
// 13x13 block lands on cell (r, c) has its top-left at 13r-21; cells outside
// [row_lo, row_hi] x [col_lo, col_hi] are not covered by any window.
struct SlidingGeometry {
  int cells_h = 0, cells_w = 0;
  int row_lo = 0, row_hi = -1;
  int col_lo = 0, col_hi = -1;
  int window = 55, cell = 13, margin = 21;  // margin = (window - cell) / 2
  int top_left_row(int cell_row) const { return cell * cell_row - margin; }
  int top_left_col(int cell_col) const { return cell * cell_col - margin; }
  bool covered(int r, int c) const { return r >= row_lo && r <= row_hi && c >= col_lo && c <= col_hi; }
};
SlidingGeometry sliding_geometry(int img_h, int img_w, int window = 55, int cell = 13);

struct SlidingOut {
  Tensor pixel_dist;  // (H, W, K_b): per-pixel class distributions
  Tensor edge_dist;   // (cells_h, cells_w, 4)
};
SlidingOut infer_sliding(const NetworkSpec& spec, NetworkState& state, const Tensor& image);

// Shared by bottom-up and fusion inference: slides any (h, w, c) feature
// image; `normal_head`/`edge_head` name which outputs to collect (edge_head
// < 0 to skip).
SlidingOut infer_sliding_any(const NetworkSpec& spec, NetworkState& state, const Tensor& image,
                             int normal_head, int edge_head);

}  // namespace normnet
