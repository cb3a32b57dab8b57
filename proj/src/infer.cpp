#include "normnet/infer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "normnet/errors.hpp"

namespace normnet {

Tensor image_to_tensor(std::span<const std::uint8_t> rgb, int h, int w) {
  if (rgb.size() != std::size_t(h) * w * 3) throw DataError("rgb buffer size mismatch");
  Tensor t(h, w, 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) t.v[i] = float(rgb[i]) / 255.0f;
  return t;
}

Tensor resize_nearest(const Tensor& img, int out_h, int out_w) {
  Tensor out(out_h, out_w, img.c);
  for (int r = 0; r < out_h; ++r) {
    const int sr = std::min(img.h - 1, int((std::size_t(r) * 2 + 1) * std::size_t(img.h) / (std::size_t(out_h) * 2)));
    for (int c = 0; c < out_w; ++c) {
      const int sc = std::min(img.w - 1, int((std::size_t(c) * 2 + 1) * std::size_t(img.w) / (std::size_t(out_w) * 2)));
      for (int ch = 0; ch < img.c; ++ch) out.at(r, c, ch) = img.at(sr, sc, ch);
    }
  }
  return out;
}

namespace {
void softmax_sites_inplace(Tensor& t) {
  const std::size_t sites = std::size_t(t.h) * t.w;
  for (std::size_t i = 0; i < sites; ++i) {
    float* row = &t.v[i * t.c];
    float mx = row[0];
    for (int j = 1; j < t.c; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < t.c; ++j) denom += std::exp(double(row[j]) - mx);
    for (int j = 0; j < t.c; ++j) row[j] = float(std::exp(double(row[j]) - mx) / denom);
  }
}
}  // namespace

TopDownOut infer_topdown(const NetworkSpec& spec, NetworkState& state, const Tensor& image55) {
  std::vector<Tensor> logits = net_forward(spec, state, image55);
  TopDownOut out;
  out.normal_dist = std::move(logits[0]);
  softmax_sites_inplace(out.normal_dist);
  Tensor layout = std::move(logits[1]);
  softmax_sites_inplace(layout);
  out.layout_dist = std::move(layout.v);
  return out;
}

SlidingGeometry sliding_geometry(int img_h, int img_w, int window, int cell) {
  if (img_h < window || img_w < window)
    throw DataError("image smaller than sliding window (" + std::to_string(img_h) + "x" +
                    std::to_string(img_w) + " < " + std::to_string(window) + ")");
  if (img_h % cell != 0 || img_w % cell != 0)
    throw DataError("image dimensions must be multiples of the cell size");
  if ((window - cell) % 2 != 0)
    throw DataError("window/cell sizes must share parity for centered placement");
  SlidingGeometry g;
  g.window = window;
  g.cell = cell;
  g.margin = (window - cell) / 2;  // 21 for 55/13
  g.cells_h = img_h / cell;
  g.cells_w = img_w / cell;
  int lo = 0;
  while (g.top_left_row(lo) < 0) ++lo;
  g.row_lo = lo;
  g.col_lo = lo;
  int hi = g.cells_h - 1;
  while (hi >= 0 && g.top_left_row(hi) + window > img_h) --hi;
  g.row_hi = hi;
  hi = g.cells_w - 1;
  while (hi >= 0 && g.top_left_col(hi) + window > img_w) --hi;
  g.col_hi = hi;
  if (g.row_hi < g.row_lo || g.col_hi < g.col_lo)
    throw DataError("no sliding window fits the cell grid");
  return g;
}

SlidingOut infer_sliding_any(const NetworkSpec& spec, NetworkState& state, const Tensor& image,
                             int normal_head, int edge_head) {
  const SlidingGeometry g = sliding_geometry(image.h, image.w, spec.input_h, spec.heads[std::size_t(normal_head)].sites_h);
  const HeadSpec& nh = spec.heads[std::size_t(normal_head)];
  const int cell = g.cell;
  const int kb = nh.classes;

  SlidingOut out;
  out.pixel_dist = Tensor(image.h, image.w, kb);
  out.edge_dist = edge_head >= 0 ? Tensor(g.cells_h, g.cells_w, spec.heads[std::size_t(edge_head)].classes)
                                 : Tensor();

  Tensor window(spec.input_h, spec.input_w, image.c);
  for (int cr = g.row_lo; cr <= g.row_hi; ++cr) {
    for (int cc = g.col_lo; cc <= g.col_hi; ++cc) {
      const int top = g.top_left_row(cr), left = g.top_left_col(cc);
      for (int y = 0; y < spec.input_h; ++y)
        std::copy_n(&image.v[(std::size_t(top + y) * image.w + left) * image.c],
                    std::size_t(spec.input_w) * image.c, &window.v[std::size_t(y) * spec.input_w * image.c]);
      std::vector<Tensor> logits = net_forward(spec, state, window);
      Tensor& nd = logits[std::size_t(normal_head)];
      softmax_sites_inplace(nd);
      for (int y = 0; y < cell; ++y)
        std::copy_n(&nd.v[std::size_t(y) * cell * kb], std::size_t(cell) * kb,
                    &out.pixel_dist.v[(std::size_t(cr * cell + y) * image.w + cc * cell) * kb]);
      if (edge_head >= 0) {
        Tensor& ed = logits[std::size_t(edge_head)];
        softmax_sites_inplace(ed);
        std::copy_n(ed.v.begin(), ed.v.size(),
                    &out.edge_dist.v[(std::size_t(cr) * g.cells_w + cc) * ed.c]);
      }
    }
  }

  // replicate nearest covered cell into the border
  for (int cr = 0; cr < g.cells_h; ++cr) {
    for (int cc = 0; cc < g.cells_w; ++cc) {
      if (g.covered(cr, cc)) continue;
      const int sr = std::clamp(cr, g.row_lo, g.row_hi);
      const int sc = std::clamp(cc, g.col_lo, g.col_hi);
      for (int y = 0; y < cell; ++y)
        std::copy_n(&out.pixel_dist.v[(std::size_t(sr * cell + y) * image.w + sc * cell) * kb],
                    std::size_t(cell) * kb,
                    &out.pixel_dist.v[(std::size_t(cr * cell + y) * image.w + cc * cell) * kb]);
      if (edge_head >= 0) {
        const int ec = out.edge_dist.c;
        std::copy_n(&out.edge_dist.v[(std::size_t(sr) * g.cells_w + sc) * ec], std::size_t(ec),
                    &out.edge_dist.v[(std::size_t(cr) * g.cells_w + cc) * ec]);
      }
    }
  }
  return out;
}

SlidingOut infer_sliding(const NetworkSpec& spec, NetworkState& state, const Tensor& image) {
  return infer_sliding_any(spec, state, image, 0, spec.heads.size() > 1 ? 1 : -1);
}

}  // namespace normnet
