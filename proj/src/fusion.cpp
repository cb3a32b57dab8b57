#include "normnet/fusion.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "normnet/errors.hpp"
#include "normnet/io.hpp"

namespace normnet {
namespace {

void check_map(const NormalMap& m, int w, int h, const char* name) {
  if (m.w != w || m.h != h) {
    throw DataError(std::string(name) + " resolution " + std::to_string(m.w) + "x" +
                    std::to_string(m.h) + " does not match image " + std::to_string(w) + "x" +
                    std::to_string(h));
  }
}

}  // namespace

NormalMap coarse_to_map(const NormalCodebook& cb, const Tensor& site_dist, int out_w, int out_h) {
  if (site_dist.h <= 0 || site_dist.w <= 0 || site_dist.c != cb.k) {
    throw DataError("coarse site distribution shape does not match the codebook");
  }
  NormalMap grid(site_dist.w, site_dist.h);
  std::vector<float> dist(std::size_t(cb.k));
  for (int r = 0; r < site_dist.h; ++r) {
    for (int c = 0; c < site_dist.w; ++c) {
      for (int k = 0; k < cb.k; ++k) dist[std::size_t(k)] = site_dist.at(r, c, k);
      grid.n[std::size_t(r) * grid.w + c] = decode_triangle(cb, dist);
      grid.valid[std::size_t(r) * grid.w + c] = 1;
    }
  }
  NormalMap out(out_w, out_h);
  for (int r = 0; r < out_h; ++r) {
    const int gr = std::min(grid.h - 1, int(std::int64_t(r) * grid.h / out_h));
    for (int c = 0; c < out_w; ++c) {
      const int gc = std::min(grid.w - 1, int(std::int64_t(c) * grid.w / out_w));
      out.n[std::size_t(r) * out_w + c] = grid.n[std::size_t(gr) * grid.w + gc];
      out.valid[std::size_t(r) * out_w + c] = 1;
    }
  }
  return out;
}

NormalMap layout_to_map(const LayoutCodebook& lcb, std::span<const float> layout_dist, int out_w,
                        int out_h) {
  if (int(layout_dist.size()) != lcb.k) {
    throw DataError("layout distribution size does not match the codebook");
  }
  int best = 0;
  for (int i = 1; i < lcb.k; ++i) {
    if (layout_dist[std::size_t(i)] > layout_dist[std::size_t(best)]) best = i;
  }
  return layout_class_to_map(lcb, best, out_w, out_h);
}

NormalMap layout_class_to_map(const LayoutCodebook& lcb, int layout_class, int out_w, int out_h) {
  const NormalMap grid = decode_layout(lcb, layout_class);
  NormalMap out(out_w, out_h);
  for (int r = 0; r < out_h; ++r) {
    const int gr = std::min(grid.h - 1, int(std::int64_t(r) * grid.h / out_h));
    for (int c = 0; c < out_w; ++c) {
      const int gc = std::min(grid.w - 1, int(std::int64_t(c) * grid.w / out_w));
      const std::size_t gi = std::size_t(gr) * grid.w + gc;
      out.n[std::size_t(r) * out_w + c] = grid.n[gi];
      out.valid[std::size_t(r) * out_w + c] = grid.valid[gi];
    }
  }
  return out;
}

Tensor edges_to_map(const Tensor& edge_dist, int out_w, int out_h, int cell) {
  if (edge_dist.c != 4 || edge_dist.h <= 0 || edge_dist.w <= 0) {
    throw DataError("edge distribution must be (cells_h, cells_w, 4)");
  }
  if (cell <= 0 || edge_dist.h * cell != out_h || edge_dist.w * cell != out_w) {
    throw DataError("edge grid does not tile the image resolution");
  }
  Tensor out(out_h, out_w, 3);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      const int er = r / cell, ec = c / cell;
      for (int k = 0; k < 3; ++k) out.at(r, c, k) = edge_dist.at(er, ec, k);
    }
  }
  return out;
}

NormalMap vp_rectify(const NormalMap& in, const std::array<Vec3, 3>& vps, double tau_deg) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(norm(vps[i]) - 1.0) > 1e-4) throw DataError("vp directions must be unit length");
    for (int j = i + 1; j < 3; ++j) {
      if (std::abs(dot(vps[i], vps[j])) > 1e-4) throw DataError("vp directions must be orthogonal");
    }
  }
  std::vector<Vec3> candidates;
  for (const Vec3& v : vps) {
    if (v.z <= 1e-9) candidates.push_back(v);
    Vec3 neg{-v.x, -v.y, -v.z};
    if (neg.z <= 1e-9) candidates.push_back(neg);
  }
  NormalMap out = in;
  const double cos_tau = std::cos(tau_deg * kPi / 180.0);
  for (std::size_t i = 0; i < out.n.size(); ++i) {
    if (!out.valid[i]) continue;
    const Vec3 n = normalized(in.n[i]);
    double best = -2;
    Vec3 best_dir = n;
    for (const Vec3& cand : candidates) {
      const double d = dot(n, cand);
      if (d > best) {
        best = d;
        best_dir = cand;
      }
    }
    if (best >= cos_tau) out.n[i] = best_dir;
  }
  return out;
}

Tensor assemble_fusion_input(const Tensor& image, const NormalMap& coarse, const NormalMap& local,
                             const NormalMap* layout, const Tensor* edge_map,
                             const NormalMap* vp_coarse) {
  const int h = image.h, w = image.w;
  if (image.c != 3 || h <= 0 || w <= 0) throw DataError("fusion image must be (h, w, 3)");
  check_map(coarse, w, h, "coarse map");
  check_map(local, w, h, "local map");
  if (layout) check_map(*layout, w, h, "layout map");
  if (vp_coarse) check_map(*vp_coarse, w, h, "vp-rectified map");
  if (edge_map && (edge_map->h != h || edge_map->w != w || edge_map->c != 3)) {
    throw DataError("edge map resolution does not match image " + std::to_string(w) + "x" +
                    std::to_string(h));
  }

  Tensor out(h, w, kFusionChannels);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t pi = std::size_t(r) * w + c;
      const Vec3 cn = coarse.n[pi];
      out.at(r, c, 0) = float(cn.x);
      out.at(r, c, 1) = float(cn.y);
      out.at(r, c, 2) = float(cn.z);
      if (layout) {
        const Vec3 ln = layout->n[pi];
        out.at(r, c, 3) = float(ln.x);
        out.at(r, c, 4) = float(ln.y);
        out.at(r, c, 5) = float(ln.z);
      }
      const Vec3 bn = local.n[pi];
      out.at(r, c, 6) = float(bn.x);
      out.at(r, c, 7) = float(bn.y);
      out.at(r, c, 8) = float(bn.z);
      if (edge_map) {
        for (int k = 0; k < 3; ++k) out.at(r, c, 9 + k) = edge_map->at(r, c, k);
      }
      if (vp_coarse) {
        const Vec3 vn = vp_coarse->n[pi];
        out.at(r, c, 12) = float(vn.x);
        out.at(r, c, 13) = float(vn.y);
        out.at(r, c, 14) = float(vn.z);
      }
      for (int k = 0; k < 3; ++k) out.at(r, c, 15 + k) = image.at(r, c, k);
    }
  }
  return out;
}

Tensor assemble(const NormalCodebook& coarse_cb, const LayoutCodebook& lcb,
                const NormalCodebook& local_cb, const Tensor& coarse_dist,
                std::span<const float> layout_dist, const Tensor& local_dist,
                const Tensor& edge_dist, const std::array<Vec3, 3>& vps, const Tensor& image,
                const FusionToggles& toggles, double tau_deg) {
  const int h = image.h, w = image.w;
  const NormalMap coarse = coarse_to_map(coarse_cb, coarse_dist, w, h);
  const NormalMap local = decode_pixel_dist(local_cb, local_dist, false);
  NormalMap layout, vp_map;
  Tensor edge_map;
  if (toggles.layout) layout = layout_to_map(lcb, layout_dist, w, h);
  if (toggles.edge) {
    if (edge_dist.h <= 0 || h % edge_dist.h != 0) {
      throw DataError("edge grid does not tile the image resolution");
    }
    edge_map = edges_to_map(edge_dist, w, h, h / edge_dist.h);
  }
  if (toggles.vp) vp_map = vp_rectify(coarse, vps, tau_deg);
  return assemble_fusion_input(image, coarse, local, toggles.layout ? &layout : nullptr,
                               toggles.edge ? &edge_map : nullptr,
                               toggles.vp ? &vp_map : nullptr);
}

void save_feature_stack(const std::filesystem::path& path, const Tensor& t) {
  if (t.h <= 0 || t.w <= 0 || t.c <= 0) throw DataError("cannot save an empty feature stack");
  std::ofstream out = open_out_binary(path);
  write_magic(out, "FST1");
  write_u32le(out, std::uint32_t(t.w));
  write_u32le(out, std::uint32_t(t.h));
  write_u32le(out, std::uint32_t(t.c));
  std::vector<float> plane(std::size_t(t.h) * t.w);
  for (int ch = 0; ch < t.c; ++ch) {
    for (int r = 0; r < t.h; ++r) {
      for (int c = 0; c < t.w; ++c) plane[std::size_t(r) * t.w + c] = t.at(r, c, ch);
    }
    write_f32le_array(out, plane);
  }
  if (!out) throw DataError("failed writing " + path.string());
}

Tensor load_feature_stack(const std::filesystem::path& path) {
  std::ifstream in = open_in_binary(path);
  expect_magic(in, "FST1", path.string());
  const std::uint32_t w = read_u32le(in);
  const std::uint32_t h = read_u32le(in);
  const std::uint32_t c = read_u32le(in);
  if (w == 0 || h == 0 || c == 0 || w > (1u << 16) || h > (1u << 16) || c > 1024) {
    throw DataError("bad feature stack header in " + path.string());
  }
  Tensor t(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  std::vector<float> plane(std::size_t(h) * w);
  for (std::uint32_t ch = 0; ch < c; ++ch) {
    read_f32le_array(in, plane);
    for (std::uint32_t r = 0; r < h; ++r) {
      for (std::uint32_t cc = 0; cc < w; ++cc) {
        t.at(int(r), int(cc), int(ch)) = plane[std::size_t(r) * w + cc];
      }
    }
  }
  if (!in) throw DataError("truncated feature stack: " + path.string());
  return t;
}

NormalMap decode_pixel_dist(const NormalCodebook& cb, const Tensor& pixel_dist, bool soft_decode) {
  if (pixel_dist.c != cb.k) throw DataError("pixel distribution channels do not match codebook");
  NormalMap out(pixel_dist.w, pixel_dist.h);
  std::vector<float> dist(std::size_t(cb.k));
  for (int r = 0; r < pixel_dist.h; ++r) {
    for (int c = 0; c < pixel_dist.w; ++c) {
      for (int k = 0; k < cb.k; ++k) dist[std::size_t(k)] = pixel_dist.at(r, c, k);
      out.n[std::size_t(r) * out.w + c] =
          soft_decode ? decode_soft(cb, dist) : decode_triangle(cb, dist);
      out.valid[std::size_t(r) * out.w + c] = 1;
    }
  }
  return out;
}

NormalMap fuse_predict(const NetworkSpec& spec, NetworkState& state, const NormalCodebook& cb,
                       const Tensor& stack, bool soft_decode) {
  if (stack.c != kFusionChannels) {
    throw DataError("fusion expects an 18-channel input stack, got " + std::to_string(stack.c));
  }
  const SlidingOut s = infer_sliding_any(spec, state, stack, 0, -1);
  return decode_pixel_dist(cb, s.pixel_dist, soft_decode);
}

}  // namespace normnet
