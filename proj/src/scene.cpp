#include "normnet/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "normnet/errors.hpp"
#include "normnet/rng.hpp"

namespace normnet {
namespace {

constexpr double kWallMargin = 0.5;     // cuboid to wall
constexpr double kCuboidGap = 0.35;     // cuboid to cuboid
constexpr double kCamMargin = 0.6;      // camera to walls / vertical face planes
constexpr double kCamHeightMin = 1.8;
constexpr double kStripeAmp = 0.12;

struct Aabb {
  double lo[3];
  double hi[3];
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int entity = -1;  // 0 room, 1+i cuboid
  int axis = -1;
  int sign = 0;  // surface normal = sign * e_axis in world frame
};

struct FaceStyle {
  double rgb[3];
  double period;
  double phase;
};

// Exit point of a ray starting inside the box; normal faces inward.
bool room_exit(const Aabb& b, const double p[3], const double d[3], Hit* out) {
  double best = std::numeric_limits<double>::infinity();
  int axis = -1, sign = 0;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) continue;
    const double t = d[a] > 0 ? (b.hi[a] - p[a]) / d[a] : (b.lo[a] - p[a]) / d[a];
    if (t < best) {
      best = t;
      axis = a;
      sign = d[a] > 0 ? -1 : 1;
    }
  }
  if (axis < 0 || best <= 0) return false;
  out->t = best;
  out->axis = axis;
  out->sign = sign;
  return true;
}

bool box_enter(const Aabb& b, const double p[3], const double d[3], Hit* out) {
  double tnear = -std::numeric_limits<double>::infinity();
  double tfar = std::numeric_limits<double>::infinity();
  int axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (p[a] < b.lo[a] || p[a] > b.hi[a]) return false;
      continue;
    }
    double t0 = (b.lo[a] - p[a]) / d[a];
    double t1 = (b.hi[a] - p[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > tnear) {
      tnear = t0;
      axis = a;
    }
    tfar = std::min(tfar, t1);
  }
  if (axis < 0 || tnear > tfar || tnear <= 1e-9) return false;
  out->t = tnear;
  out->axis = axis;
  out->sign = d[axis] > 0 ? -1 : 1;
  return true;
}

int face_id(int entity, int axis, int sign) { return entity * 6 + axis * 2 + (sign > 0 ? 0 : 1); }

}  // namespace

double canonical_focal(int img_w, double hfov_deg) {
  return (img_w / 2.0) / std::tan(hfov_deg * kPi / 360.0);
}

SceneSample generate_scene(const SceneConfig& cfg, std::uint64_t seed) {
  if (cfg.img_w < cfg.cell || cfg.img_h < cfg.cell || cfg.img_w % cfg.cell != 0 ||
      cfg.img_h % cfg.cell != 0) {
    throw DataError("scene image dimensions must be positive multiples of the cell size");
  }
  Rng rng(seed);

  const double W = rng.uniform(cfg.room_min, cfg.room_max);
  const double D = rng.uniform(cfg.room_min, cfg.room_max);
  const double H = rng.uniform(cfg.height_min, cfg.height_max);
  const Aabb room{{0, 0, 0}, {W, H, D}};

  const int want = cfg.cuboid_min +
                   (cfg.cuboid_max > cfg.cuboid_min
                        ? rng.uniform_int(cfg.cuboid_max - cfg.cuboid_min + 1)
                        : 0);
  std::vector<Aabb> cubs;
  for (int i = 0; i < want; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double cw = rng.uniform(0.4, 1.4);
      const double ch = rng.uniform(0.5, 1.2);
      const double cd = rng.uniform(0.4, 1.4);
      if (W - 2 * kWallMargin - cw <= 0 || D - 2 * kWallMargin - cd <= 0) continue;
      const double x0 = rng.uniform(kWallMargin, W - kWallMargin - cw);
      const double z0 = rng.uniform(kWallMargin, D - kWallMargin - cd);
      const Aabb box{{x0, 0, z0}, {x0 + cw, ch, z0 + cd}};
      bool clash = false;
      for (const Aabb& o : cubs) {
        if (box.lo[0] - kCuboidGap < o.hi[0] && box.hi[0] + kCuboidGap > o.lo[0] &&
            box.lo[2] - kCuboidGap < o.hi[2] && box.hi[2] + kCuboidGap > o.lo[2]) {
          clash = true;
          break;
        }
      }
      if (!clash) {
        cubs.push_back(box);
        break;
      }
    }
  }

  // Face styles: entity 0 is the room, then one per cuboid.
  std::vector<std::array<FaceStyle, 6>> styles(1 + cubs.size());
  for (auto& fs : styles[0]) {
    for (double& v : fs.rgb) v = rng.uniform(0.3, 0.9);
    fs.period = rng.uniform(0.5, 1.2);
    fs.phase = rng.uniform(0.0, 1.0);
  }
  for (std::size_t i = 0; i < cubs.size(); ++i) {
    double base[3];
    for (double& v : base) v = rng.uniform(0.3, 0.9);
    for (auto& fs : styles[1 + i]) {
      const double gain = rng.uniform(0.85, 1.15);
      for (int ch = 0; ch < 3; ++ch) fs.rgb[ch] = std::clamp(base[ch] * gain, 0.0, 1.0);
      fs.period = rng.uniform(0.3, 0.7);
      fs.phase = rng.uniform(0.0, 1.0);
    }
  }

  const double az = rng.uniform(0.0, 2 * kPi);
  const double ly = rng.uniform(0.45, 0.9);
  const double lxz = std::sqrt(std::max(0.0, 1.0 - ly * ly));
  const double light[3] = {lxz * std::cos(az), ly, lxz * std::sin(az)};

  double cam[3] = {0, 0, 0};
  double yaw = 0;
  bool placed = false;
  while (!placed) {
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      cam[0] = rng.uniform(kCamMargin, W - kCamMargin);
      cam[1] = rng.uniform(kCamHeightMin, H - kCamMargin);
      cam[2] = rng.uniform(kCamMargin, D - kCamMargin);
      const int quadrant = rng.uniform_int(4);
      if (rng.uniform() < cfg.axis_aligned_prob) {
        yaw = quadrant * 90.0;
      } else {
        const double mag = rng.uniform(38.0, 52.0);
        yaw = quadrant * 90.0 + (rng.uniform() < 0.5 ? mag : -mag);
      }
      placed = true;
      for (const Aabb& b : cubs) {
        const bool in_x = cam[0] > b.lo[0] && cam[0] < b.hi[0];
        const bool in_z = cam[2] > b.lo[2] && cam[2] < b.hi[2];
        if (in_x && in_z) {
          placed = false;  // directly above a cuboid; top face fine, but keep poses simple
          break;
        }
        // Near-coplanar with a visible vertical face: grazing views break the
        // depth-ratio margin, so reject outright.
        if (!in_x && std::min(std::abs(cam[0] - b.lo[0]), std::abs(cam[0] - b.hi[0])) < kCamMargin) {
          placed = false;
          break;
        }
        if (!in_z && std::min(std::abs(cam[2] - b.lo[2]), std::abs(cam[2] - b.hi[2])) < kCamMargin) {
          placed = false;
          break;
        }
      }
    }
    if (!placed) {
      // A crowded arrangement can leave no pose clear of every face plane;
      // retire the most recent cuboid (its styles go unused) and retry.
      if (cubs.empty()) throw DataError("camera placement failed after 100 attempts");
      cubs.pop_back();
    }
  }

  const double th = yaw * kPi / 180.0;
  const double cam_x[3] = {-std::cos(th), 0, std::sin(th)};
  const double cam_y[3] = {0, -1, 0};
  const double cam_z[3] = {std::sin(th), 0, std::cos(th)};
  auto to_cam = [&](const double v[3]) {
    return Vec3{float(v[0] * cam_x[0] + v[1] * cam_x[1] + v[2] * cam_x[2]),
                float(v[0] * cam_y[0] + v[1] * cam_y[1] + v[2] * cam_y[2]),
                float(v[0] * cam_z[0] + v[1] * cam_z[1] + v[2] * cam_z[2])};
  };

  SceneSample out;
  out.img_w = cfg.img_w;
  out.img_h = cfg.img_h;
  out.focal = canonical_focal(cfg.img_w, cfg.hfov_deg);
  out.image.assign(std::size_t(cfg.img_w) * cfg.img_h * 3, 0);
  out.normals = NormalMap(cfg.img_w, cfg.img_h);
  out.depth.assign(std::size_t(cfg.img_w) * cfg.img_h, 0.0f);
  out.layout_gt = NormalMap(cfg.img_w, cfg.img_h);
  const double wx[3] = {1, 0, 0}, wy[3] = {0, 1, 0}, wz[3] = {0, 0, 1};
  out.vps = {to_cam(wx), to_cam(wy), to_cam(wz)};

  const double cx = (cfg.img_w - 1) / 2.0;
  const double cy = (cfg.img_h - 1) / 2.0;
  const double f = out.focal;
  std::vector<int> facemap(std::size_t(cfg.img_w) * cfg.img_h, -1);

  for (int r = 0; r < cfg.img_h; ++r) {
    for (int c = 0; c < cfg.img_w; ++c) {
      const double u = (c - cx) / f;
      const double v = (r - cy) / f;
      // Unnormalized direction with unit camera-z so that t is z-depth.
      const double dir[3] = {u * cam_x[0] + v * cam_y[0] + cam_z[0],
                             u * cam_x[1] + v * cam_y[1] + cam_z[1],
                             u * cam_x[2] + v * cam_y[2] + cam_z[2]};
      Hit room_hit;
      if (!room_exit(room, cam, dir, &room_hit)) {
        throw DataError("ray escaped the room, camera outside bounds");
      }
      room_hit.entity = 0;
      Hit best = room_hit;
      for (std::size_t i = 0; i < cubs.size(); ++i) {
        Hit h;
        if (box_enter(cubs[i], cam, dir, &h) && h.t < best.t) {
          best = h;
          best.entity = int(i) + 1;
        }
      }

      const std::size_t px = std::size_t(r) * cfg.img_w + c;
      out.depth[px] = float(best.t);
      facemap[px] = face_id(best.entity, best.axis, best.sign);

      double nw[3] = {0, 0, 0};
      nw[best.axis] = best.sign;
      out.normals.n[px] = to_cam(nw);
      out.normals.valid[px] = 1;

      double lw[3] = {0, 0, 0};
      lw[room_hit.axis] = room_hit.sign;
      out.layout_gt.n[px] = to_cam(lw);
      out.layout_gt.valid[px] = 1;

      const double hp[3] = {cam[0] + best.t * dir[0], cam[1] + best.t * dir[1],
                            cam[2] + best.t * dir[2]};
      const FaceStyle& fs = styles[best.entity][best.axis * 2 + (best.sign > 0 ? 0 : 1)];
      const int a1 = (best.axis + 1) % 3;
      double frac = hp[a1] / fs.period + fs.phase;
      frac -= std::floor(frac);
      const double stripe = frac < 0.5 ? 1.0 + kStripeAmp : 1.0 - kStripeAmp;
      const double ndotl = std::max(0.0, nw[0] * light[0] + nw[1] * light[1] + nw[2] * light[2]);
      const double shade = (0.35 + 0.65 * ndotl) * stripe;
      for (int ch = 0; ch < 3; ++ch) {
        double val = fs.rgb[ch] * shade + cfg.noise_sigma * rng.normal();
        val = std::clamp(val, 0.0, 1.0);
        out.image[px * 3 + ch] = std::uint8_t(std::lround(val * 255.0));
      }
    }
  }

  // Analytic edge grid from face adjacency inside each cell.
  out.edge_rows = cfg.img_h / cfg.cell;
  out.edge_cols = cfg.img_w / cfg.cell;
  out.edges.assign(std::size_t(out.edge_rows) * out.edge_cols, EdgeLabel::NoEdge);
  auto backproject = [&](int r, int c) {
    const double z = out.depth[std::size_t(r) * cfg.img_w + c];
    return Vec3{float((c - cx) / f * z), float((r - cy) / f * z), float(z)};
  };
  const double gap_gain = 6.0;
  for (int er = 0; er < out.edge_rows; ++er) {
    for (int ec = 0; ec < out.edge_cols; ++ec) {
      int n_occ = 0, n_conv = 0, n_conc = 0;
      auto consider = [&](int r0, int c0, int r1, int c1) {
        const int fa = facemap[std::size_t(r0) * cfg.img_w + c0];
        const int fb = facemap[std::size_t(r1) * cfg.img_w + c1];
        if (fa == fb) return;
        const int ea = fa / 6, eb = fb / 6;
        if (ea != eb) {
          const Vec3 pa = backproject(r0, c0);
          const Vec3 pb = backproject(r1, c1);
          const double gap = norm(pa - pb);
          const double dmin = std::min(double(out.depth[std::size_t(r0) * cfg.img_w + c0]),
                                       double(out.depth[std::size_t(r1) * cfg.img_w + c1]));
          if (gap > gap_gain * dmin / f) {
            ++n_occ;
          } else {
            ++n_conc;  // touching contact between entities
          }
        } else if (ea == 0) {
          ++n_conc;  // interior room corner
        } else {
          ++n_conv;  // cuboid edge
        }
      };
      for (int r = er * cfg.cell; r < (er + 1) * cfg.cell; ++r) {
        for (int c = ec * cfg.cell; c < (ec + 1) * cfg.cell; ++c) {
          if (c + 1 < (ec + 1) * cfg.cell) consider(r, c, r, c + 1);
          if (r + 1 < (er + 1) * cfg.cell) consider(r, c, r + 1, c);
        }
      }
      EdgeLabel lab = EdgeLabel::NoEdge;
      if (n_occ > 0) {
        lab = EdgeLabel::Occlusion;
      } else if (n_conv + n_conc > 0) {
        lab = n_conv >= n_conc ? EdgeLabel::Convex : EdgeLabel::Concave;
      }
      out.edges[std::size_t(er) * out.edge_cols + ec] = lab;
    }
  }
  return out;
}

std::vector<EdgeLabel> derive_edge_labels(std::span<const float> depth, const NormalMap& normals,
                                          int cell, double focal, double depth_ratio,
                                          double angle_thresh_deg) {
  const int w = normals.w, h = normals.h;
  if (w <= 0 || h <= 0 || depth.size() != std::size_t(w) * h) {
    throw DataError("depth map size does not match the normal map");
  }
  if (cell <= 0 || w % cell != 0 || h % cell != 0) {
    throw DataError("edge labeling requires image dimensions divisible by the cell size");
  }
  const double f = focal > 0 ? focal : canonical_focal(w);
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  auto backproject = [&](int r, int c) {
    const double z = depth[std::size_t(r) * w + c];
    return Vec3{float((c - cx) / f * z), float((r - cy) / f * z), float(z)};
  };
  const int rows = h / cell, cols = w / cell;
  std::vector<EdgeLabel> out(std::size_t(rows) * cols, EdgeLabel::NoEdge);

  for (int er = 0; er < rows; ++er) {
    for (int ec = 0; ec < cols; ++ec) {
      double max_ratio = 0;
      double max_angle = -1;
      double best_sign = 0;
      auto consider = [&](int r0, int c0, int r1, int c1) {
        const std::size_t ia = std::size_t(r0) * w + c0;
        const std::size_t ib = std::size_t(r1) * w + c1;
        if (!normals.valid[ia] || !normals.valid[ib]) return;
        const double da = depth[ia], db = depth[ib];
        if (da <= 0 || db <= 0) return;
        max_ratio = std::max(max_ratio, std::max(da, db) / std::min(da, db));
        const double ang = angle_deg(normals.n[ia], normals.n[ib]);
        if (ang > max_angle) {
          max_angle = ang;
          const Vec3 pa = backproject(r0, c0);
          const Vec3 pb = backproject(r1, c1);
          best_sign = dot(normals.n[ia] - normals.n[ib], pb - pa);
        }
      };
      for (int r = er * cell; r < (er + 1) * cell; ++r) {
        for (int c = ec * cell; c < (ec + 1) * cell; ++c) {
          if (c + 1 < (ec + 1) * cell) consider(r, c, r, c + 1);
          if (r + 1 < (er + 1) * cell) consider(r, c, r + 1, c);
        }
      }
      EdgeLabel lab = EdgeLabel::NoEdge;
      if (max_ratio > depth_ratio) {
        lab = EdgeLabel::Occlusion;
      } else if (max_angle > angle_thresh_deg) {
        lab = best_sign > 0 ? EdgeLabel::Concave : EdgeLabel::Convex;
      }
      out[std::size_t(er) * cols + ec] = lab;
    }
  }
  return out;
}

NormalMap downsample_normals(const NormalMap& full, int grid_w, int grid_h) {
  if (grid_w <= 0 || grid_h <= 0 || full.w <= 0 || full.h <= 0) {
    throw DataError("downsample requires non-empty maps");
  }
  NormalMap out(grid_w, grid_h);
  for (int r = 0; r < grid_h; ++r) {
    const int sr = int((std::int64_t(2 * r + 1) * full.h) / (2 * grid_h));
    for (int c = 0; c < grid_w; ++c) {
      const int sc = int((std::int64_t(2 * c + 1) * full.w) / (2 * grid_w));
      const std::size_t si = std::size_t(sr) * full.w + sc;
      out.n[std::size_t(r) * grid_w + c] = full.n[si];
      out.valid[std::size_t(r) * grid_w + c] = full.valid[si];
    }
  }
  return out;
}

int normal_class(const NormalCodebook& cb, const Vec3& n) {
  const std::vector<float> d = encode_normal(cb, n);
  int best = 0;
  for (int i = 1; i < int(d.size()); ++i) {
    if (d[i] > d[best]) best = i;
  }
  return best;
}

int layout_class_of(const LayoutCodebook& lcb, const NormalMap& layout_full) {
  return encode_layout(lcb, downsample_normals(layout_full, lcb.grid_w, lcb.grid_h));
}

namespace {

NormalMap flip_map(const NormalMap& m) {
  NormalMap out(m.w, m.h);
  for (int r = 0; r < m.h; ++r) {
    for (int c = 0; c < m.w; ++c) {
      const std::size_t si = std::size_t(r) * m.w + (m.w - 1 - c);
      Vec3 n = m.n[si];
      n.x = -n.x;
      out.n[std::size_t(r) * m.w + c] = n;
      out.valid[std::size_t(r) * m.w + c] = m.valid[si];
    }
  }
  return out;
}

}  // namespace

SceneSample flip_horizontal(const SceneSample& s, const LayoutCodebook* lcb) {
  SceneSample out = s;
  const int w = s.img_w, h = s.img_h;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t di = std::size_t(r) * w + c;
      const std::size_t si = std::size_t(r) * w + (w - 1 - c);
      for (int ch = 0; ch < 3; ++ch) out.image[di * 3 + ch] = s.image[si * 3 + ch];
      out.depth[di] = s.depth[si];
    }
  }
  out.normals = flip_map(s.normals);
  if (!s.layout_gt.n.empty()) out.layout_gt = flip_map(s.layout_gt);
  for (int er = 0; er < s.edge_rows; ++er) {
    for (int ec = 0; ec < s.edge_cols; ++ec) {
      out.edges[std::size_t(er) * s.edge_cols + ec] =
          s.edges[std::size_t(er) * s.edge_cols + (s.edge_cols - 1 - ec)];
    }
  }
  for (Vec3& vp : out.vps) vp.x = -vp.x;
  out.layout_class = -1;
  if (lcb) {
    if (!out.layout_gt.n.empty()) {
      out.layout_class = layout_class_of(*lcb, out.layout_gt);
    } else if (s.layout_class >= 0) {
      out.layout_class = encode_layout(*lcb, flip_map(decode_layout(*lcb, s.layout_class)));
    }
  }
  return out;
}

SceneSample color_jitter(const SceneSample& s, const std::array<float, 3>& scales) {
  SceneSample out = s;
  for (std::size_t px = 0; px < out.image.size() / 3; ++px) {
    for (int ch = 0; ch < 3; ++ch) {
      const double v = std::lround(double(s.image[px * 3 + ch]) * scales[ch]);
      out.image[px * 3 + ch] = std::uint8_t(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

SceneSample crop_resize(const SceneSample& s, int top, int left, int crop_h, int crop_w,
                        const LayoutCodebook* lcb) {
  if (crop_h <= 0 || crop_w <= 0 || top < 0 || left < 0 || top + crop_h > s.img_h ||
      left + crop_w > s.img_w) {
    throw DataError("crop window outside the image");
  }
  SceneSample out = s;
  const int w = s.img_w, h = s.img_h;
  // Resample any map at its own resolution through the same relative window.
  auto crop_map = [&](const NormalMap& m) {
    NormalMap res(m.w, m.h);
    for (int r = 0; r < m.h; ++r) {
      const int pr = top + int((std::int64_t(2 * r + 1) * crop_h) / (2 * m.h));
      const int gr = std::min(m.h - 1, int(std::int64_t(pr) * m.h / h));
      for (int c = 0; c < m.w; ++c) {
        const int pc = left + int((std::int64_t(2 * c + 1) * crop_w) / (2 * m.w));
        const int gc = std::min(m.w - 1, int(std::int64_t(pc) * m.w / w));
        res.n[std::size_t(r) * m.w + c] = m.n[std::size_t(gr) * m.w + gc];
        res.valid[std::size_t(r) * m.w + c] = m.valid[std::size_t(gr) * m.w + gc];
      }
    }
    return res;
  };
  for (int r = 0; r < h; ++r) {
    const int sr = top + int((std::int64_t(2 * r + 1) * crop_h) / (2 * h));
    for (int c = 0; c < w; ++c) {
      const int sc = left + int((std::int64_t(2 * c + 1) * crop_w) / (2 * w));
      const std::size_t di = std::size_t(r) * w + c;
      const std::size_t si = std::size_t(sr) * w + sc;
      for (int ch = 0; ch < 3; ++ch) out.image[di * 3 + ch] = s.image[si * 3 + ch];
      out.depth[di] = s.depth[si];
    }
  }
  out.normals = crop_map(s.normals);
  if (!s.layout_gt.n.empty()) out.layout_gt = crop_map(s.layout_gt);
  out.focal = s.focal > 0 ? s.focal * double(h) / crop_h : 0.0;
  if (s.edge_rows > 0) {
    const int cell = s.img_h / s.edge_rows;
    out.edges = derive_edge_labels(out.depth, out.normals, cell, out.focal);
  }
  out.layout_class = -1;
  if (lcb) {
    if (!out.layout_gt.n.empty()) {
      out.layout_class = layout_class_of(*lcb, out.layout_gt);
    } else if (s.layout_class >= 0) {
      out.layout_class = encode_layout(*lcb, crop_map(decode_layout(*lcb, s.layout_class)));
    }
  }
  return out;
}

SceneSample augment(const SceneSample& s, std::uint64_t seed, const LayoutCodebook* lcb) {
  Rng rng(seed);
  const double scale = rng.uniform(0.75, 1.0);
  int ch = std::clamp(int(std::lround(s.img_h * scale)), 1, s.img_h);
  int cw = std::clamp(int(std::lround(s.img_w * scale)), 1, s.img_w);
  const int top = rng.uniform_int(s.img_h - ch + 1);
  const int left = rng.uniform_int(s.img_w - cw + 1);
  std::array<float, 3> scales;
  for (float& v : scales) v = float(rng.uniform(0.8, 1.2));
  const bool mirror = rng.uniform() < 0.5;

  SceneSample out = crop_resize(s, top, left, ch, cw, lcb);
  out = color_jitter(out, scales);
  if (mirror) out = flip_horizontal(out, lcb);
  return out;
}

std::vector<Patch> sample_patches(const SceneSample& s, const NormalCodebook& cb, int count,
                                  int patch, std::uint64_t seed) {
  if (count <= 0) throw std::invalid_argument("patch count must be positive");
  constexpr int kCell = 13;
  if (patch < kCell || (patch - kCell) % 2 != 0) {
    throw std::invalid_argument("patch size must be cell size plus an even margin");
  }
  if (patch > s.img_h || patch > s.img_w) {
    throw std::invalid_argument("patch larger than the image");
  }
  Rng rng(seed);
  const int off = (patch - kCell) / 2;
  std::vector<Patch> out;
  out.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    Patch p;
    p.top = rng.uniform_int(s.img_h - patch + 1);
    p.left = rng.uniform_int(s.img_w - patch + 1);
    p.image = Tensor(patch, patch, 3);
    for (int r = 0; r < patch; ++r) {
      for (int c = 0; c < patch; ++c) {
        const std::size_t si = (std::size_t(p.top + r) * s.img_w + (p.left + c)) * 3;
        for (int ch = 0; ch < 3; ++ch) p.image.at(r, c, ch) = float(s.image[si + ch]) / 255.0f;
      }
    }
    p.normal_labels.assign(std::size_t(kCell) * kCell, 0);
    p.label_valid.assign(std::size_t(kCell) * kCell, 0);
    for (int r = 0; r < kCell; ++r) {
      for (int c = 0; c < kCell; ++c) {
        const std::size_t si = std::size_t(p.top + off + r) * s.img_w + (p.left + off + c);
        if (s.normals.valid[si]) {
          p.normal_labels[std::size_t(r) * kCell + c] = normal_class(cb, s.normals.n[si]);
          p.label_valid[std::size_t(r) * kCell + c] = 1;
        }
      }
    }
    if (s.edge_rows > 0 && s.edge_cols > 0) {
      const int cr = std::min((p.top + patch / 2) / kCell, s.edge_rows - 1);
      const int cc = std::min((p.left + patch / 2) / kCell, s.edge_cols - 1);
      p.edge = s.edge_at(cr, cc);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace normnet
