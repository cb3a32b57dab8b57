#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "normnet/geom.hpp"

namespace normnet {

struct NormalMap {
  int w = 0;
  int h = 0;
  std::vector<Vec3> n;              // row-major
  std::vector<std::uint8_t> valid;  // 0/1 per pixel

  NormalMap() = default;
  NormalMap(int w_, int h_)
      : w(w_), h(h_), n(std::size_t(w_) * h_, Vec3{0, 0, -1}), valid(std::size_t(w_) * h_, 1) {}

  Vec3& at(int r, int c) { return n[std::size_t(r) * w + c]; }
  const Vec3& at(int r, int c) const { return n[std::size_t(r) * w + c]; }
  bool valid_at(int r, int c) const { return valid[std::size_t(r) * w + c] != 0; }
};

// "NRM1": u32 width/height, float32 xyz triples row-major, then validity bytes.
void save_normal_map(const std::filesystem::path& p, const NormalMap& m);
NormalMap load_normal_map(const std::filesystem::path& p);

// Color coding: R=(x+1)*127.5, G=(y+1)*127.5, B=-z*255, rounded half-up.
// Invalid pixels render black. Returns h*w*3 bytes.
std::vector<std::uint8_t> normal_viz(const NormalMap& m);

}  // namespace normnet
