#include "normnet/normal_map.hpp"

#include <cmath>
#include <fstream>

#include "normnet/errors.hpp"
#include "normnet/io.hpp"

namespace normnet {

void save_normal_map(const std::filesystem::path& p, const NormalMap& m) {
  auto os = open_out_binary(p);
  write_magic(os, "NRM1");
  write_u32le(os, std::uint32_t(m.w));
  write_u32le(os, std::uint32_t(m.h));
  for (const Vec3& v : m.n) {
    write_f32le(os, v.x);
    write_f32le(os, v.y);
    write_f32le(os, v.z);
  }
  write_bytes(os, m.valid);
  if (!os) throw DataError("failed writing normal map: " + p.string());
}

NormalMap load_normal_map(const std::filesystem::path& p) {
  auto is = open_in_binary(p);
  expect_magic(is, "NRM1", p.string());
  NormalMap m;
  m.w = int(read_u32le(is));
  m.h = int(read_u32le(is));
  if (m.w <= 0 || m.h <= 0) throw DataError("bad normal map dimensions: " + p.string());
  m.n.resize(std::size_t(m.w) * m.h);
  for (Vec3& v : m.n) {
    v.x = read_f32le(is);
    v.y = read_f32le(is);
    v.z = read_f32le(is);
  }
  m.valid.resize(m.n.size());
  read_bytes(is, m.valid);
  return m;
}

namespace {
std::uint8_t to_byte(double v) {
  const double r = std::floor(v + 0.5);
  return std::uint8_t(r < 0 ? 0 : (r > 255 ? 255 : r));
}
}  // namespace

std::vector<std::uint8_t> normal_viz(const NormalMap& m) {
  std::vector<std::uint8_t> rgb(std::size_t(m.w) * m.h * 3, 0);
  for (std::size_t i = 0; i < m.n.size(); ++i) {
    if (!m.valid[i]) continue;
    rgb[i * 3 + 0] = to_byte((double(m.n[i].x) + 1.0) * 127.5);
    rgb[i * 3 + 1] = to_byte((double(m.n[i].y) + 1.0) * 127.5);
    rgb[i * 3 + 2] = to_byte(-double(m.n[i].z) * 255.0);
  }
  return rgb;
}

}  // namespace normnet
