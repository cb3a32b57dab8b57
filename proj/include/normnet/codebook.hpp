#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "normnet/geom.hpp"

namespace normnet {

// Codewords on the camera-facing hemisphere (z <= 0) with a Delaunay
// triangulation built over their stereographic projections from (0,0,+1).
struct NormalCodebook {
  int k = 0;
  std::vector<Vec3> codewords;
  std::vector<std::array<int, 3>> triangles;  // vertex indices, each triple sorted ascending
};

// p = (x/(1-z), y/(1-z)); maps the z<=0 hemisphere into the unit disk.
Vec2 stereo_project(const Vec3& n);

NormalCodebook build_normal_codebook(std::span<const Vec3> samples, int k, std::uint64_t seed);

// Delaunay over points already in the plane (exposed for direct testing).
std::vector<std::array<int, 3>> delaunay_triangulate(std::span<const Vec2> pts);

// Barycentric weights on the containing triangle's vertices; outside the hull,
// full weight on the nearest codeword by angle.
std::vector<float> encode_normal(const NormalCodebook& cb, const Vec3& n);

Vec3 decode_triangle(const NormalCodebook& cb, std::span<const float> dist);
Vec3 decode_soft(const NormalCodebook& cb, std::span<const float> dist);

// Line-oriented text file; byte-identical round trip.
void save_normal_codebook(const std::filesystem::path& p, const NormalCodebook& cb);
NormalCodebook load_normal_codebook(const std::filesystem::path& p);

// Median angular length of the triangulation's edges (codeword spacing).
double median_edge_spacing_deg(const NormalCodebook& cb);

}  // namespace normnet
