#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "normnet/scene.hpp"

namespace normnet {

struct Image8 {
  int w = 0, h = 0;
  std::vector<std::uint8_t> rgb;  // h*w*3
};

void save_ppm(const std::filesystem::path& path, const Image8& img);
Image8 load_ppm(const std::filesystem::path& path);

void save_depth(const std::filesystem::path& path, int w, int h, const std::vector<float>& z);
std::vector<float> load_depth(const std::filesystem::path& path, int* w, int* h);

// Scene directory layout: four files per scene, NNNN.ppm / NNNN.nrm /
// NNNN.dpt / NNNN.meta (layout class, vps, focal, edge grid, and the room
// layout normals downsampled to a 20x20 grid).
inline constexpr int kLayoutGrid = 20;

std::string scene_stem(int index);
void save_scene(const std::filesystem::path& dir, int index, const SceneSample& s);
SceneSample load_scene(const std::filesystem::path& dir, int index);
std::vector<int> list_scene_ids(const std::filesystem::path& dir);

}  // namespace normnet
