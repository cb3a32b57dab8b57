#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "normnet/normal_map.hpp"

namespace normnet {

struct LayoutCodebook {
  int k = 0;
  int grid_w = 0;
  int grid_h = 0;
  std::vector<NormalMap> medoids;  // corpus members
};

// Mean per-pixel angular error in degrees over jointly valid pixels.
double layout_distance(const NormalMap& a, const NormalMap& b);

// PAM k-medoids: greedy farthest-point init, then best-single-swap descent.
LayoutCodebook build_layout_codebook(std::span<const NormalMap> corpus, int k, std::uint64_t seed);

int encode_layout(const LayoutCodebook& lcb, const NormalMap& layout);
const NormalMap& decode_layout(const LayoutCodebook& lcb, int idx);

void save_layout_codebook(const std::filesystem::path& p, const LayoutCodebook& lcb);
LayoutCodebook load_layout_codebook(const std::filesystem::path& p);

}  // namespace normnet
