#pragma once

#include <cstddef>
#include <vector>

namespace normnet {

// Feature map stored channel-last: index = (y * w + x) * c + ch.
// Flat vectors (FC activations) use h = w = 1.
struct Tensor {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> v;

  Tensor() = default;
  Tensor(int h_, int w_, int c_) : h(h_), w(w_), c(c_), v(std::size_t(h_) * w_ * c_, 0.0f) {}

  std::size_t numel() const { return v.size(); }

  float& at(int y, int x, int ch) { return v[(std::size_t(y) * w + x) * c + ch]; }
  float at(int y, int x, int ch) const { return v[(std::size_t(y) * w + x) * c + ch]; }

  void fill(float value) { v.assign(v.size(), value); }
  bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }
};

bool all_finite(const Tensor& t);

}  // namespace normnet
