#include "normnet/tensor.hpp"

#include <cmath>

namespace normnet {

bool all_finite(const Tensor& t) {
  for (float x : t.v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace normnet
