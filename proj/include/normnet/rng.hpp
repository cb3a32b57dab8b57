#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace normnet {

// All randomness in the project flows through this wrapper. The standard
// distributions are not bit-specified across library implementations, so the
// transforms (uniform scaling, Box-Muller) are written out explicitly on top
// of mt19937_64, which is.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    const int v = int(uniform() * double(n));
    return v < n ? v : n - 1;
  }

  bool coin(double p) { return uniform() < p; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  float normal(float mean, float stddev) { return mean + stddev * float(normal()); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Deterministic per-component seed derivation: one root seed, named streams.
std::uint64_t sub_seed(std::uint64_t root, std::string_view name);

}  // namespace normnet
