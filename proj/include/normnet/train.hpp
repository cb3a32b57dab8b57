#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "normnet/net.hpp"

namespace normnet {

struct TrainConfig {
  float learning_rate = 1e-3f;
  int epochs = 30;
  int batch = 16;
  std::uint64_t seed = 1;
};

struct TrainSample {
  Tensor input;
  SampleLabels y;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-sample joint loss
};

// Plain SGD on the multiplier-weighted sum of head losses; batch gradients
// averaged; sample order shuffled per epoch from cfg.seed. Aborts with a
// diagnostic naming the first non-finite layer if the loss leaves the reals.
TrainResult train_joint(const NetworkSpec& spec, NetworkState& state,
                        std::span<const TrainSample> data, const TrainConfig& cfg);

}  // namespace normnet
