#include "normnet/train.hpp"

#include <cmath>
#include <numeric>

#include "normnet/errors.hpp"

namespace normnet {

TrainResult train_joint(const NetworkSpec& spec, NetworkState& state,
                        std::span<const TrainSample> data, const TrainConfig& cfg) {
  if (data.empty()) throw DataError("training set is empty");
  if (cfg.learning_rate <= 0.0f) throw DataError("learning rate must be positive");

  Rng rng(cfg.seed);
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.epoch_loss.reserve(std::size_t(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = int(order.size()) - 1; i > 0; --i)
      std::swap(order[std::size_t(i)], order[std::size_t(rng.uniform_int(i + 1))]);

    double epoch_sum = 0.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t take = std::min<std::size_t>(std::size_t(cfg.batch), order.size() - pos);
      NetGrads batch_grads;
      std::vector<Tensor> head_grads;
      for (std::size_t b = 0; b < take; ++b) {
        const TrainSample& s = data[std::size_t(order[pos + b])];
        const double loss = net_loss_and_head_grads(spec, state, s.input, s.y, &head_grads);
        if (!std::isfinite(loss)) {
          const std::string where = first_non_finite_layer(spec, state);
          throw DataError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                          (where.empty() ? "" : " (first non-finite layer: " + where + ")"));
        }
        epoch_sum += loss;
        NetGrads g = net_backward(spec, state, head_grads);
        if (b == 0)
          batch_grads = std::move(g);
        else
          accumulate_grads(batch_grads, g);
      }
      scale_grads(batch_grads, 1.0f / float(take));
      net_sgd(state, batch_grads, cfg.learning_rate);
      pos += take;
    }
    result.epoch_loss.push_back(epoch_sum / double(order.size()));
  }
  return result;
}

}  // namespace normnet
