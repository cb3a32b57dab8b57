#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "normnet/tensor.hpp"

namespace normnet {

enum class LayerKind { Conv, MaxPool, Lrn, FullyConnected };

struct LrnParams {
  int size = 5;
  float alpha = 1e-4f;
  float beta = 0.75f;
  float bias = 2.0f;
};

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int kernel_count = 0;   // Conv: number of kernels
  int kernel_size = 0;    // Conv: spatial extent
  int stride = 1;         // Conv fixed at 1; MaxPool default 2
  int pool_size = 3;      // MaxPool window
  LrnParams lrn;          // Lrn
  int output_units = 0;   // FullyConnected
};

LayerSpec conv_spec(int kernel_count, int kernel_size);
LayerSpec maxpool_spec();
LayerSpec lrn_spec();
LayerSpec fc_spec(int output_units);

struct LayerState {
  // Conv weights: (kernel_count, s*s, in_channels); FC weights: (1, out, in).
  Tensor weights;
  Tensor biases;  // (1, 1, kernel_count) or (1, 1, out)

  // Forward caches consumed by layer_backward.
  Tensor input;
  std::vector<int> pool_argmax;    // flat input index chosen per output element
  std::vector<float> lrn_scale;    // d^-beta per element
  std::vector<float> lrn_denom;    // d per element
  bool has_forward = false;
};

struct LayerGrads {
  Tensor input;
  Tensor weights;
  Tensor biases;
};

// Allocates zero-filled parameters sized for the given input channel/unit count.
void alloc_params(const LayerSpec& spec, int in_count, LayerState& state);

// Output spatial/channel shape for a given input shape.
void output_shape(const LayerSpec& spec, int in_h, int in_w, int in_c, int& out_h, int& out_w,
                  int& out_c);

Tensor layer_forward(const LayerSpec& spec, LayerState& state, const Tensor& input);
LayerGrads layer_backward(const LayerSpec& spec, const LayerState& state, const Tensor& grad_out);

void sgd_step(LayerState& state, const LayerGrads& grads, float learning_rate);

// Summed cross-entropy over valid sites; logits shape (h, w, classes) with
// h*w sites. Empty `valid` means every site counts. grad is softmax minus
// one-hot on valid sites, zero elsewhere.
struct SoftmaxLoss {
  double loss = 0.0;
  Tensor grad;
};
SoftmaxLoss softmax_ce_loss(const Tensor& logits, std::span<const int> labels,
                            std::span<const std::uint8_t> valid);

}  // namespace normnet
