#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "normnet/geom.hpp"
#include "normnet/layers.hpp"
#include "normnet/rng.hpp"
#include "normnet/tensor.hpp"

namespace normnet {

enum class NetworkKind { TopDown, BottomUp, Fusion, BaselineRegression };

enum class LossKind { SoftmaxCE, NegDot };

struct HeadSpec {
  std::string name;
  int sites_h = 1;
  int sites_w = 1;
  int classes = 1;  // K for SoftmaxCE; 3 (xyz) for NegDot
  float loss_multiplier = 1.0f;
  LossKind loss = LossKind::SoftmaxCE;
};

inline int head_units(const HeadSpec& h) { return h.sites_h * h.sites_w * h.classes; }

struct NetworkSpec {
  NetworkKind kind = NetworkKind::TopDown;
  bool tiny = false;
  int input_h = 55;
  int input_w = 55;
  int input_channels = 3;
  std::vector<LayerSpec> trunk;  // conv stack, plus the shared FC where used
  std::vector<HeadSpec> heads;   // each an FC layer off the trunk output
};

struct NetworkState {
  std::vector<LayerState> trunk;
  std::vector<LayerState> heads;
};

struct NetGrads {
  std::vector<LayerGrads> trunk;
  std::vector<LayerGrads> heads;
};

// Shared trunk C(64,5)-MP-LRN-C(192,3)-MP-LRN-C(384,3)-C(256,3); tiny mode
// divides channel counts by 8. Head output sizes are label-space constants
// and unchanged by tiny mode.
NetworkSpec build_network(NetworkKind kind, bool tiny = false);

// Number of features the heads see (trunk output size), from shape arithmetic.
int trunk_output_units(const NetworkSpec& spec);

NetworkState init_network(const NetworkSpec& spec, Rng& rng);

// Per-head logits; trunk/head activations cached in `state` for backward.
std::vector<Tensor> net_forward(const NetworkSpec& spec, NetworkState& state, const Tensor& input);

// Backward from per-head logit gradients (loss multipliers already applied).
NetGrads net_backward(const NetworkSpec& spec, const NetworkState& state,
                      const std::vector<Tensor>& head_grads);

void accumulate_grads(NetGrads& into, const NetGrads& g);
void scale_grads(NetGrads& g, float s);
void net_sgd(NetworkState& state, const NetGrads& grads, float learning_rate);

// Joint loss of one labeled sample: summed softmax CE per head (NegDot heads
// use targets), scaled by head multipliers.
struct SampleLabels {
  std::vector<std::vector<int>> labels;            // per CE head, site-major
  std::vector<std::vector<std::uint8_t>> valid;    // per head (empty = all valid)
  std::vector<std::vector<Vec3>> reg_targets;      // per NegDot head, site-major
};
double net_loss_and_head_grads(const NetworkSpec& spec, NetworkState& state, const Tensor& input,
                               const SampleLabels& y, std::vector<Tensor>* head_grads);

// Negative mean dot product between per-site normalized raw predictions and
// unit targets over valid sites; grad (w.r.t. raw) composes the
// normalization. Empty `valid` means all sites count.
std::pair<double, Tensor> neg_dot_loss(const Tensor& raw, std::span<const Vec3> targets,
                                       std::span<const std::uint8_t> valid);

// Max relative error between analytic gradients and central finite
// differences over a deterministic parameter sample.
double grad_check(const NetworkSpec& spec, NetworkState& state, const Tensor& input,
                  const SampleLabels& y, int samples_per_layer = 24, double h = 1e-2);

// If any cached activation is non-finite, returns its layer's name; else "".
std::string first_non_finite_layer(const NetworkSpec& spec, const NetworkState& state);

// "NFW1" weight file; bit-exact round trip.
void save_weights(const std::filesystem::path& p, const NetworkSpec& spec, const NetworkState& state);
void load_weights(const std::filesystem::path& p, const NetworkSpec& spec, NetworkState& state);

std::string network_kind_name(NetworkKind kind);
NetworkKind network_kind_from_name(const std::string& name);

}  // namespace normnet
