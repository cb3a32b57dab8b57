#include "normnet/net.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "normnet/errors.hpp"
#include "normnet/io.hpp"

namespace normnet {

NetworkSpec build_network(NetworkKind kind, bool tiny) {
  NetworkSpec s;
  s.kind = kind;
  s.tiny = tiny;
  const int d = tiny ? 8 : 1;
  s.input_channels = kind == NetworkKind::Fusion ? 18 : 3;
  s.trunk = {conv_spec(64 / d, 5), maxpool_spec(), lrn_spec(), conv_spec(192 / d, 3),
             maxpool_spec(),      lrn_spec(),     conv_spec(384 / d, 3), conv_spec(256 / d, 3)};
  switch (kind) {
    case NetworkKind::TopDown:
      s.heads = {{"normals", 20, 20, 20, 1.0f, LossKind::SoftmaxCE},
                 {"layout", 1, 1, 300, 50.0f, LossKind::SoftmaxCE}};
      break;
    case NetworkKind::BottomUp:
      s.trunk.push_back(fc_spec(4096 / d));
      s.heads = {{"normals", 13, 13, 40, 1.0f, LossKind::SoftmaxCE},
                 {"edge", 1, 1, 4, 50.0f, LossKind::SoftmaxCE}};
      break;
    case NetworkKind::Fusion:
      s.trunk.push_back(fc_spec(4096 / d));
      s.heads = {{"normals", 13, 13, 40, 1.0f, LossKind::SoftmaxCE}};
      break;
    case NetworkKind::BaselineRegression:
      s.heads = {{"normals_reg", 20, 20, 3, 1.0f, LossKind::NegDot}};
      break;
  }
  return s;
}

int trunk_output_units(const NetworkSpec& spec) {
  int h = spec.input_h, w = spec.input_w, c = spec.input_channels;
  for (const LayerSpec& l : spec.trunk) {
    if (l.kind == LayerKind::FullyConnected) {
      h = 1;
      w = 1;
      c = l.output_units;
    } else {
      output_shape(l, h, w, c, h, w, c);
    }
  }
  return h * w * c;
}

NetworkState init_network(const NetworkSpec& spec, Rng& rng) {
  NetworkState state;
  state.trunk.resize(spec.trunk.size());
  int h = spec.input_h, w = spec.input_w, c = spec.input_channels;
  auto gaussian_fill = [&rng](Tensor& t, double std_dev) {
    for (float& x : t.v) x = float(rng.normal(0.0, std_dev));
  };
  for (std::size_t i = 0; i < spec.trunk.size(); ++i) {
    const LayerSpec& l = spec.trunk[i];
    const int in_count = l.kind == LayerKind::FullyConnected ? h * w * c : c;
    alloc_params(l, in_count, state.trunk[i]);
    if (l.kind == LayerKind::Conv) {
      gaussian_fill(state.trunk[i].weights, 1.0 / std::sqrt(double(l.kernel_size) * l.kernel_size * c));
    } else if (l.kind == LayerKind::FullyConnected) {
      gaussian_fill(state.trunk[i].weights, 1.0 / std::sqrt(double(in_count)));
    }
    output_shape(l, h, w, c, h, w, c);
  }
  const int feat = h * w * c;
  state.heads.resize(spec.heads.size());
  for (std::size_t i = 0; i < spec.heads.size(); ++i) {
    alloc_params(fc_spec(head_units(spec.heads[i])), feat, state.heads[i]);
    gaussian_fill(state.heads[i].weights, 1.0 / std::sqrt(double(feat)));
  }
  return state;
}

std::vector<Tensor> net_forward(const NetworkSpec& spec, NetworkState& state, const Tensor& input) {
  if (input.h != spec.input_h || input.w != spec.input_w || input.c != spec.input_channels)
    throw std::invalid_argument("network input shape mismatch: expected " +
                                std::to_string(spec.input_h) + "x" + std::to_string(spec.input_w) +
                                "x" + std::to_string(spec.input_channels));
  Tensor x = input;
  for (std::size_t i = 0; i < spec.trunk.size(); ++i)
    x = layer_forward(spec.trunk[i], state.trunk[i], x);

  std::vector<Tensor> out;
  out.reserve(spec.heads.size());
  for (std::size_t i = 0; i < spec.heads.size(); ++i) {
    const HeadSpec& h = spec.heads[i];
    Tensor logits = layer_forward(fc_spec(head_units(h)), state.heads[i], x);
    logits.h = h.sites_h;
    logits.w = h.sites_w;
    logits.c = h.classes;
    out.push_back(std::move(logits));
  }
  return out;
}

NetGrads net_backward(const NetworkSpec& spec, const NetworkState& state,
                      const std::vector<Tensor>& head_grads) {
  if (head_grads.size() != spec.heads.size())
    throw std::invalid_argument("head gradient count mismatch");
  NetGrads g;
  g.heads.resize(spec.heads.size());
  Tensor trunk_grad;
  for (std::size_t i = 0; i < spec.heads.size(); ++i) {
    g.heads[i] = layer_backward(fc_spec(head_units(spec.heads[i])), state.heads[i], head_grads[i]);
    if (trunk_grad.numel() == 0) {
      trunk_grad = g.heads[i].input;
    } else {
      for (std::size_t j = 0; j < trunk_grad.numel(); ++j) trunk_grad.v[j] += g.heads[i].input.v[j];
    }
  }
  g.trunk.resize(spec.trunk.size());
  for (std::size_t i = spec.trunk.size(); i-- > 0;) {
    g.trunk[i] = layer_backward(spec.trunk[i], state.trunk[i], trunk_grad);
    trunk_grad = g.trunk[i].input;
  }
  return g;
}

namespace {
void accumulate_layer(LayerGrads& into, const LayerGrads& g) {
  for (std::size_t i = 0; i < into.weights.numel(); ++i) into.weights.v[i] += g.weights.v[i];
  for (std::size_t i = 0; i < into.biases.numel(); ++i) into.biases.v[i] += g.biases.v[i];
}
void scale_layer(LayerGrads& g, float s) {
  for (float& x : g.weights.v) x *= s;
  for (float& x : g.biases.v) x *= s;
}
}  // namespace

void accumulate_grads(NetGrads& into, const NetGrads& g) {
  for (std::size_t i = 0; i < into.trunk.size(); ++i) accumulate_layer(into.trunk[i], g.trunk[i]);
  for (std::size_t i = 0; i < into.heads.size(); ++i) accumulate_layer(into.heads[i], g.heads[i]);
}

void scale_grads(NetGrads& g, float s) {
  for (LayerGrads& l : g.trunk) scale_layer(l, s);
  for (LayerGrads& l : g.heads) scale_layer(l, s);
}

void net_sgd(NetworkState& state, const NetGrads& grads, float learning_rate) {
  for (std::size_t i = 0; i < state.trunk.size(); ++i)
    if (state.trunk[i].weights.numel() > 0) sgd_step(state.trunk[i], grads.trunk[i], learning_rate);
  for (std::size_t i = 0; i < state.heads.size(); ++i)
    sgd_step(state.heads[i], grads.heads[i], learning_rate);
}

std::pair<double, Tensor> neg_dot_loss(const Tensor& raw, std::span<const Vec3> targets,
                                       std::span<const std::uint8_t> valid) {
  if (raw.c != 3) throw std::invalid_argument("neg_dot_loss expects 3 channels");
  const std::size_t sites = std::size_t(raw.h) * raw.w;
  if (targets.size() != sites) throw std::invalid_argument("neg_dot_loss target count mismatch");
  if (!valid.empty() && valid.size() != sites)
    throw std::invalid_argument("neg_dot_loss valid mask mismatch");

  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < sites; ++i)
    if (valid.empty() || valid[i]) ++n_valid;
  if (n_valid == 0) throw std::invalid_argument("neg_dot_loss: no valid sites");

  Tensor grad(raw.h, raw.w, 3);
  double loss = 0.0;
  const double inv_n = 1.0 / double(n_valid);
  for (std::size_t i = 0; i < sites; ++i) {
    if (!valid.empty() && !valid[i]) continue;
    const Vec3 r{raw.v[i * 3], raw.v[i * 3 + 1], raw.v[i * 3 + 2]};
    const double nr = norm(r);
    if (nr < 1e-12) continue;  // flat spot: zero contribution, zero gradient
    const Vec3 u = r * float(1.0 / nr);
    const Vec3 t = targets[i];
    const double ut = dot(u, t);
    loss -= ut * inv_n;
    const Vec3 gr = (t - u * float(ut)) * float(-inv_n / nr);
    grad.v[i * 3] = gr.x;
    grad.v[i * 3 + 1] = gr.y;
    grad.v[i * 3 + 2] = gr.z;
  }
  return {loss, grad};
}

double net_loss_and_head_grads(const NetworkSpec& spec, NetworkState& state, const Tensor& input,
                               const SampleLabels& y, std::vector<Tensor>* head_grads) {
  const std::vector<Tensor> logits = net_forward(spec, state, input);
  if (head_grads) head_grads->assign(spec.heads.size(), Tensor());
  double total = 0.0;
  for (std::size_t i = 0; i < spec.heads.size(); ++i) {
    const HeadSpec& h = spec.heads[i];
    const std::span<const std::uint8_t> valid =
        i < y.valid.size() ? std::span<const std::uint8_t>(y.valid[i]) : std::span<const std::uint8_t>();
    if (h.loss == LossKind::SoftmaxCE) {
      SoftmaxLoss sl = softmax_ce_loss(logits[i], y.labels[i], valid);
      total += double(h.loss_multiplier) * sl.loss;
      if (head_grads) {
        for (float& v : sl.grad.v) v *= h.loss_multiplier;
        (*head_grads)[i] = std::move(sl.grad);
      }
    } else {
      auto [loss, grad] = neg_dot_loss(logits[i], y.reg_targets[i], valid);
      total += double(h.loss_multiplier) * loss;
      if (head_grads) {
        for (float& v : grad.v) v *= h.loss_multiplier;
        (*head_grads)[i] = std::move(grad);
      }
    }
  }
  return total;
}

double grad_check(const NetworkSpec& spec, NetworkState& state, const Tensor& input,
                  const SampleLabels& y, int samples_per_layer, double h) {
  std::vector<Tensor> head_grads;
  net_loss_and_head_grads(spec, state, input, y, &head_grads);
  const NetGrads g = net_backward(spec, state, head_grads);

  double max_rel = 0.0;
  auto probe = [&](Tensor& w, const Tensor& gw) {
    const std::size_t n = w.numel();
    if (n == 0) return;
    const std::size_t count = std::min<std::size_t>(std::size_t(samples_per_layer), n);
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t idx = (j * 0x9E3779B97F4A7C15ull) % n;
      const float orig = w.v[idx];
      w.v[idx] = float(double(orig) + h);
      const double lp = net_loss_and_head_grads(spec, state, input, y, nullptr);
      const float wp = w.v[idx];
      w.v[idx] = float(double(orig) - h);
      const double lm = net_loss_and_head_grads(spec, state, input, y, nullptr);
      const float wm = w.v[idx];
      w.v[idx] = orig;
      const double numeric = (lp - lm) / (double(wp) - double(wm));
      const double analytic = gw.v[idx];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  };
  for (std::size_t i = 0; i < state.trunk.size(); ++i) probe(state.trunk[i].weights, g.trunk[i].weights);
  for (std::size_t i = 0; i < state.heads.size(); ++i) probe(state.heads[i].weights, g.heads[i].weights);
  return max_rel;
}

std::string first_non_finite_layer(const NetworkSpec& spec, const NetworkState& state) {
  auto layer_name = [](const LayerSpec& l) {
    switch (l.kind) {
      case LayerKind::Conv: return std::string("conv");
      case LayerKind::MaxPool: return std::string("maxpool");
      case LayerKind::Lrn: return std::string("lrn");
      case LayerKind::FullyConnected: return std::string("fc");
    }
    return std::string("?");
  };
  for (std::size_t i = 0; i < state.trunk.size(); ++i)
    if (state.trunk[i].has_forward && !all_finite(state.trunk[i].input))
      return "trunk[" + std::to_string(i) + "] " + layer_name(spec.trunk[i]) + " input";
  for (std::size_t i = 0; i < state.heads.size(); ++i)
    if (state.heads[i].has_forward && !all_finite(state.heads[i].input))
      return "head[" + std::to_string(i) + "] " + spec.heads[i].name + " input";
  return "";
}

namespace {
std::uint32_t kind_tag(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return 0;
    case LayerKind::MaxPool: return 1;
    case LayerKind::Lrn: return 2;
    case LayerKind::FullyConnected: return 3;
  }
  throw std::logic_error("bad layer kind");
}

void write_layer(std::ostream& os, std::uint32_t tag, const LayerState& st) {
  write_u32le(os, tag);
  write_u32le(os, std::uint32_t(st.weights.h));
  write_u32le(os, std::uint32_t(st.weights.w));
  write_u32le(os, std::uint32_t(st.weights.c));
  write_f32le_array(os, st.weights.v);
  write_u32le(os, std::uint32_t(st.biases.c));
  write_f32le_array(os, st.biases.v);
}

void read_layer(std::istream& is, std::uint32_t expect_tag, LayerState& st, const std::string& what) {
  if (read_u32le(is) != expect_tag) throw DataError(what + ": layer kind mismatch");
  const int wh = int(read_u32le(is)), ww = int(read_u32le(is)), wc = int(read_u32le(is));
  Tensor w(wh == 0 && ww == 0 && wc == 0 ? Tensor() : Tensor(wh, ww, wc));
  read_f32le_array(is, w.v);
  const int bc = int(read_u32le(is));
  Tensor b(bc == 0 ? Tensor() : Tensor(1, 1, bc));
  read_f32le_array(is, b.v);
  if (st.weights.numel() > 0 &&
      (w.h != st.weights.h || w.w != st.weights.w || w.c != st.weights.c || b.c != st.biases.c))
    throw DataError(what + ": weight shape does not match network spec");
  st.weights = std::move(w);
  st.biases = std::move(b);
}
}  // namespace

void save_weights(const std::filesystem::path& p, const NetworkSpec& spec, const NetworkState& state) {
  auto os = open_out_binary(p);
  write_magic(os, "NFW1");
  write_u32le(os, std::uint32_t(state.trunk.size() + state.heads.size()));
  for (std::size_t i = 0; i < state.trunk.size(); ++i)
    write_layer(os, kind_tag(spec.trunk[i].kind), state.trunk[i]);
  for (const LayerState& h : state.heads) write_layer(os, 3, h);
  if (!os) throw DataError("failed writing weights: " + p.string());
}

void load_weights(const std::filesystem::path& p, const NetworkSpec& spec, NetworkState& state) {
  // shape skeleton for validation
  state.trunk.assign(spec.trunk.size(), LayerState());
  state.heads.assign(spec.heads.size(), LayerState());
  int h = spec.input_h, w = spec.input_w, c = spec.input_channels;
  for (std::size_t i = 0; i < spec.trunk.size(); ++i) {
    const LayerSpec& l = spec.trunk[i];
    alloc_params(l, l.kind == LayerKind::FullyConnected ? h * w * c : c, state.trunk[i]);
    output_shape(l, h, w, c, h, w, c);
  }
  for (std::size_t i = 0; i < spec.heads.size(); ++i)
    alloc_params(fc_spec(head_units(spec.heads[i])), h * w * c, state.heads[i]);

  auto is = open_in_binary(p);
  expect_magic(is, "NFW1", p.string());
  const std::uint32_t n = read_u32le(is);
  if (n != state.trunk.size() + state.heads.size())
    throw DataError(p.string() + ": layer count does not match network spec");
  for (std::size_t i = 0; i < spec.trunk.size(); ++i)
    read_layer(is, kind_tag(spec.trunk[i].kind), state.trunk[i], p.string());
  for (std::size_t i = 0; i < spec.heads.size(); ++i) read_layer(is, 3, state.heads[i], p.string());
}

std::string network_kind_name(NetworkKind kind) {
  switch (kind) {
    case NetworkKind::TopDown: return "topdown";
    case NetworkKind::BottomUp: return "bottomup";
    case NetworkKind::Fusion: return "fusion";
    case NetworkKind::BaselineRegression: return "baseline";
  }
  throw std::logic_error("bad network kind");
}

NetworkKind network_kind_from_name(const std::string& name) {
  if (name == "topdown") return NetworkKind::TopDown;
  if (name == "bottomup") return NetworkKind::BottomUp;
  if (name == "fusion") return NetworkKind::Fusion;
  if (name == "baseline") return NetworkKind::BaselineRegression;
  throw UsageError("unknown network kind: " + name);
}

}  // namespace normnet
