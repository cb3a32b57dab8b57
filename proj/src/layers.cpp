#include "normnet/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace normnet {

namespace {

[[noreturn]] void dim_error(const std::string& what, const Tensor& t) {
  throw std::invalid_argument(what + " (got " + std::to_string(t.h) + "x" + std::to_string(t.w) +
                              "x" + std::to_string(t.c) + ")");
}

void require_forward(const LayerState& state) {
  if (!state.has_forward) throw std::logic_error("layer_backward called before layer_forward");
}

}  // namespace

LayerSpec conv_spec(int kernel_count, int kernel_size) {
  LayerSpec s;
  s.kind = LayerKind::Conv;
  s.kernel_count = kernel_count;
  s.kernel_size = kernel_size;
  s.stride = 1;
  return s;
}

LayerSpec maxpool_spec() {
  LayerSpec s;
  s.kind = LayerKind::MaxPool;
  s.pool_size = 3;
  s.stride = 2;
  return s;
}

LayerSpec lrn_spec() {
  LayerSpec s;
  s.kind = LayerKind::Lrn;
  return s;
}

LayerSpec fc_spec(int output_units) {
  LayerSpec s;
  s.kind = LayerKind::FullyConnected;
  s.output_units = output_units;
  return s;
}

void alloc_params(const LayerSpec& spec, int in_count, LayerState& state) {
  switch (spec.kind) {
    case LayerKind::Conv:
      state.weights = Tensor(spec.kernel_count, spec.kernel_size * spec.kernel_size, in_count);
      state.biases = Tensor(1, 1, spec.kernel_count);
      break;
    case LayerKind::FullyConnected:
      state.weights = Tensor(1, spec.output_units, in_count);
      state.biases = Tensor(1, 1, spec.output_units);
      break;
    default:
      state.weights = Tensor();
      state.biases = Tensor();
      break;
  }
}

void output_shape(const LayerSpec& spec, int in_h, int in_w, int in_c, int& out_h, int& out_w,
                  int& out_c) {
  switch (spec.kind) {
    case LayerKind::Conv:
      out_h = in_h - spec.kernel_size + 1;
      out_w = in_w - spec.kernel_size + 1;
      out_c = spec.kernel_count;
      break;
    case LayerKind::MaxPool:
      out_h = (in_h - spec.pool_size) / spec.stride + 1;
      out_w = (in_w - spec.pool_size) / spec.stride + 1;
      out_c = in_c;
      break;
    case LayerKind::Lrn:
      out_h = in_h;
      out_w = in_w;
      out_c = in_c;
      break;
    case LayerKind::FullyConnected:
      out_h = 1;
      out_w = 1;
      out_c = spec.output_units;
      break;
  }
}

namespace {

Tensor conv_forward(const LayerSpec& spec, LayerState& state, const Tensor& in) {
  const int s = spec.kernel_size;
  const int k = spec.kernel_count;
  if (spec.stride != 1) throw std::invalid_argument("conv stride must be 1");
  if (in.h < s || in.w < s) dim_error("conv input smaller than kernel", in);
  if (state.weights.h != k || state.weights.w != s * s || state.weights.c != in.c)
    dim_error("conv weights do not match input channels", in);

  Tensor out(in.h - s + 1, in.w - s + 1, k);
  const int cin = in.c;
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      for (int kk = 0; kk < k; ++kk) {
        double acc = state.biases.v[kk];
        const float* wrow = &state.weights.v[std::size_t(kk) * s * s * cin];
        for (int sy = 0; sy < s; ++sy) {
          const float* irow = &in.v[(std::size_t(y + sy) * in.w + x) * cin];
          const float* krow = wrow + std::size_t(sy) * s * cin;
          const int n = s * cin;
          for (int i = 0; i < n; ++i) acc += double(irow[i]) * double(krow[i]);
        }
        out.at(y, x, kk) = float(acc);
      }
    }
  }
  return out;
}

LayerGrads conv_backward(const LayerSpec& spec, const LayerState& state, const Tensor& gout) {
  const Tensor& in = state.input;
  const int s = spec.kernel_size;
  const int k = spec.kernel_count;
  if (gout.h != in.h - s + 1 || gout.w != in.w - s + 1 || gout.c != k)
    dim_error("conv grad_out shape mismatch", gout);

  LayerGrads g;
  g.input = Tensor(in.h, in.w, in.c);
  g.weights = Tensor(state.weights.h, state.weights.w, state.weights.c);
  g.biases = Tensor(1, 1, k);
  const int cin = in.c;

  for (int kk = 0; kk < k; ++kk) {
    double acc = 0.0;
    for (int y = 0; y < gout.h; ++y)
      for (int x = 0; x < gout.w; ++x) acc += gout.at(y, x, kk);
    g.biases.v[kk] = float(acc);
  }

  // grad_weights: one double accumulator per weight, summed over output sites.
  std::vector<double> wacc(state.weights.numel(), 0.0);
  for (int y = 0; y < gout.h; ++y) {
    for (int x = 0; x < gout.w; ++x) {
      const float* grow = &gout.v[(std::size_t(y) * gout.w + x) * k];
      for (int kk = 0; kk < k; ++kk) {
        const double gv = grow[kk];
        if (gv == 0.0) continue;
        double* wk = &wacc[std::size_t(kk) * s * s * cin];
        for (int sy = 0; sy < s; ++sy) {
          const float* irow = &in.v[(std::size_t(y + sy) * in.w + x) * cin];
          double* krow = wk + std::size_t(sy) * s * cin;
          const int n = s * cin;
          for (int i = 0; i < n; ++i) krow[i] += gv * double(irow[i]);
        }
      }
    }
  }
  for (std::size_t i = 0; i < wacc.size(); ++i) g.weights.v[i] = float(wacc[i]);

  std::vector<double> iacc(in.numel(), 0.0);
  for (int y = 0; y < gout.h; ++y) {
    for (int x = 0; x < gout.w; ++x) {
      const float* grow = &gout.v[(std::size_t(y) * gout.w + x) * k];
      for (int kk = 0; kk < k; ++kk) {
        const double gv = grow[kk];
        if (gv == 0.0) continue;
        const float* wk = &state.weights.v[std::size_t(kk) * s * s * cin];
        for (int sy = 0; sy < s; ++sy) {
          double* irow = &iacc[(std::size_t(y + sy) * in.w + x) * cin];
          const float* krow = wk + std::size_t(sy) * s * cin;
          const int n = s * cin;
          for (int i = 0; i < n; ++i) irow[i] += gv * double(krow[i]);
        }
      }
    }
  }
  for (std::size_t i = 0; i < iacc.size(); ++i) g.input.v[i] = float(iacc[i]);
  return g;
}

Tensor maxpool_forward(const LayerSpec& spec, LayerState& state, const Tensor& in) {
  const int p = spec.pool_size;
  const int st = spec.stride;
  if (in.h < p || in.w < p) dim_error("maxpool input smaller than window", in);

  Tensor out((in.h - p) / st + 1, (in.w - p) / st + 1, in.c);
  state.pool_argmax.assign(out.numel(), 0);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      for (int ch = 0; ch < in.c; ++ch) {
        float best = in.at(y * st, x * st, ch);
        int best_idx = (y * st * in.w + x * st) * in.c + ch;
        for (int py = 0; py < p; ++py) {
          for (int px = 0; px < p; ++px) {
            const int iy = y * st + py;
            const int ix = x * st + px;
            const float v = in.at(iy, ix, ch);
            if (v > best) {  // first max wins ties
              best = v;
              best_idx = (iy * in.w + ix) * in.c + ch;
            }
          }
        }
        out.at(y, x, ch) = best;
        state.pool_argmax[(std::size_t(y) * out.w + x) * out.c + ch] = best_idx;
      }
    }
  }
  return out;
}

LayerGrads maxpool_backward(const LayerSpec& spec, const LayerState& state, const Tensor& gout) {
  const Tensor& in = state.input;
  int oh, ow, oc;
  output_shape(spec, in.h, in.w, in.c, oh, ow, oc);
  if (gout.h != oh || gout.w != ow || gout.c != oc) dim_error("maxpool grad_out shape mismatch", gout);

  LayerGrads g;
  g.input = Tensor(in.h, in.w, in.c);
  for (std::size_t i = 0; i < gout.numel(); ++i)
    g.input.v[std::size_t(state.pool_argmax[i])] += gout.v[i];
  return g;
}

// Channel-window normalization: out = in / (bias + alpha * mean(in^2 over
// window))^beta, the mean taken over the channels actually present so border
// channels scale like interior ones.
Tensor lrn_forward(const LayerSpec& spec, LayerState& state, const Tensor& in) {
  const LrnParams& p = spec.lrn;
  const int half = p.size / 2;
  Tensor out(in.h, in.w, in.c);
  state.lrn_scale.assign(in.numel(), 0.0f);
  state.lrn_denom.assign(in.numel(), 0.0f);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const std::size_t base = (std::size_t(y) * in.w + x) * in.c;
      for (int ch = 0; ch < in.c; ++ch) {
        const int lo = std::max(0, ch - half);
        const int hi = std::min(in.c - 1, ch + half);
        double sumsq = 0.0;
        for (int j = lo; j <= hi; ++j) {
          const double v = in.v[base + j];
          sumsq += v * v;
        }
        const double d = p.bias + p.alpha * (sumsq / (hi - lo + 1));
        const double scale = std::pow(d, -double(p.beta));
        state.lrn_denom[base + ch] = float(d);
        state.lrn_scale[base + ch] = float(scale);
        out.v[base + ch] = float(in.v[base + ch] * scale);
      }
    }
  }
  return out;
}

LayerGrads lrn_backward(const LayerSpec& spec, const LayerState& state, const Tensor& gout) {
  const Tensor& in = state.input;
  if (!gout.same_shape(in)) dim_error("lrn grad_out shape mismatch", gout);
  const LrnParams& p = spec.lrn;
  const int half = p.size / 2;

  LayerGrads g;
  g.input = Tensor(in.h, in.w, in.c);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      const std::size_t base = (std::size_t(y) * in.w + x) * in.c;
      for (int ch = 0; ch < in.c; ++ch) {
        double acc = double(gout.v[base + ch]) * double(state.lrn_scale[base + ch]);
        // d(out_i)/d(in_ch) for every window i containing ch.
        const int lo = std::max(0, ch - half);
        const int hi = std::min(in.c - 1, ch + half);
        for (int i = lo; i <= hi; ++i) {
          const int wlo = std::max(0, i - half);
          const int whi = std::min(in.c - 1, i + half);
          const double d = state.lrn_denom[base + i];
          const double dpow = double(state.lrn_scale[base + i]) / d;  // d^(-beta-1)
          acc -= double(gout.v[base + i]) * double(in.v[base + i]) * double(p.beta) * dpow *
                 2.0 * double(p.alpha) * double(in.v[base + ch]) / (whi - wlo + 1);
        }
        g.input.v[base + ch] = float(acc);
      }
    }
  }
  return g;
}

Tensor fc_forward(const LayerSpec& spec, LayerState& state, const Tensor& in) {
  const int n_in = int(in.numel());
  const int n_out = spec.output_units;
  if (state.weights.w != n_out || state.weights.c != n_in)
    dim_error("fc weights do not match input size", in);

  Tensor out(1, 1, n_out);
  for (int o = 0; o < n_out; ++o) {
    double acc = state.biases.v[o];
    const float* wrow = &state.weights.v[std::size_t(o) * n_in];
    for (int i = 0; i < n_in; ++i) acc += double(in.v[i]) * double(wrow[i]);
    out.v[o] = float(acc);
  }
  return out;
}

LayerGrads fc_backward(const LayerSpec& spec, const LayerState& state, const Tensor& gout) {
  const Tensor& in = state.input;
  const int n_in = int(in.numel());
  const int n_out = spec.output_units;
  if (int(gout.numel()) != n_out) dim_error("fc grad_out shape mismatch", gout);

  LayerGrads g;
  g.input = Tensor(in.h, in.w, in.c);
  g.weights = Tensor(1, n_out, n_in);
  g.biases = Tensor(1, 1, n_out);
  std::vector<double> iacc(std::size_t(n_in), 0.0);
  for (int o = 0; o < n_out; ++o) {
    const double gv = gout.v[o];
    g.biases.v[o] = float(gv);
    float* wg = &g.weights.v[std::size_t(o) * n_in];
    const float* wrow = &state.weights.v[std::size_t(o) * n_in];
    for (int i = 0; i < n_in; ++i) {
      wg[i] = float(gv * double(in.v[i]));
      iacc[std::size_t(i)] += gv * double(wrow[i]);
    }
  }
  for (int i = 0; i < n_in; ++i) g.input.v[i] = float(iacc[std::size_t(i)]);
  return g;
}

}  // namespace

Tensor layer_forward(const LayerSpec& spec, LayerState& state, const Tensor& input) {
  state.input = input;
  state.has_forward = true;
  switch (spec.kind) {
    case LayerKind::Conv: return conv_forward(spec, state, input);
    case LayerKind::MaxPool: return maxpool_forward(spec, state, input);
    case LayerKind::Lrn: return lrn_forward(spec, state, input);
    case LayerKind::FullyConnected: return fc_forward(spec, state, input);
  }
  throw std::logic_error("unknown layer kind");
}

LayerGrads layer_backward(const LayerSpec& spec, const LayerState& state, const Tensor& grad_out) {
  require_forward(state);
  switch (spec.kind) {
    case LayerKind::Conv: return conv_backward(spec, state, grad_out);
    case LayerKind::MaxPool: return maxpool_backward(spec, state, grad_out);
    case LayerKind::Lrn: return lrn_backward(spec, state, grad_out);
    case LayerKind::FullyConnected: return fc_backward(spec, state, grad_out);
  }
  throw std::logic_error("unknown layer kind");
}

void sgd_step(LayerState& state, const LayerGrads& grads, float learning_rate) {
  if (!state.weights.same_shape(grads.weights) || !state.biases.same_shape(grads.biases))
    throw std::invalid_argument("sgd_step gradient shape mismatch");
  for (std::size_t i = 0; i < state.weights.numel(); ++i)
    state.weights.v[i] -= learning_rate * grads.weights.v[i];
  for (std::size_t i = 0; i < state.biases.numel(); ++i)
    state.biases.v[i] -= learning_rate * grads.biases.v[i];
}

SoftmaxLoss softmax_ce_loss(const Tensor& logits, std::span<const int> labels,
                            std::span<const std::uint8_t> valid) {
  const std::size_t sites = std::size_t(logits.h) * logits.w;
  const int k = logits.c;
  if (labels.size() != sites) throw std::invalid_argument("softmax_ce_loss: label count mismatch");
  if (!valid.empty() && valid.size() != sites)
    throw std::invalid_argument("softmax_ce_loss: valid mask size mismatch");

  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < sites; ++i)
    if (valid.empty() || valid[i]) ++n_valid;
  if (n_valid == 0) throw std::invalid_argument("softmax_ce_loss: no valid sites");

  SoftmaxLoss result;
  result.grad = Tensor(logits.h, logits.w, logits.c);
  double loss = 0.0;
  for (std::size_t i = 0; i < sites; ++i) {
    if (!valid.empty() && !valid[i]) continue;
    const int label = labels[i];
    if (label < 0 || label >= k) throw std::invalid_argument("softmax_ce_loss: label out of range");
    const float* row = &logits.v[i * k];
    float* grow = &result.grad.v[i * k];
    float mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(double(row[j]) - mx);
    loss += std::log(denom) - (double(row[label]) - mx);
    for (int j = 0; j < k; ++j) grow[j] = float(std::exp(double(row[j]) - mx) / denom);
    grow[label] -= 1.0f;
  }
  result.loss = loss;
  return result;
}

}  // namespace normnet
