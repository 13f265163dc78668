#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sapg/rng.hpp"

namespace sapg::nn {

// Minimal 1D CNN engine: six layer kinds, exact backprop, Adam. Tensors are
// position-major (data[x * channels + c]) so the channel loops vectorize.

enum class LayerKind { Conv1D, ReLU, Sigmoid, GlobalAvgPool, Flatten, Dense };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv1D: return "conv1d";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::GlobalAvgPool: return "global_average_pool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
  }
  return "?";
}

struct Layer {
  LayerKind kind;
  int in_len = 0, in_ch = 0;
  int out_len = 0, out_ch = 0;
  int kernel = 0, stride = 1, pad = 0;  // conv only
  std::vector<double> W, b;
  // Adam first/second moment estimates.
  std::vector<double> mW, vW, mb, vb;

  size_t param_count() const { return W.size() + b.size(); }
};

class Model {
 public:
  Model() = default;
  Model(int input_len, int input_channels)
      : input_len_(input_len), input_ch_(input_channels) {
    if (input_len < 1 || input_channels < 1)
      throw std::invalid_argument("Model: input shape must be positive");
  }

  Model& conv1d(int out_channels, int kernel, int stride) {
    if (kernel % 2 == 0) throw std::invalid_argument("conv1d: kernel must be odd");
    if (out_channels < 1 || stride < 1)
      throw std::invalid_argument("conv1d: bad channel count or stride");
    Layer l;
    l.kind = LayerKind::Conv1D;
    tail_shape(l);
    l.kernel = kernel;
    l.stride = stride;
    l.pad = (kernel - 1) / 2;
    l.out_ch = out_channels;
    l.out_len = (l.in_len + 2 * l.pad - kernel) / stride + 1;
    l.W.assign(static_cast<size_t>(out_channels) * kernel * l.in_ch, 0.0);
    l.b.assign(out_channels, 0.0);
    layers_.push_back(std::move(l));
    return *this;
  }
  Model& relu() { return activation(LayerKind::ReLU); }
  Model& sigmoid() { return activation(LayerKind::Sigmoid); }
  Model& global_average_pool() {
    Layer l;
    l.kind = LayerKind::GlobalAvgPool;
    tail_shape(l);
    l.out_len = 1;
    l.out_ch = l.in_ch;
    layers_.push_back(std::move(l));
    return *this;
  }
  Model& flatten() {
    Layer l;
    l.kind = LayerKind::Flatten;
    tail_shape(l);
    l.out_len = 1;
    l.out_ch = l.in_len * l.in_ch;
    layers_.push_back(std::move(l));
    return *this;
  }
  // Fully connected over the flattened input (position-major order).
  Model& dense(int units) {
    if (units < 1) throw std::invalid_argument("dense: units must be >= 1");
    Layer l;
    l.kind = LayerKind::Dense;
    tail_shape(l);
    l.out_len = 1;
    l.out_ch = units;
    l.W.assign(static_cast<size_t>(units) * l.in_len * l.in_ch, 0.0);
    l.b.assign(units, 0.0);
    layers_.push_back(std::move(l));
    return *this;
  }

  // He-uniform before ReLU, Glorot-uniform before sigmoid / linear heads.
  void init_params(uint64_t seed) {
    Rng rng(seed);
    for (size_t i = 0; i < layers_.size(); ++i) {
      Layer& l = layers_[i];
      if (l.W.empty()) continue;
      const int fan_in =
          l.kind == LayerKind::Conv1D ? l.in_ch * l.kernel : l.in_len * l.in_ch;
      const int fan_out =
          l.kind == LayerKind::Conv1D ? l.out_ch * l.kernel : l.out_ch;
      bool next_relu = false;
      for (size_t j = i + 1; j < layers_.size(); ++j) {
        if (layers_[j].kind == LayerKind::ReLU) { next_relu = true; break; }
        if (layers_[j].kind == LayerKind::Sigmoid) break;
        if (!layers_[j].W.empty()) break;
      }
      const double limit = next_relu ? std::sqrt(6.0 / fan_in)
                                     : std::sqrt(6.0 / (fan_in + fan_out));
      for (double& w : l.W) w = rng.uniform(-limit, limit);
      for (double& b : l.b) b = 0.0;
      l.mW.assign(l.W.size(), 0.0);
      l.vW.assign(l.W.size(), 0.0);
      l.mb.assign(l.b.size(), 0.0);
      l.vb.assign(l.b.size(), 0.0);
    }
  }

  int input_len() const { return input_len_; }
  int input_channels() const { return input_ch_; }
  int output_size() const {
    return layers_.empty() ? input_len_ * input_ch_
                           : layers_.back().out_len * layers_.back().out_ch;
  }
  size_t param_count() const {
    size_t n = 0;
    for (const auto& l : layers_) n += l.param_count();
    return n;
  }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  int64_t adam_steps() const { return adam_steps_; }
  void set_adam_steps(int64_t t) { adam_steps_ = t; }
  int64_t& adam_steps_ref() { return adam_steps_; }

 private:
  Model& activation(LayerKind k) {
    Layer l;
    l.kind = k;
    tail_shape(l);
    l.out_len = l.in_len;
    l.out_ch = l.in_ch;
    layers_.push_back(std::move(l));
    return *this;
  }
  void tail_shape(Layer& l) const {
    if (layers_.empty()) {
      l.in_len = input_len_;
      l.in_ch = input_ch_;
    } else {
      l.in_len = layers_.back().out_len;
      l.in_ch = layers_.back().out_ch;
    }
  }

  int input_len_ = 0, input_ch_ = 0;
  std::vector<Layer> layers_;
  int64_t adam_steps_ = 0;
};

// Per-layer activation storage; a[0] is the input, a[i+1] the output of
// layer i. One instance per thread.
struct Activations {
  std::vector<std::vector<double>> a;

  void prepare(const Model& m) {
    a.resize(m.layers().size() + 1);
    a[0].resize(static_cast<size_t>(m.input_len()) * m.input_channels());
    for (size_t i = 0; i < m.layers().size(); ++i) {
      const Layer& l = m.layers()[i];
      a[i + 1].resize(static_cast<size_t>(l.out_len) * l.out_ch);
    }
  }
  const std::vector<double>& output() const { return a.back(); }
};

struct Gradients {
  std::vector<std::vector<double>> gW, gb;

  void prepare(const Model& m) {
    gW.resize(m.layers().size());
    gb.resize(m.layers().size());
    for (size_t i = 0; i < m.layers().size(); ++i) {
      gW[i].assign(m.layers()[i].W.size(), 0.0);
      gb[i].assign(m.layers()[i].b.size(), 0.0);
    }
  }
  void zero() {
    for (auto& g : gW) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
  }
  void add(const Gradients& o) {
    for (size_t i = 0; i < gW.size(); ++i) {
      for (size_t k = 0; k < gW[i].size(); ++k) gW[i][k] += o.gW[i][k];
      for (size_t k = 0; k < gb[i].size(); ++k) gb[i][k] += o.gb[i][k];
    }
  }
  void scale(double s) {
    for (auto& g : gW)
      for (double& v : g) v *= s;
    for (auto& g : gb)
      for (double& v : g) v *= s;
  }
};

namespace detail {

inline void conv_forward(const Layer& l, const double* in, double* out) {
  const int IC = l.in_ch, OC = l.out_ch, K = l.kernel;
  for (int ox = 0; ox < l.out_len; ++ox) {
    double* orow = out + static_cast<size_t>(ox) * OC;
    for (int oc = 0; oc < OC; ++oc) orow[oc] = l.b[oc];
    for (int k = 0; k < K; ++k) {
      const int xi = ox * l.stride + k - l.pad;
      if (xi < 0 || xi >= l.in_len) continue;
      const double* irow = in + static_cast<size_t>(xi) * IC;
      for (int oc = 0; oc < OC; ++oc) {
        const double* w = &l.W[(static_cast<size_t>(oc) * K + k) * IC];
        double acc = 0.0;
        for (int ic = 0; ic < IC; ++ic) acc += w[ic] * irow[ic];
        orow[oc] += acc;
      }
    }
  }
}

inline void conv_backward(const Layer& l, const double* in, const double* dout,
                          double* din, double* gW, double* gb) {
  const int IC = l.in_ch, OC = l.out_ch, K = l.kernel;
  for (int ox = 0; ox < l.out_len; ++ox) {
    const double* drow = dout + static_cast<size_t>(ox) * OC;
    for (int oc = 0; oc < OC; ++oc) gb[oc] += drow[oc];
    for (int k = 0; k < K; ++k) {
      const int xi = ox * l.stride + k - l.pad;
      if (xi < 0 || xi >= l.in_len) continue;
      const double* irow = in + static_cast<size_t>(xi) * IC;
      double* dirow = din + static_cast<size_t>(xi) * IC;
      for (int oc = 0; oc < OC; ++oc) {
        const double g = drow[oc];
        const double* w = &l.W[(static_cast<size_t>(oc) * K + k) * IC];
        double* gw = &gW[(static_cast<size_t>(oc) * K + k) * IC];
        for (int ic = 0; ic < IC; ++ic) {
          dirow[ic] += w[ic] * g;
          gw[ic] += irow[ic] * g;
        }
      }
    }
  }
}

}  // namespace detail

inline void forward(const Model& m, const double* input, Activations& ws) {
  ws.prepare(m);
  std::copy(input, input + ws.a[0].size(), ws.a[0].begin());
  for (size_t i = 0; i < m.layers().size(); ++i) {
    const Layer& l = m.layers()[i];
    const std::vector<double>& in = ws.a[i];
    std::vector<double>& out = ws.a[i + 1];
    switch (l.kind) {
      case LayerKind::Conv1D:
        detail::conv_forward(l, in.data(), out.data());
        break;
      case LayerKind::ReLU:
        for (size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
        break;
      case LayerKind::Sigmoid:
        for (size_t k = 0; k < in.size(); ++k) out[k] = 1.0 / (1.0 + std::exp(-in[k]));
        break;
      case LayerKind::GlobalAvgPool:
        for (int c = 0; c < l.in_ch; ++c) {
          double acc = 0.0;
          for (int x = 0; x < l.in_len; ++x) acc += in[static_cast<size_t>(x) * l.in_ch + c];
          out[c] = acc / l.in_len;
        }
        break;
      case LayerKind::Flatten:
        std::copy(in.begin(), in.end(), out.begin());
        break;
      case LayerKind::Dense: {
        const int D = l.in_len * l.in_ch;
        for (int u = 0; u < l.out_ch; ++u) {
          const double* w = &l.W[static_cast<size_t>(u) * D];
          double acc = l.b[u];
          for (int d = 0; d < D; ++d) acc += w[d] * in[d];
          out[u] = acc;
        }
        break;
      }
    }
  }
}

// Convenience single-output helpers.
inline std::vector<double> forward(const Model& m, const std::vector<double>& input) {
  if (input.size() != static_cast<size_t>(m.input_len()) * m.input_channels())
    throw std::invalid_argument("forward: input shape mismatch");
  Activations ws;
  forward(m, input.data(), ws);
  return ws.output();
}

// Backpropagates d(loss)/d(output) through the cached activations,
// accumulating parameter gradients (caller zeroes/scales them).
inline void backward(const Model& m, const Activations& ws,
                     std::vector<double> dout, Gradients& grads) {
  std::vector<double> din;
  for (size_t ii = m.layers().size(); ii-- > 0;) {
    const Layer& l = m.layers()[ii];
    const std::vector<double>& in = ws.a[ii];
    const std::vector<double>& out = ws.a[ii + 1];
    din.assign(in.size(), 0.0);
    switch (l.kind) {
      case LayerKind::Conv1D:
        detail::conv_backward(l, in.data(), dout.data(), din.data(),
                              grads.gW[ii].data(), grads.gb[ii].data());
        break;
      case LayerKind::ReLU:
        for (size_t k = 0; k < in.size(); ++k) din[k] = in[k] > 0.0 ? dout[k] : 0.0;
        break;
      case LayerKind::Sigmoid:
        for (size_t k = 0; k < in.size(); ++k) din[k] = dout[k] * out[k] * (1.0 - out[k]);
        break;
      case LayerKind::GlobalAvgPool:
        for (int c = 0; c < l.in_ch; ++c) {
          const double g = dout[c] / l.in_len;
          for (int x = 0; x < l.in_len; ++x) din[static_cast<size_t>(x) * l.in_ch + c] = g;
        }
        break;
      case LayerKind::Flatten:
        din = dout;
        break;
      case LayerKind::Dense: {
        const int D = l.in_len * l.in_ch;
        for (int u = 0; u < l.out_ch; ++u) {
          const double g = dout[u];
          grads.gb[ii][u] += g;
          const double* w = &l.W[static_cast<size_t>(u) * D];
          double* gw = &grads.gW[ii][static_cast<size_t>(u) * D];
          for (int d = 0; d < D; ++d) {
            din[d] += w[d] * g;
            gw[d] += in[d] * g;
          }
        }
        break;
      }
    }
    dout.swap(din);
  }
}

// ---- losses ----

enum class LossKind { BinaryCrossEntropy, LogCosh };

inline constexpr double kBceEps = 1e-7;

inline double loss_bce(double p, double t) {
  p = std::clamp(p, kBceEps, 1.0 - kBceEps);
  return -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
}
inline double bce_grad(double p, double t) {
  p = std::clamp(p, kBceEps, 1.0 - kBceEps);
  return (p - t) / (p * (1.0 - p));
}

// ln(cosh(x)) evaluated as |x| + ln((1 + e^{-2|x|}) / 2) so large residuals
// do not overflow.
inline double log_cosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - M_LN2;
}
inline double loss_logcosh(std::span<const double> p, std::span<const double> t) {
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) acc += log_cosh(p[i] - t[i]);
  return acc;
}
inline void logcosh_grad(std::span<const double> p, std::span<const double> t,
                         std::vector<double>& g) {
  g.resize(p.size());
  for (size_t i = 0; i < p.size(); ++i) g[i] = std::tanh(p[i] - t[i]);
}

// ---- optimizer ----

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_step(Model& m, const Gradients& grads, double learning_rate,
                      const AdamConfig& cfg = {}) {
  const int64_t t = m.adam_steps() + 1;
  m.set_adam_steps(t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t i = 0; i < m.layers().size(); ++i) {
    Layer& l = m.layers()[i];
    if (l.W.empty()) continue;
    auto update = [&](std::vector<double>& p, std::vector<double>& mo,
                      std::vector<double>& vo, const std::vector<double>& g) {
      for (size_t k = 0; k < p.size(); ++k) {
        mo[k] = cfg.beta1 * mo[k] + (1.0 - cfg.beta1) * g[k];
        vo[k] = cfg.beta2 * vo[k] + (1.0 - cfg.beta2) * g[k] * g[k];
        const double mhat = mo[k] / bc1;
        const double vhat = vo[k] / bc2;
        p[k] -= learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
      }
    };
    update(l.W, l.mW, l.vW, grads.gW[i]);
    update(l.b, l.mb, l.vb, grads.gb[i]);
  }
}

}  // namespace sapg::nn
