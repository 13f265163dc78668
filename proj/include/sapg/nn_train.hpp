#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sapg/nn.hpp"
#include "sapg/rng.hpp"

namespace sapg::nn {

struct TrainConfig {
  double learning_rate = 1e-4;
  double validation_split = 0.2;
  int batch_size = 64;
  int max_epochs = 200;
  int patience = 10;  // epochs without val-loss improvement before stopping
  uint64_t rng_seed = 0;
  // Deterministic per-epoch subsampling; 0 disables the cap.
  int max_epoch_samples = 0;
  int max_val_samples = 0;
  // Classification only: cap negatives at this multiple of the positives.
  double negative_ratio = 3.0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(validation_split > 0.0 && validation_split < 1.0))
      throw std::invalid_argument("TrainConfig: validation_split must be in (0,1)");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (max_epochs < 1 || patience < 1)
      throw std::invalid_argument("TrainConfig: max_epochs and patience must be >= 1");
  }
};

// One training example: borrowed pointers into caller-owned storage.
struct DataView {
  const float* x;   // input_len * input_channels
  const double* y;  // output_size
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;  // classification
  double val_mse = 0.0;       // regression, mean over components
};

struct TrainResult {
  Model model;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

namespace detail {

// Gradient accumulation is split into a fixed number of chunks that are
// summed in chunk order, so the result does not depend on the thread count.
inline constexpr int kGradChunks = 8;

struct BatchScratch {
  std::vector<Activations> ws;
  std::vector<Gradients> grads;
  std::vector<std::vector<double>> dloss;

  void prepare(const Model& m) {
    ws.resize(kGradChunks);
    grads.resize(kGradChunks);
    dloss.resize(kGradChunks);
    for (auto& g : grads) g.prepare(m);
  }
};

inline double sample_loss_and_grad(const Model& m, const DataView& d,
                                   LossKind loss, Activations& ws,
                                   std::vector<double>& dloss) {
  std::vector<double> input(static_cast<size_t>(m.input_len()) * m.input_channels());
  for (size_t i = 0; i < input.size(); ++i) input[i] = d.x[i];
  forward(m, input.data(), ws);
  const std::vector<double>& out = ws.output();
  if (loss == LossKind::BinaryCrossEntropy) {
    dloss.assign(1, bce_grad(out[0], d.y[0]));
    return loss_bce(out[0], d.y[0]);
  }
  logcosh_grad(out, std::span<const double>(d.y, out.size()), dloss);
  return loss_logcosh(out, std::span<const double>(d.y, out.size()));
}

inline double forward_loss(const Model& m, const DataView& d, LossKind loss,
                           Activations& ws) {
  std::vector<double> input(static_cast<size_t>(m.input_len()) * m.input_channels());
  for (size_t i = 0; i < input.size(); ++i) input[i] = d.x[i];
  forward(m, input.data(), ws);
  const std::vector<double>& out = ws.output();
  if (loss == LossKind::BinaryCrossEntropy) return loss_bce(out[0], d.y[0]);
  return loss_logcosh(out, std::span<const double>(d.y, out.size()));
}

}  // namespace detail

// Minimizes the mean batch loss over one gradient step.
inline double train_batch(Model& m, std::span<const DataView> batch, LossKind loss,
                          double learning_rate, detail::BatchScratch& scratch,
                          Gradients& total) {
  const size_t n = batch.size();
  double losses[detail::kGradChunks] = {0.0};
  const size_t per = (n + detail::kGradChunks - 1) / detail::kGradChunks;
#pragma omp parallel for schedule(static, 1)
  for (int c = 0; c < detail::kGradChunks; ++c) {
    scratch.grads[c].zero();
    double acc = 0.0;
    const size_t lo = c * per;
    const size_t hi = std::min(n, lo + per);
    for (size_t i = lo; i < hi && lo < n; ++i) {
      acc += detail::sample_loss_and_grad(m, batch[i], loss, scratch.ws[c],
                                          scratch.dloss[c]);
      backward(m, scratch.ws[c], scratch.dloss[c], scratch.grads[c]);
    }
    losses[c] = acc;
  }
  total.zero();
  double loss_sum = 0.0;
  for (int c = 0; c < detail::kGradChunks; ++c) {
    total.add(scratch.grads[c]);
    loss_sum += losses[c];
  }
  total.scale(1.0 / static_cast<double>(n));
  adam_step(m, total, learning_rate);
  return loss_sum / static_cast<double>(n);
}

// Deterministic training loop: seeded split and shuffles, early stopping on
// the validation loss, returns the best-epoch parameters.
inline TrainResult train(Model model, std::span<const DataView> data,
                         const TrainConfig& cfg, LossKind loss) {
  cfg.validate();
  Rng rng(Rng::derive(cfg.rng_seed, "train"));

  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const size_t val_count =
      static_cast<size_t>(std::floor(cfg.validation_split * data.size()));
  const size_t train_count = data.size() - val_count;
  if (train_count < 2 || val_count < 1)
    throw std::invalid_argument("train: not enough samples after split");

  std::vector<size_t> train_idx(order.begin(), order.begin() + train_count);
  std::vector<size_t> val_idx(order.begin() + train_count, order.end());
  if (cfg.max_val_samples > 0 && val_idx.size() > static_cast<size_t>(cfg.max_val_samples))
    val_idx.resize(cfg.max_val_samples);

  // Classification: index positives and negatives once.
  std::vector<size_t> pos, neg;
  if (loss == LossKind::BinaryCrossEntropy) {
    for (size_t i : train_idx) (data[i].y[0] > 0.5 ? pos : neg).push_back(i);
  }

  detail::BatchScratch scratch;
  scratch.prepare(model);
  Gradients total;
  total.prepare(model);

  TrainResult res;
  res.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<Layer> best_layers = model.layers();
  int64_t best_steps = 0;
  int since_best = 0;

  std::vector<size_t> epoch_idx;
  std::vector<DataView> batch(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    // Assemble this epoch's sample list.
    epoch_idx.clear();
    if (loss == LossKind::BinaryCrossEntropy && !pos.empty()) {
      rng.shuffle(pos);
      rng.shuffle(neg);
      const size_t n_neg = std::min(
          neg.size(), static_cast<size_t>(cfg.negative_ratio * pos.size()));
      epoch_idx.assign(pos.begin(), pos.end());
      epoch_idx.insert(epoch_idx.end(), neg.begin(), neg.begin() + n_neg);
    } else {
      epoch_idx = train_idx;
    }
    rng.shuffle(epoch_idx);
    if (cfg.max_epoch_samples > 0 &&
        epoch_idx.size() > static_cast<size_t>(cfg.max_epoch_samples))
      epoch_idx.resize(cfg.max_epoch_samples);

    double train_loss = 0.0;
    size_t batches = 0;
    for (size_t off = 0; off + 1 <= epoch_idx.size(); off += cfg.batch_size) {
      const size_t nb = std::min<size_t>(cfg.batch_size, epoch_idx.size() - off);
      batch.resize(nb);
      for (size_t i = 0; i < nb; ++i) batch[i] = data[epoch_idx[off + i]];
      train_loss += train_batch(model, batch, loss, cfg.learning_rate, scratch, total);
      ++batches;
    }
    train_loss /= std::max<size_t>(1, batches);

    // Validation pass (forward only), chunked like training for determinism.
    double val_loss = 0.0;
    size_t val_correct = 0;
    double val_sq = 0.0;
    {
      const size_t n = val_idx.size();
      const size_t per = (n + detail::kGradChunks - 1) / detail::kGradChunks;
      double losses[detail::kGradChunks] = {0.0};
      double sq[detail::kGradChunks] = {0.0};
      size_t correct[detail::kGradChunks] = {0};
#pragma omp parallel for schedule(static, 1)
      for (int c = 0; c < detail::kGradChunks; ++c) {
        const size_t lo = c * per;
        const size_t hi = std::min(n, lo + per);
        for (size_t i = lo; i < hi && lo < n; ++i) {
          const DataView& d = data[val_idx[i]];
          losses[c] += detail::forward_loss(model, d, loss, scratch.ws[c]);
          const std::vector<double>& out = scratch.ws[c].output();
          if (loss == LossKind::BinaryCrossEntropy) {
            if ((out[0] >= 0.5) == (d.y[0] > 0.5)) ++correct[c];
          } else {
            for (size_t k = 0; k < out.size(); ++k) {
              const double e = out[k] - d.y[k];
              sq[c] += e * e;
            }
          }
        }
      }
      for (int c = 0; c < detail::kGradChunks; ++c) {
        val_loss += losses[c];
        val_sq += sq[c];
        val_correct += correct[c];
      }
      val_loss /= static_cast<double>(n);
      val_sq /= static_cast<double>(n) * model.output_size();
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = train_loss;
    st.val_loss = val_loss;
    st.val_accuracy = val_idx.empty() ? 0.0
                                      : static_cast<double>(val_correct) /
                                            static_cast<double>(val_idx.size());
    st.val_mse = val_sq;
    res.history.push_back(st);

    if (val_loss < res.best_val_loss) {
      res.best_val_loss = val_loss;
      res.best_epoch = epoch;
      best_layers = model.layers();
      best_steps = model.adam_steps();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  model.layers() = std::move(best_layers);
  model.set_adam_steps(best_steps);
  res.model = std::move(model);
  return res;
}

}  // namespace sapg::nn
