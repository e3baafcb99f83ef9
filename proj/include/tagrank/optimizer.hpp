#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tagrank/core.hpp"
#include "tagrank/losses.hpp"
#include "tagrank/rng.hpp"
#include "tagrank/scorer.hpp"
#include "tagrank/text_io.hpp"

namespace tagrank {

struct TrainConfig {
  LossKind loss = LossKind::softmax;
  double learning_rate = 0.002;
  double momentum = 0.9;
  int batch_size = 32;
  double decay_factor = 0.5;  // multiplies the rate at each decay boundary
  int decay_every = 10;       // epochs per staircase step
  int epochs = 30;
  std::vector<int> hidden = {256};
  double dropout_ratio = 0.6;
  int warp_max_trials = 0;  // 0: budget = the example's negative count
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  long long step = 0;       // optimizer steps taken so far
  double lr = 0.0;          // rate used during this epoch
  double mean_loss = 0.0;   // epoch loss sum / dataset size
  double elapsed_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  ScorerParams params;
  TrainLog log;
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.learning_rate < 0.0)
    throw ValidationError("train: learning_rate must be >= 0");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw ValidationError("train: momentum must be in [0, 1)");
  if (cfg.batch_size < 1)
    throw ValidationError("train: batch_size must be >= 1");
  if (cfg.decay_factor <= 0.0 || cfg.decay_factor > 1.0)
    throw ValidationError("train: decay_factor must be in (0, 1]");
  if (cfg.decay_every < 1)
    throw ValidationError("train: decay_every must be >= 1");
  if (cfg.epochs < 0) throw ValidationError("train: epochs must be >= 0");
  for (int h : cfg.hidden)
    if (h < 1) throw ValidationError("train: hidden sizes must be >= 1");
  if (cfg.dropout_ratio < 0.0 || cfg.dropout_ratio >= 1.0)
    throw ValidationError("train: dropout_ratio must be in [0, 1)");
  if (cfg.warp_max_trials < 0)
    throw ValidationError("train: warp_max_trials must be >= 0");
}

// Piecewise-constant decay: the rate drops by decay_factor once per
// decay_every epochs and is constant in between.
inline double staircase_lr(const TrainConfig& cfg, int epoch) {
  return cfg.learning_rate *
         std::pow(cfg.decay_factor, epoch / cfg.decay_every);
}

inline void add_grads(ParamGrads& acc, const ParamGrads& g) {
  if (acc.size() != g.size())
    throw ValidationError("add_grads: layer count mismatch");
  for (std::size_t l = 0; l < acc.size(); ++l) {
    if (acc[l].weights.size() != g[l].weights.size() ||
        acc[l].bias.size() != g[l].bias.size())
      throw ValidationError("add_grads: shape mismatch at layer " +
                            std::to_string(l));
    for (std::size_t i = 0; i < acc[l].weights.size(); ++i)
      acc[l].weights[i] += g[l].weights[i];
    for (std::size_t i = 0; i < acc[l].bias.size(); ++i)
      acc[l].bias[i] += g[l].bias[i];
  }
}

inline void scale_grads(ParamGrads& g, double s) {
  for (Layer& ly : g) {
    for (double& w : ly.weights) w *= s;
    for (double& b : ly.bias) b *= s;
  }
}

// Classic momentum: v <- momentum * v - lr * g; theta <- theta + v.
inline void sgd_momentum_step(ScorerParams& params, ParamGrads& velocity,
                              const ParamGrads& grads, double lr,
                              double momentum) {
  if (velocity.size() != params.layers.size() ||
      grads.size() != params.layers.size())
    throw ValidationError("sgd_momentum_step: layer count mismatch");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Layer& p = params.layers[l];
    Layer& v = velocity[l];
    const Layer& g = grads[l];
    if (v.weights.size() != p.weights.size() ||
        g.weights.size() != p.weights.size() ||
        v.bias.size() != p.bias.size() || g.bias.size() != p.bias.size())
      throw ValidationError("sgd_momentum_step: shape mismatch at layer " +
                            std::to_string(l));
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      v.weights[i] = momentum * v.weights[i] - lr * g.weights[i];
      p.weights[i] += v.weights[i];
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) {
      v.bias[i] = momentum * v.bias[i] - lr * g.bias[i];
      p.bias[i] += v.bias[i];
    }
  }
}

inline std::vector<int> architecture_for(const Dataset& ds,
                                         const TrainConfig& cfg) {
  std::vector<int> arch;
  arch.reserve(cfg.hidden.size() + 2);
  arch.push_back(ds.dim);
  for (int h : cfg.hidden) arch.push_back(h);
  arch.push_back(ds.num_tags);
  return arch;
}

// The exact parameters train() starts from: the first draw off the run seed
// feeds initialization, the rest of the stream drives shuffles, dropout, and
// negative sampling.
inline ScorerParams initial_params_for(const Dataset& ds,
                                       const TrainConfig& cfg) {
  Rng rng(cfg.seed);
  return init_params(architecture_for(ds, cfg), cfg.dropout_ratio,
                     rng.next_u64());
}

inline LossResult compute_loss(LossKind kind, const ScoreVector& scores,
                               const LabelVector& labels,
                               const WarpConfig& wcfg, Rng& rng) {
  switch (kind) {
    case LossKind::softmax: return softmax_kl_loss(scores, labels);
    case LossKind::pairwise: return pairwise_rank_loss(scores, labels);
    case LossKind::warp: return warp_loss(scores, labels, wcfg, rng);
  }
  throw ValidationError("compute_loss: unknown loss kind");
}

// Mini-batch SGD with momentum and staircase rate decay. Per epoch: one
// seeded shuffle, batches taken in order, per-example gradients averaged
// over the batch actually taken (the final short batch divides by its own
// size), one momentum step per batch. Equal seeds give bit-identical
// parameters. Aborts with NumericError the moment a score or loss value
// goes non-finite.
inline TrainResult train(
    const Dataset& ds, const TrainConfig& cfg,
    const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  validate(ds);
  if (ds.examples.empty())
    throw ValidationError("train: dataset has no examples");
  validate_train_config(cfg);

  Rng rng(cfg.seed);
  ScorerParams params = init_params(architecture_for(ds, cfg),
                                    cfg.dropout_ratio, rng.next_u64());
  ParamGrads velocity = zero_grads_like(params);

  const int n = static_cast<int>(ds.examples.size());
  std::vector<LabelVector> labels;
  labels.reserve(ds.examples.size());
  for (const Example& ex : ds.examples)
    labels.push_back(label_vector_from(ex, ds.num_tags));

  const WarpConfig wcfg{cfg.warp_max_trials, cfg.seed};
  TrainResult out;
  long long step = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = staircase_lr(cfg, epoch);
    const std::vector<int> order = rng.permutation(n);
    double loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int m = std::min(cfg.batch_size, n - start);
      ParamGrads batch = zero_grads_like(params);
      for (int b = 0; b < m; ++b) {
        const int idx = order[static_cast<std::size_t>(start + b)];
        const Example& ex = ds.examples[static_cast<std::size_t>(idx)];
        ForwardResult fr = forward(params, ex.features, Mode::train, rng);
        for (double s : fr.scores)
          if (!std::isfinite(s))
            throw NumericError("train: non-finite score at epoch " +
                               std::to_string(epoch) + ", example " +
                               std::to_string(idx));
        const LossResult lres =
            compute_loss(cfg.loss, fr.scores,
                         labels[static_cast<std::size_t>(idx)], wcfg, rng);
        if (!std::isfinite(lres.value))
          throw NumericError("train: non-finite loss at epoch " +
                             std::to_string(epoch) + ", example " +
                             std::to_string(idx));
        loss_sum += lres.value;
        add_grads(batch, backward(params, fr.trace, lres.grad));
      }
      scale_grads(batch, 1.0 / static_cast<double>(m));
      sgd_momentum_step(params, velocity, batch, lr, cfg.momentum);
      ++step;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const EpochRecord rec{epoch, step, lr,
                          loss_sum / static_cast<double>(n), elapsed};
    out.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  out.params = std::move(params);
  return out;
}

// Log file keeps only the run-deterministic fields, so reruns of the same
// seeded command produce byte-identical files. Wall-clock timings stay on
// the progress stream.
inline void write_train_log(const TrainLog& log, const std::string& path) {
  std::string out = "train-log v1\n";
  for (const EpochRecord& r : log.epochs)
    out += "epoch=" + std::to_string(r.epoch) +
           " step=" + std::to_string(r.step) +
           " lr=" + detail::fmt17(r.lr) +
           " mean_loss=" + detail::fmt17(r.mean_loss) + "\n";
  detail::write_file_atomic(path, out);
}

}  // namespace tagrank
