#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tagrank/core.hpp"
#include "tagrank/rng.hpp"
#include "tagrank/text_io.hpp"

namespace tagrank {

struct KnnConfig {
  int k = 50;
  double sigma = 1.0;  // bandwidth of the distance kernel
};

inline void validate_knn_config(const KnnConfig& cfg, int train_size) {
  if (cfg.k < 1)
    throw ValidationError("knn: k must be >= 1, got " + std::to_string(cfg.k));
  if (cfg.k > train_size)
    throw ValidationError("knn: k = " + std::to_string(cfg.k) +
                          " exceeds training set size " +
                          std::to_string(train_size));
  if (!(cfg.sigma > 0.0))
    throw ValidationError("knn: sigma must be > 0");
}

// Per-tag posterior from the k nearest training examples:
//   score[t] = sum_{j in kNN(q)} (1/k) * exp(-||q - x_j||^2 / sigma) * y_j[t]
// Distance ties break toward the lower training index. Every entry lands in
// [0, 1] since each of the at-most-k kernel terms is at most 1/k.
inline ScoreVector knn_posterior(const Dataset& train,
                                 const std::vector<double>& query,
                                 const KnnConfig& cfg) {
  validate(train);
  if (train.examples.empty())
    throw ValidationError("knn: empty training set");
  validate_knn_config(cfg, static_cast<int>(train.examples.size()));
  if (query.size() != static_cast<std::size_t>(train.dim))
    throw ValidationError("knn: query has " + std::to_string(query.size()) +
                          " features, expected " + std::to_string(train.dim));

  const std::size_t n = train.examples.size();
  std::vector<std::pair<double, int>> by_dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& x = train.examples[i].features;
    double d2 = 0.0;
    for (std::size_t f = 0; f < query.size(); ++f) {
      const double diff = query[f] - x[f];
      d2 += diff * diff;
    }
    by_dist[i] = {d2, static_cast<int>(i)};
  }
  const std::size_t k = static_cast<std::size_t>(cfg.k);
  // (distance, index) pairs are all distinct, so the order is total and the
  // selected prefix matches a full sort exactly.
  std::nth_element(by_dist.begin(), by_dist.begin() + (k - 1), by_dist.end());
  std::sort(by_dist.begin(), by_dist.begin() + k);

  ScoreVector scores(static_cast<std::size_t>(train.num_tags), 0.0);
  const double inv_k = 1.0 / static_cast<double>(cfg.k);
  for (std::size_t j = 0; j < k; ++j) {
    const double w = inv_k * std::exp(-by_dist[j].first / cfg.sigma);
    const Example& ex =
        train.examples[static_cast<std::size_t>(by_dist[j].second)];
    for (int lbl : ex.labels) scores[static_cast<std::size_t>(lbl)] += w;
  }
  return scores;
}

struct SvmConfig {
  double C = 2.0;  // hinge penalty weight in J = 0.5*||w||^2 + C*sum(hinge)
  int epochs = 100;
  double learning_rate = 1.0;  // scales the 1/t step schedule
  std::uint64_t seed = 0;
};

// One independent linear separator per tag (one-vs-all).
struct SvmModel {
  int num_tags = 0;
  int dim = 0;
  std::vector<std::vector<double>> weights;  // num_tags rows of dim
  std::vector<double> bias;                  // num_tags
};

inline void validate_svm_config(const SvmConfig& cfg) {
  if (!(cfg.C > 0.0)) throw ValidationError("svm: C must be > 0");
  if (cfg.epochs < 0) throw ValidationError("svm: epochs must be >= 0");
  if (!(cfg.learning_rate > 0.0))
    throw ValidationError("svm: learning_rate must be > 0");
}

inline void validate_svm_model(const SvmModel& m) {
  if (m.num_tags < 1 || m.dim < 1)
    throw ValidationError("svm: model num_tags and dim must be >= 1");
  if (m.weights.size() != static_cast<std::size_t>(m.num_tags) ||
      m.bias.size() != static_cast<std::size_t>(m.num_tags))
    throw ValidationError("svm: model row count does not match num_tags");
  for (const auto& w : m.weights)
    if (w.size() != static_cast<std::size_t>(m.dim))
      throw ValidationError("svm: weight row does not match dim");
}

// Primal objective for one tag: 0.5*||w||^2 + C * sum_i max(0, 1 - t_i*(w.x_i + b)).
inline double svm_objective(const std::vector<double>& w, double b,
                            const Dataset& ds, const std::vector<int>& targets,
                            double C) {
  double obj = 0.0;
  for (double v : w) obj += v * v;
  obj *= 0.5;
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const std::vector<double>& x = ds.examples[i].features;
    double m = b;
    for (std::size_t f = 0; f < x.size(); ++f) m += w[f] * x[f];
    const double h = 1.0 - static_cast<double>(targets[i]) * m;
    if (h > 0.0) obj += C * h;
  }
  return obj;
}

namespace detail {

// Stochastic subgradient descent on the scaled primal
//   G(w, b) = (lambda/2)*||w||^2 + (1/n)*sum hinge,  lambda = 1/(n*C),
// which shares its minimizer with J = n*C*G. Steps follow a 1/t schedule
// with a burn-in offset of 2n so early steps stay below the scale of w*.
// The returned pair is the best iterate by full objective J, checked once
// per epoch and seeded with the all-zero start (J(0,0) = C*n), so the
// result never does worse than predicting the margin boundary itself.
inline void svm_train_one(const Dataset& ds, const std::vector<int>& targets,
                          const SvmConfig& cfg, Rng& rng,
                          std::vector<double>& best_w, double& best_b) {
  const int n = static_cast<int>(ds.examples.size());
  const double lambda = 1.0 / (static_cast<double>(n) * cfg.C);
  std::vector<double> w(static_cast<std::size_t>(ds.dim), 0.0);
  double b = 0.0;
  best_w = w;
  best_b = b;
  double best_obj = svm_objective(w, b, ds, targets, cfg.C);
  long long t = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = rng.permutation(n);
    for (int oi = 0; oi < n; ++oi) {
      ++t;
      const std::size_t i = static_cast<std::size_t>(order[oi]);
      const std::vector<double>& x = ds.examples[i].features;
      const double y = static_cast<double>(targets[i]);
      const double eta =
          cfg.learning_rate / (lambda * static_cast<double>(t + 2 * n));
      double m = b;
      for (std::size_t f = 0; f < x.size(); ++f) m += w[f] * x[f];
      const double shrink = 1.0 - eta * lambda;
      for (double& v : w) v *= shrink;
      if (y * m < 1.0) {
        // sampled hinge subgradient estimates the (1/n)*sum term unbiasedly
        const double step = eta * y;
        for (std::size_t f = 0; f < x.size(); ++f) w[f] += step * x[f];
        b += step;
      }
    }
    const double obj = svm_objective(w, b, ds, targets, cfg.C);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_b = b;
    }
  }
}

}  // namespace detail

// Trains one separator per tag against all other examples. Tags with no
// positive training example get w = 0, b = -1 so they score strictly below
// anything a trained separator can say at the margin. Per-tag runs draw
// from independent seeded streams, so results do not depend on tag order.
inline SvmModel svm_train(const Dataset& ds, const SvmConfig& cfg) {
  validate(ds);
  if (ds.examples.empty())
    throw ValidationError("svm: dataset has no examples");
  validate_svm_config(cfg);
  SvmModel model;
  model.num_tags = ds.num_tags;
  model.dim = ds.dim;
  model.weights.assign(static_cast<std::size_t>(ds.num_tags),
                       std::vector<double>(static_cast<std::size_t>(ds.dim), 0.0));
  model.bias.assign(static_cast<std::size_t>(ds.num_tags), 0.0);

  std::vector<int> targets(ds.examples.size());
  for (int tag = 0; tag < ds.num_tags; ++tag) {
    int positives = 0;
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
      const auto& lbls = ds.examples[i].labels;
      const bool pos = std::binary_search(lbls.begin(), lbls.end(), tag);
      targets[i] = pos ? 1 : -1;
      positives += pos ? 1 : 0;
    }
    if (positives == 0) {
      model.bias[static_cast<std::size_t>(tag)] = -1.0;
      continue;
    }
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(tag)));
    detail::svm_train_one(ds, targets, cfg, rng,
                          model.weights[static_cast<std::size_t>(tag)],
                          model.bias[static_cast<std::size_t>(tag)]);
  }
  return model;
}

inline ScoreVector svm_scores(const SvmModel& model,
                              const std::vector<double>& query) {
  validate_svm_model(model);
  if (query.size() != static_cast<std::size_t>(model.dim))
    throw ValidationError("svm: query has " + std::to_string(query.size()) +
                          " features, expected " + std::to_string(model.dim));
  ScoreVector scores(static_cast<std::size_t>(model.num_tags));
  for (int tag = 0; tag < model.num_tags; ++tag) {
    const std::vector<double>& w = model.weights[static_cast<std::size_t>(tag)];
    double s = model.bias[static_cast<std::size_t>(tag)];
    for (std::size_t f = 0; f < query.size(); ++f) s += w[f] * query[f];
    scores[static_cast<std::size_t>(tag)] = s;
  }
  return scores;
}

inline void save_svm(const SvmModel& model, const std::string& path) {
  validate_svm_model(model);
  std::string out = "svm-checkpoint v1\ntags " +
                    std::to_string(model.num_tags) + "\ndim " +
                    std::to_string(model.dim) + "\n";
  for (int tag = 0; tag < model.num_tags; ++tag) {
    out += "w";
    for (double v : model.weights[static_cast<std::size_t>(tag)])
      out += " " + detail::fmt17(v);
    out += " b " + detail::fmt17(model.bias[static_cast<std::size_t>(tag)]);
    out += "\n";
  }
  detail::write_file_atomic(path, out);
}

inline SvmModel load_svm(const std::string& path) {
  auto rd = detail::LineReader::open(path);
  if (rd.next("header") != "svm-checkpoint v1")
    rd.fail("expected 'svm-checkpoint v1'");
  auto tag_toks = detail::tokenize(rd.next("tags line"));
  if (tag_toks.size() != 2 || tag_toks[0] != "tags")
    rd.fail("expected 'tags <count>'");
  auto dim_toks = detail::tokenize(rd.next("dim line"));
  if (dim_toks.size() != 2 || dim_toks[0] != "dim")
    rd.fail("expected 'dim <count>'");
  SvmModel model;
  model.num_tags = detail::to_int(tag_toks[1], path + ": tags");
  model.dim = detail::to_int(dim_toks[1], path + ": dim");
  if (model.num_tags < 1 || model.dim < 1)
    rd.fail("tags and dim must be >= 1");
  for (int tag = 0; tag < model.num_tags; ++tag) {
    auto toks = detail::tokenize(rd.next("weight row"));
    if (toks.size() != static_cast<std::size_t>(model.dim) + 3 ||
        toks[0] != "w" || toks[static_cast<std::size_t>(model.dim) + 1] != "b")
      rd.fail("expected 'w <" + std::to_string(model.dim) + " values> b <value>'");
    std::vector<double> w(static_cast<std::size_t>(model.dim));
    for (int f = 0; f < model.dim; ++f) {
      w[static_cast<std::size_t>(f)] =
          detail::to_double(toks[static_cast<std::size_t>(f) + 1], path + ": weight");
      if (!std::isfinite(w[static_cast<std::size_t>(f)]))
        rd.fail("non-finite weight");
    }
    const double b = detail::to_double(toks[static_cast<std::size_t>(model.dim) + 2],
                                       path + ": bias");
    if (!std::isfinite(b)) rd.fail("non-finite bias");
    model.weights.push_back(std::move(w));
    model.bias.push_back(b);
  }
  if (!rd.done()) rd.fail("trailing content after checkpoint");
  validate_svm_model(model);
  return model;
}

}  // namespace tagrank
