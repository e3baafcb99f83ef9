#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tagrank/core.hpp"
#include "tagrank/rng.hpp"
#include "tagrank/text_io.hpp"

namespace tagrank {

// One dense layer, weights row-major: weights[r * in + c] maps input c to
// output r.
struct Layer {
  int out = 0;
  int in = 0;
  std::vector<double> weights;  // out * in
  std::vector<double> bias;     // out
};

// Fully connected scorer: affine layers with ReLU on every hidden layer and
// a linear output layer, one output per tag. Hidden activations are dropped
// with probability dropout_ratio in train mode and scaled by 1/(1 - p) when
// kept (inverted dropout), so eval mode needs no rescaling.
struct ScorerParams {
  std::vector<int> architecture;  // [dim, hidden..., num_tags]
  double dropout_ratio = 0.0;
  std::vector<Layer> layers;      // architecture.size() - 1 entries
};

enum class Mode { train, eval };

// Everything backward() needs to replay one forward pass.
struct ForwardTrace {
  Mode mode = Mode::eval;
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // affine outputs per layer
  std::vector<std::vector<double>> post;  // layer outputs as consumed onward
  std::vector<std::vector<std::uint8_t>> masks;  // per hidden layer
};

struct ForwardResult {
  ScoreVector scores;
  ForwardTrace trace;
};

// Gradient container, same shapes as ScorerParams::layers.
using ParamGrads = std::vector<Layer>;

inline void validate_params(const ScorerParams& p) {
  if (p.architecture.size() < 2)
    throw ValidationError("scorer: architecture needs input and output sizes");
  for (int n : p.architecture)
    if (n < 1)
      throw ValidationError("scorer: architecture entry " + std::to_string(n) +
                            " must be >= 1");
  if (p.dropout_ratio < 0.0 || p.dropout_ratio >= 1.0)
    throw ValidationError("scorer: dropout_ratio must be in [0, 1), got " +
                          detail::fmt17(p.dropout_ratio));
  if (p.layers.size() != p.architecture.size() - 1)
    throw ValidationError("scorer: layer count does not match architecture");
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const Layer& ly = p.layers[l];
    if (ly.in != p.architecture[l] || ly.out != p.architecture[l + 1] ||
        ly.weights.size() !=
            static_cast<std::size_t>(ly.in) * static_cast<std::size_t>(ly.out) ||
        ly.bias.size() != static_cast<std::size_t>(ly.out))
      throw ValidationError("scorer: layer " + std::to_string(l) +
                            " shape does not match architecture");
  }
}

// Weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)) drawn row-major,
// biases zero. Equal seeds give bit-identical parameters.
inline ScorerParams init_params(const std::vector<int>& architecture,
                                double dropout_ratio, std::uint64_t seed) {
  ScorerParams p;
  p.architecture = architecture;
  p.dropout_ratio = dropout_ratio;
  if (architecture.size() >= 2) {
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < architecture.size(); ++l) {
      Layer ly;
      ly.in = architecture[l];
      ly.out = architecture[l + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(ly.in));
      ly.weights.resize(static_cast<std::size_t>(ly.in) *
                        static_cast<std::size_t>(ly.out));
      for (double& w : ly.weights) w = rng.uniform(-bound, bound);
      ly.bias.assign(static_cast<std::size_t>(ly.out), 0.0);
      p.layers.push_back(std::move(ly));
    }
  }
  validate_params(p);
  return p;
}

inline ParamGrads zero_grads_like(const ScorerParams& p) {
  ParamGrads g;
  g.reserve(p.layers.size());
  for (const Layer& ly : p.layers) {
    Layer z;
    z.in = ly.in;
    z.out = ly.out;
    z.weights.assign(ly.weights.size(), 0.0);
    z.bias.assign(ly.bias.size(), 0.0);
    g.push_back(std::move(z));
  }
  return g;
}

namespace detail {

inline std::vector<double> affine(const Layer& ly,
                                  const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(ly.out));
  for (int r = 0; r < ly.out; ++r) {
    const double* wrow =
        ly.weights.data() + static_cast<std::size_t>(r) * ly.in;
    double acc = ly.bias[static_cast<std::size_t>(r)];
    for (int c = 0; c < ly.in; ++c) acc += wrow[c] * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
  return y;
}

// Shared forward pass. In train mode exactly one of rng / given_masks is
// non-null; masks are drawn (or taken) for every hidden unit regardless of
// its activation so the random stream does not depend on parameter values.
inline ForwardResult forward_impl(
    const ScorerParams& p, const std::vector<double>& features, Mode mode,
    Rng* rng, const std::vector<std::vector<std::uint8_t>>* given_masks) {
  validate_params(p);
  if (features.size() != static_cast<std::size_t>(p.architecture.front()))
    throw ValidationError("scorer: got " + std::to_string(features.size()) +
                          " features, expected " +
                          std::to_string(p.architecture.front()));
  const std::size_t n_layers = p.layers.size();
  const std::size_t n_hidden = n_layers - 1;
  if (mode == Mode::train && given_masks &&
      given_masks->size() != n_hidden)
    throw ValidationError("scorer: mask count does not match hidden layers");

  ForwardTrace trace;
  trace.mode = mode;
  trace.input = features;
  trace.pre.reserve(n_layers);
  trace.post.reserve(n_layers);
  const double keep = 1.0 - p.dropout_ratio;

  const std::vector<double>* cur = &trace.input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    trace.pre.push_back(affine(p.layers[l], *cur));
    std::vector<double> out = trace.pre.back();
    if (l < n_hidden) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;  // ReLU
      if (mode == Mode::train) {
        std::vector<std::uint8_t> mask(out.size());
        for (std::size_t u = 0; u < out.size(); ++u) {
          bool kept;
          if (given_masks) {
            if ((*given_masks)[l].size() != out.size())
              throw ValidationError("scorer: mask size mismatch at layer " +
                                    std::to_string(l));
            kept = (*given_masks)[l][u] != 0;
          } else {
            kept = rng->uniform() >= p.dropout_ratio;
          }
          mask[u] = kept ? 1 : 0;
          out[u] = kept ? out[u] / keep : 0.0;
        }
        trace.masks.push_back(std::move(mask));
      }
    }
    trace.post.push_back(std::move(out));
    cur = &trace.post.back();
  }
  ForwardResult res;
  res.scores = trace.post.back();
  res.trace = std::move(trace);
  return res;
}

}  // namespace detail

inline ForwardResult forward(const ScorerParams& p,
                             const std::vector<double>& features, Mode mode,
                             Rng& rng) {
  return detail::forward_impl(p, features, mode, &rng, nullptr);
}

// Train-mode forward with caller-supplied dropout masks. Lets tests and
// finite-difference checks replay the exact stochastic pass.
inline ForwardResult forward_masked(
    const ScorerParams& p, const std::vector<double>& features,
    const std::vector<std::vector<std::uint8_t>>& masks) {
  return detail::forward_impl(p, features, Mode::train, nullptr, &masks);
}

// Eval-mode scores without trace bookkeeping.
inline ScoreVector score(const ScorerParams& p,
                         const std::vector<double>& features) {
  validate_params(p);
  if (features.size() != static_cast<std::size_t>(p.architecture.front()))
    throw ValidationError("scorer: got " + std::to_string(features.size()) +
                          " features, expected " +
                          std::to_string(p.architecture.front()));
  std::vector<double> cur = features;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    cur = detail::affine(p.layers[l], cur);
    if (l + 1 < p.layers.size())
      for (double& v : cur) v = v > 0.0 ? v : 0.0;
  }
  return cur;
}

// Backpropagates d(loss)/d(scores) through the traced pass. ReLU passes no
// gradient at exactly zero pre-activation; dropped units pass none, kept
// units scale by 1/(1 - p), mirroring the forward scaling.
inline ParamGrads backward(const ScorerParams& p, const ForwardTrace& trace,
                           const std::vector<double>& grad_scores) {
  validate_params(p);
  const std::size_t n_layers = p.layers.size();
  if (trace.pre.size() != n_layers || trace.post.size() != n_layers ||
      trace.input.size() != static_cast<std::size_t>(p.architecture.front()))
    throw ValidationError("scorer: trace does not match parameters");
  if (trace.mode == Mode::train && trace.masks.size() != n_layers - 1)
    throw ValidationError("scorer: train trace is missing dropout masks");
  if (grad_scores.size() != static_cast<std::size_t>(p.architecture.back()))
    throw ValidationError("scorer: grad_scores size mismatch");

  ParamGrads grads = zero_grads_like(p);
  const double keep = 1.0 - p.dropout_ratio;
  std::vector<double> delta = grad_scores;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Layer& ly = p.layers[l];
    const std::vector<double>& inp = (l == 0) ? trace.input : trace.post[l - 1];
    if (delta.size() != static_cast<std::size_t>(ly.out) ||
        inp.size() != static_cast<std::size_t>(ly.in))
      throw ValidationError("scorer: trace layer " + std::to_string(l) +
                            " shape mismatch");
    Layer& g = grads[l];
    for (int r = 0; r < ly.out; ++r) {
      const double dr = delta[static_cast<std::size_t>(r)];
      g.bias[static_cast<std::size_t>(r)] += dr;
      double* grow = g.weights.data() + static_cast<std::size_t>(r) * ly.in;
      for (int c = 0; c < ly.in; ++c)
        grow[c] += dr * inp[static_cast<std::size_t>(c)];
    }
    if (l == 0) break;
    std::vector<double> prev(static_cast<std::size_t>(ly.in), 0.0);
    for (int r = 0; r < ly.out; ++r) {
      const double dr = delta[static_cast<std::size_t>(r)];
      if (dr == 0.0) continue;
      const double* wrow =
          ly.weights.data() + static_cast<std::size_t>(r) * ly.in;
      for (int c = 0; c < ly.in; ++c)
        prev[static_cast<std::size_t>(c)] += dr * wrow[c];
    }
    const std::size_t h = l - 1;  // hidden layer the delta passes through
    for (std::size_t c = 0; c < prev.size(); ++c) {
      if (trace.mode == Mode::train)
        prev[c] = trace.masks[h][c] ? prev[c] / keep : 0.0;
      prev[c] = trace.pre[h][c] > 0.0 ? prev[c] : 0.0;
    }
    delta = std::move(prev);
  }
  return grads;
}

// Text checkpoint, %.17g throughout so save/load round-trips bit-exactly.
inline void save_scorer(const ScorerParams& p, const std::string& path) {
  validate_params(p);
  std::string out = "scorer-checkpoint v1\narch";
  for (int n : p.architecture) out += " " + std::to_string(n);
  out += "\ndropout " + detail::fmt17(p.dropout_ratio) + "\n";
  for (const Layer& ly : p.layers) {
    for (int r = 0; r < ly.out; ++r) {
      out += "w";
      const double* wrow =
          ly.weights.data() + static_cast<std::size_t>(r) * ly.in;
      for (int c = 0; c < ly.in; ++c) out += " " + detail::fmt17(wrow[c]);
      out += "\n";
    }
    out += "b";
    for (double b : ly.bias) out += " " + detail::fmt17(b);
    out += "\n";
  }
  detail::write_file_atomic(path, out);
}

inline ScorerParams load_scorer(const std::string& path) {
  auto rd = detail::LineReader::open(path);
  if (rd.next("header") != "scorer-checkpoint v1")
    rd.fail("expected 'scorer-checkpoint v1'");
  auto arch_toks = detail::tokenize(rd.next("arch line"));
  if (arch_toks.size() < 3 || arch_toks[0] != "arch")
    rd.fail("expected 'arch <dim> <sizes...> <tags>'");
  ScorerParams p;
  for (std::size_t i = 1; i < arch_toks.size(); ++i) {
    const int n = detail::to_int(arch_toks[i], path + ": arch");
    if (n < 1) rd.fail("architecture entry must be >= 1");
    p.architecture.push_back(n);
  }
  auto drop_toks = detail::tokenize(rd.next("dropout line"));
  if (drop_toks.size() != 2 || drop_toks[0] != "dropout")
    rd.fail("expected 'dropout <ratio>'");
  p.dropout_ratio = detail::to_double(drop_toks[1], path + ": dropout");
  for (std::size_t l = 0; l + 1 < p.architecture.size(); ++l) {
    Layer ly;
    ly.in = p.architecture[l];
    ly.out = p.architecture[l + 1];
    ly.weights.reserve(static_cast<std::size_t>(ly.in) * ly.out);
    for (int r = 0; r < ly.out; ++r) {
      auto toks = detail::tokenize(rd.next("weight row"));
      if (toks.size() != static_cast<std::size_t>(ly.in) + 1 || toks[0] != "w")
        rd.fail("expected 'w' with " + std::to_string(ly.in) + " values");
      for (int c = 0; c < ly.in; ++c) {
        const double v = detail::to_double(toks[static_cast<std::size_t>(c) + 1],
                                           path + ": weight");
        if (!std::isfinite(v)) rd.fail("non-finite weight");
        ly.weights.push_back(v);
      }
    }
    auto btoks = detail::tokenize(rd.next("bias row"));
    if (btoks.size() != static_cast<std::size_t>(ly.out) + 1 || btoks[0] != "b")
      rd.fail("expected 'b' with " + std::to_string(ly.out) + " values");
    for (int r = 0; r < ly.out; ++r) {
      const double v =
          detail::to_double(btoks[static_cast<std::size_t>(r) + 1], path + ": bias");
      if (!std::isfinite(v)) rd.fail("non-finite bias");
      ly.bias.push_back(v);
    }
    p.layers.push_back(std::move(ly));
  }
  if (!rd.done()) rd.fail("trailing content after checkpoint");
  validate_params(p);
  return p;
}

}  // namespace tagrank
