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

// Long-tail synthetic corpus: tag popularity follows a Zipf law, each
// example mixes a few tag prototypes plus Gaussian noise.
struct SynthConfig {
  int num_tags = 81;
  int dim = 64;
  int num_examples = 5000;
  double zipf_exponent = 1.3;  // tag t drawn with weight (t+1)^-exponent
  int min_labels = 2;
  int max_labels = 3;
  double noise_sigma = 1.5;  // absolute per-coordinate scale, vs prototype norm 5
  std::uint64_t seed = 0;
};

inline void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.num_tags < 1)
    throw ValidationError("synth: num_tags must be >= 1, got " +
                          std::to_string(cfg.num_tags));
  if (cfg.dim < 1) throw ValidationError("synth: dim must be >= 1");
  if (cfg.num_examples < 1)
    throw ValidationError("synth: num_examples must be >= 1");
  if (!(cfg.zipf_exponent > 0.0))
    throw ValidationError("synth: zipf_exponent must be > 0");
  if (cfg.min_labels < 1 || cfg.min_labels > cfg.max_labels ||
      cfg.max_labels > cfg.num_tags)
    throw ValidationError(
        "synth: need 1 <= min_labels <= max_labels <= num_tags");
  if (cfg.noise_sigma < 0.0)
    throw ValidationError("synth: noise_sigma must be >= 0");
}

// Prototype entries scale with the tag-separation constant below. Wide
// separation keeps gradient-based scorers converging under fixed step-size
// recipes; noise_sigma then sets task hardness relative to norm-5 prototypes.
inline constexpr double kPrototypeScale = 5.0;

// Each tag gets a fixed prototype with entries N(0, scale^2/dim), so
// prototypes have expected norm kPrototypeScale. An example draws its label
// count uniformly, its tags Zipf-distributed without replacement, and its
// features as the sum of the chosen prototypes plus N(0, noise_sigma^2) per
// coordinate.
inline Dataset generate_synthetic(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  Rng rng(cfg.seed);
  Dataset ds;
  ds.num_tags = cfg.num_tags;
  ds.dim = cfg.dim;
  ds.tag_names.reserve(static_cast<std::size_t>(cfg.num_tags));
  for (int t = 0; t < cfg.num_tags; ++t)
    ds.tag_names.push_back("tag" + std::to_string(t));

  const double proto_sd =
      kPrototypeScale / std::sqrt(static_cast<double>(cfg.dim));
  std::vector<std::vector<double>> proto(
      static_cast<std::size_t>(cfg.num_tags),
      std::vector<double>(static_cast<std::size_t>(cfg.dim)));
  for (auto& row : proto)
    for (double& v : row) v = rng.normal() * proto_sd;

  // cumulative Zipf weights; cum.back() is exactly 1.0 (total / total)
  std::vector<double> cum(static_cast<std::size_t>(cfg.num_tags));
  double total = 0.0;
  for (int t = 0; t < cfg.num_tags; ++t)
    total += std::pow(static_cast<double>(t + 1), -cfg.zipf_exponent);
  double acc = 0.0;
  for (int t = 0; t < cfg.num_tags; ++t) {
    acc += std::pow(static_cast<double>(t + 1), -cfg.zipf_exponent);
    cum[static_cast<std::size_t>(t)] = acc / total;
  }

  ds.examples.reserve(static_cast<std::size_t>(cfg.num_examples));
  for (int e = 0; e < cfg.num_examples; ++e) {
    const int want =
        cfg.min_labels +
        rng.below_int(cfg.max_labels - cfg.min_labels + 1);
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(want));
    while (static_cast<int>(labels.size()) < want) {
      const double u = rng.uniform();
      const int t = static_cast<int>(
          std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
      if (std::find(labels.begin(), labels.end(), t) == labels.end())
        labels.push_back(t);
    }
    std::sort(labels.begin(), labels.end());

    Example ex;
    ex.features.assign(static_cast<std::size_t>(cfg.dim), 0.0);
    for (int t : labels)
      for (int f = 0; f < cfg.dim; ++f)
        ex.features[static_cast<std::size_t>(f)] +=
            proto[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)];
    for (int f = 0; f < cfg.dim; ++f)
      ex.features[static_cast<std::size_t>(f)] +=
          cfg.noise_sigma * rng.normal();
    ex.labels = std::move(labels);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

// Plain text, one record per line. Features serialize with %.17g so a
// save/load round trip is bit-exact.
inline void save_dataset(const Dataset& ds, const std::string& path) {
  validate(ds);
  if (ds.examples.empty())
    throw ValidationError("save_dataset: dataset has no examples");
  std::string out = "multilabel-dataset v1\n";
  out += "tags " + std::to_string(ds.num_tags) + "\n";
  out += "dim " + std::to_string(ds.dim) + "\n";
  for (const std::string& name : ds.tag_names) out += "tag " + name + "\n";
  for (const Example& ex : ds.examples) {
    out += "example";
    for (double f : ex.features) out += " " + detail::fmt17(f);
    out += " |";
    for (int lbl : ex.labels) out += " " + std::to_string(lbl);
    out += "\n";
  }
  detail::write_file_atomic(path, out);
}

inline Dataset load_dataset(const std::string& path) {
  const std::vector<std::string> raw = detail::read_lines(path);
  bool any = false;
  for (const std::string& l : raw)
    if (!l.empty()) any = true;
  if (!any) throw ValidationError(path + ": no examples");

  detail::LineReader rd(path, raw);
  if (rd.next("header") != "multilabel-dataset v1")
    rd.fail("expected 'multilabel-dataset v1'");
  auto tag_toks = detail::tokenize(rd.next("tags line"));
  if (tag_toks.size() != 2 || tag_toks[0] != "tags")
    rd.fail("expected 'tags <count>'");
  auto dim_toks = detail::tokenize(rd.next("dim line"));
  if (dim_toks.size() != 2 || dim_toks[0] != "dim")
    rd.fail("expected 'dim <count>'");

  Dataset ds;
  ds.num_tags = detail::to_int(tag_toks[1], path + ": tags");
  ds.dim = detail::to_int(dim_toks[1], path + ": dim");
  if (ds.num_tags < 1) rd.fail("tags must be >= 1");
  if (ds.dim < 1) rd.fail("dim must be >= 1");
  for (int t = 0; t < ds.num_tags; ++t) {
    const std::string& line = rd.next("tag name line");
    if (line.rfind("tag ", 0) != 0 || line.size() <= 4)
      rd.fail("expected 'tag <name>'");
    ds.tag_names.push_back(line.substr(4));
  }

  while (!rd.done()) {
    const std::string& line = rd.next("example line");
    if (line.empty()) continue;
    auto toks = detail::tokenize(line);
    if (toks[0] != "example") rd.fail("expected 'example <features> | <labels>'");
    const std::size_t want_sep = 1 + static_cast<std::size_t>(ds.dim);
    if (toks.size() <= want_sep || toks[want_sep] != "|") {
      if (toks.size() >= 2 &&
          std::find(toks.begin(), toks.end(), "|") != toks.end())
        rd.fail("feature count does not match dim " + std::to_string(ds.dim));
      rd.fail("expected 'example <" + std::to_string(ds.dim) +
              " features> | <labels>'");
    }
    Example ex;
    ex.features.reserve(static_cast<std::size_t>(ds.dim));
    const std::string ctx = path + ":" + std::to_string(rd.line_number());
    for (int f = 0; f < ds.dim; ++f) {
      const double v =
          detail::to_double(toks[static_cast<std::size_t>(f) + 1], ctx);
      if (!std::isfinite(v)) rd.fail("non-finite feature value");
      ex.features.push_back(v);
    }
    if (toks.size() == want_sep + 1) rd.fail("example has no labels");
    for (std::size_t i = want_sep + 1; i < toks.size(); ++i) {
      const int lbl = detail::to_int(toks[i], ctx);
      if (lbl < 0 || lbl >= ds.num_tags)
        rd.fail("label index " + std::to_string(lbl) + " out of range [0, " +
                std::to_string(ds.num_tags) + ")");
      ex.labels.push_back(lbl);
    }
    std::sort(ex.labels.begin(), ex.labels.end());
    for (std::size_t i = 1; i < ex.labels.size(); ++i)
      if (ex.labels[i] == ex.labels[i - 1])
        rd.fail("duplicate label index " + std::to_string(ex.labels[i]));
    ds.examples.push_back(std::move(ex));
  }
  if (ds.examples.empty()) throw ValidationError(path + ": no examples");
  validate(ds);
  return ds;
}

// Seeded permutation split. round(fraction * n) examples go to the first
// (train) side; both sides must end up non-empty.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction,
                                         std::uint64_t seed) {
  validate(ds);
  const int n = static_cast<int>(ds.examples.size());
  if (!(fraction > 0.0) || !(fraction < 1.0))
    throw ValidationError("split: fraction must be in (0, 1)");
  const int n_train =
      static_cast<int>(std::llround(fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n)
    throw ValidationError("split: fraction " + detail::fmt17(fraction) +
                          " leaves an empty side for " + std::to_string(n) +
                          " examples");
  const std::vector<int> perm = Rng(seed).permutation(n);
  Dataset train, test;
  train.num_tags = test.num_tags = ds.num_tags;
  train.dim = test.dim = ds.dim;
  train.tag_names = test.tag_names = ds.tag_names;
  train.examples.reserve(static_cast<std::size_t>(n_train));
  test.examples.reserve(static_cast<std::size_t>(n - n_train));
  for (int i = 0; i < n; ++i) {
    const Example& ex = ds.examples[static_cast<std::size_t>(perm[i])];
    if (i < n_train) train.examples.push_back(ex);
    else test.examples.push_back(ex);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace tagrank
