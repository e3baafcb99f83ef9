#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tagrank/core.hpp"
#include "tagrank/rng.hpp"

namespace tagrank {

namespace detail {

inline void check_sizes(const ScoreVector& scores, const LabelVector& labels,
                        const char* who) {
  if (scores.size() != labels.indicator.size())
    throw ValidationError(std::string(who) + ": " +
                          std::to_string(scores.size()) + " scores vs " +
                          std::to_string(labels.indicator.size()) + " tags");
  if (labels.c_plus < 1)
    throw ValidationError(std::string(who) + ": no positive labels");
}

}  // namespace detail

// Numerically stable softmax: shifts by the max score before exponentiating.
// Entries are strictly positive and sum to 1 up to rounding.
inline std::vector<double> softmax_probs(const ScoreVector& scores) {
  if (scores.empty()) throw ValidationError("softmax_probs: empty scores");
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    p[j] = std::exp(scores[j] - m);
    z += p[j];
  }
  for (double& v : p) v /= z;
  return p;
}

// KL divergence from the uniform-over-positives target distribution
// (indicator / c_plus) to the softmax of the scores, dropping the constant
// target-entropy term:
//   value = -(1/c_plus) * sum_{j positive} log p_j
//   grad  = p - target
// log arguments are floored at 1e-12 so extreme score gaps cannot produce
// -inf; the gradient uses the unfloored p.
inline LossResult softmax_kl_loss(const ScoreVector& scores,
                                  const LabelVector& labels) {
  detail::check_sizes(scores, labels, "softmax_kl_loss");
  const std::vector<double> p = softmax_probs(scores);
  const double inv_cp = 1.0 / static_cast<double>(labels.c_plus);
  LossResult res;
  res.grad.assign(scores.size(), 0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    res.grad[j] = p[j];
    if (labels.indicator[j]) {
      res.value -= inv_cp * std::log(std::max(p[j], 1e-12));
      res.grad[j] -= inv_cp;
    }
  }
  return res;
}

// Exact margin-1 ranking loss over every (positive, negative) pair:
//   value = sum_{j pos} sum_{k neg} max(0, 1 - f_j + f_k)
// Subgradient: each strictly violated pair contributes -1 to the positive's
// score gradient and +1 to the negative's; pairs exactly at the kink
// (margin term == 0) contribute nothing.
inline LossResult pairwise_rank_loss(const ScoreVector& scores,
                                     const LabelVector& labels) {
  detail::check_sizes(scores, labels, "pairwise_rank_loss");
  LossResult res;
  res.grad.assign(scores.size(), 0.0);
  if (labels.c_minus == 0) return res;  // no pairs, zero loss
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!labels.indicator[j]) continue;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      if (labels.indicator[k]) continue;
      const double h = 1.0 - scores[j] + scores[k];
      if (h > 0.0) {
        res.value += h;
        res.grad[j] -= 1.0;
        res.grad[k] += 1.0;
      }
    }
  }
  return res;
}

// Negative-sampling control for the rank-weighted loss.
struct WarpConfig {
  // Cap on sampling attempts per positive label. 0 means "use c_minus",
  // the number of negatives of the example at hand.
  int max_trials = 0;
  // Seed callers use to construct the Rng they pass in. Stored here so a
  // configuration fully determines a run.
  std::uint64_t rng_seed = 0;

  int effective_max_trials(int c_minus) const {
    return max_trials > 0 ? max_trials : c_minus;
  }
};

// Outcome of sampled rank estimation for one positive label.
struct RankEstimate {
  int rank = 0;       // floor((c - 1) / trials), clamped to >= 1, when found
  int trials = 0;     // negatives drawn before stopping
  int violator = -1;  // violating negative's tag index, -1 if none found
  bool found() const { return violator >= 0; }
};

// Harmonic partial sum H_rank = 1 + 1/2 + ... + 1/rank. Monotone increasing,
// so larger estimated ranks (worse placements) weigh more.
inline double warp_weight(int rank) {
  if (rank < 1)
    throw ValidationError("warp_weight: rank must be >= 1, got " +
                          std::to_string(rank));
  double s = 0.0;
  for (int i = 1; i <= rank; ++i) s += 1.0 / static_cast<double>(i);
  return s;
}

// floor((c - 1) / trials) clamped to >= 1. The clamp only matters when a
// caller allows more trials than there are other labels.
inline int rank_from_trials(int num_tags, int trials) {
  return std::max(1, (num_tags - 1) / trials);
}

// Draws negatives uniformly with replacement until one violates the margin
// against the given positive (1 - f_pos + f_neg > 0) or the trial budget is
// exhausted. The number of draws needed estimates how crowded the top of the
// ranking is above this positive.
inline RankEstimate estimate_rank(const ScoreVector& scores, int positive,
                                  const LabelVector& labels,
                                  const WarpConfig& cfg, Rng& rng) {
  detail::check_sizes(scores, labels, "estimate_rank");
  if (positive < 0 || positive >= static_cast<int>(scores.size()) ||
      !labels.indicator[static_cast<std::size_t>(positive)])
    throw ValidationError("estimate_rank: tag " + std::to_string(positive) +
                          " is not a positive label");
  if (labels.c_minus < 1)
    throw ValidationError("estimate_rank: no negative labels to sample");

  std::vector<int> negatives;
  negatives.reserve(static_cast<std::size_t>(labels.c_minus));
  for (std::size_t k = 0; k < labels.indicator.size(); ++k)
    if (!labels.indicator[k]) negatives.push_back(static_cast<int>(k));

  const int budget = cfg.effective_max_trials(labels.c_minus);
  const double fpos = scores[static_cast<std::size_t>(positive)];
  for (int s = 1; s <= budget; ++s) {
    const int k = negatives[static_cast<std::size_t>(
        rng.below(static_cast<std::uint64_t>(negatives.size())))];
    if (1.0 - fpos + scores[static_cast<std::size_t>(k)] > 0.0)
      return {rank_from_trials(static_cast<int>(scores.size()), s), s, k};
  }
  return {0, budget, -1};
}

// Rank-weighted hinge loss with sampled rank estimation. For each positive
// label in ascending index order, one violating negative is sampled; that
// single pair carries the whole weighted hinge term:
//   value += H_rank * (1 - f_pos + f_viol)
//   grad[pos] -= H_rank, grad[viol] += H_rank
// Positives whose budget expires without a violation contribute nothing.
// The rank weight is treated as a constant when differentiating.
inline LossResult warp_loss(const ScoreVector& scores,
                            const LabelVector& labels, const WarpConfig& cfg,
                            Rng& rng) {
  detail::check_sizes(scores, labels, "warp_loss");
  LossResult res;
  res.grad.assign(scores.size(), 0.0);
  if (labels.c_minus == 0) return res;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!labels.indicator[j]) continue;
    const RankEstimate est =
        estimate_rank(scores, static_cast<int>(j), labels, cfg, rng);
    if (!est.found()) continue;
    const double w = warp_weight(est.rank);
    const double h =
        1.0 - scores[j] + scores[static_cast<std::size_t>(est.violator)];
    res.value += w * h;
    res.grad[j] -= w;
    res.grad[static_cast<std::size_t>(est.violator)] += w;
  }
  return res;
}

enum class LossKind { softmax, pairwise, warp };

inline const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::softmax: return "softmax";
    case LossKind::pairwise: return "pairwise";
    case LossKind::warp: return "warp";
  }
  return "?";
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "softmax") return LossKind::softmax;
  if (s == "pairwise" || s == "ranking") return LossKind::pairwise;
  if (s == "warp") return LossKind::warp;
  throw ValidationError("unknown loss '" + s +
                        "' (expected softmax, pairwise, or warp)");
}

}  // namespace tagrank
