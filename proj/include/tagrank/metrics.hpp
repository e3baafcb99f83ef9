#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "tagrank/core.hpp"
#include "tagrank/rng.hpp"
#include "tagrank/text_io.hpp"

namespace tagrank {

// Fixed-size tag assignments for a test set: every example gets exactly
// min(k, c) distinct tags, sorted ascending.
struct PredictionSet {
  int k = 0;
  std::vector<std::vector<int>> assigned;
};

struct TagMetrics {
  long long n_ground = 0;     // test examples carrying the tag
  long long n_predicted = 0;  // examples the system assigned the tag to
  long long n_correct = 0;    // overlap of the two
  double recall = 0.0;        // 100 * n_correct / n_ground, 0 when 0/0
  double precision = 0.0;     // 100 * n_correct / n_predicted, 0 when 0/0
};

struct MetricsReport {
  int k = 0;
  std::vector<TagMetrics> per_tag;
  double per_class_recall = 0.0;     // mean of per-tag recalls
  double per_class_precision = 0.0;  // mean of per-tag precisions
  double overall_recall = 0.0;       // 100 * sum(n_correct) / sum(n_ground)
  double overall_precision = 0.0;    // 100 * sum(n_correct) / sum(n_predicted)
  double n_plus = 0.0;               // percent of tags recalled at least once
};

// Indices of the min(k, c) highest scores; equal scores break toward the
// lower tag index. Returned sorted ascending.
inline std::vector<int> topk_assign(const ScoreVector& scores, int k) {
  if (k < 1) throw ValidationError("topk: k must be >= 1");
  if (scores.empty()) throw ValidationError("topk: empty scores");
  const int c = static_cast<int>(scores.size());
  const int m = std::min(k, c);
  std::vector<int> idx(static_cast<std::size_t>(c));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + m, idx.end(),
                    [&scores](int a, int b) {
                      if (scores[static_cast<std::size_t>(a)] !=
                          scores[static_cast<std::size_t>(b)])
                        return scores[static_cast<std::size_t>(a)] >
                               scores[static_cast<std::size_t>(b)];
                      return a < b;
                    });
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline PredictionSet topk_predictions(const std::vector<ScoreVector>& scores,
                                      int k) {
  PredictionSet preds;
  preds.k = k;
  preds.assigned.reserve(scores.size());
  for (const ScoreVector& s : scores) preds.assigned.push_back(topk_assign(s, k));
  return preds;
}

inline void validate_predictions(const PredictionSet& preds,
                                 const Dataset& gt) {
  if (preds.k < 1) throw ValidationError("metrics: k must be >= 1");
  if (preds.assigned.size() != gt.examples.size())
    throw ValidationError("metrics: " + std::to_string(preds.assigned.size()) +
                          " prediction sets for " +
                          std::to_string(gt.examples.size()) + " examples");
  const int m = std::min(preds.k, gt.num_tags);
  for (std::size_t e = 0; e < preds.assigned.size(); ++e) {
    const std::vector<int>& a = preds.assigned[e];
    if (static_cast<int>(a.size()) != m)
      throw ValidationError("metrics: prediction set " + std::to_string(e) +
                            " has " + std::to_string(a.size()) +
                            " tags, expected " + std::to_string(m));
    int prev = -1;
    for (int t : a) {
      if (t < 0 || t >= gt.num_tags)
        throw ValidationError("metrics: prediction set " + std::to_string(e) +
                              " contains out-of-range tag " +
                              std::to_string(t));
      if (t <= prev)
        throw ValidationError("metrics: prediction set " + std::to_string(e) +
                              " is not sorted distinct");
      prev = t;
    }
  }
}

// Counts per-tag ground/predicted/correct totals over the test set, then
// aggregates two ways: per-class averages treat every tag equally (0/0
// ratios count as 0), overall numbers pool the raw counts so frequent tags
// dominate. All five headline numbers are percentages.
inline MetricsReport compute_metrics(const PredictionSet& preds,
                                     const Dataset& gt) {
  validate(gt);
  if (gt.examples.empty())
    throw ValidationError("metrics: dataset has no examples");
  validate_predictions(preds, gt);

  const std::size_t c = static_cast<std::size_t>(gt.num_tags);
  MetricsReport rep;
  rep.k = preds.k;
  rep.per_tag.assign(c, TagMetrics{});
  for (std::size_t e = 0; e < gt.examples.size(); ++e) {
    const std::vector<int>& truth = gt.examples[e].labels;
    const std::vector<int>& pred = preds.assigned[e];
    for (int t : truth) ++rep.per_tag[static_cast<std::size_t>(t)].n_ground;
    for (int t : pred) ++rep.per_tag[static_cast<std::size_t>(t)].n_predicted;
    // both sorted ascending
    std::size_t i = 0, j = 0;
    while (i < truth.size() && j < pred.size()) {
      if (truth[i] < pred[j]) ++i;
      else if (truth[i] > pred[j]) ++j;
      else {
        ++rep.per_tag[static_cast<std::size_t>(truth[i])].n_correct;
        ++i;
        ++j;
      }
    }
  }

  long long sum_g = 0, sum_p = 0, sum_c = 0;
  long long tags_hit = 0;
  double recall_sum = 0.0, precision_sum = 0.0;
  for (TagMetrics& tm : rep.per_tag) {
    tm.recall = tm.n_ground > 0 ? 100.0 * static_cast<double>(tm.n_correct) /
                                      static_cast<double>(tm.n_ground)
                                : 0.0;
    tm.precision = tm.n_predicted > 0
                       ? 100.0 * static_cast<double>(tm.n_correct) /
                             static_cast<double>(tm.n_predicted)
                       : 0.0;
    recall_sum += tm.recall;
    precision_sum += tm.precision;
    sum_g += tm.n_ground;
    sum_p += tm.n_predicted;
    sum_c += tm.n_correct;
    if (tm.n_correct > 0) ++tags_hit;
  }
  const double cd = static_cast<double>(c);
  rep.per_class_recall = recall_sum / cd;
  rep.per_class_precision = precision_sum / cd;
  // sum_g >= 1 (every example carries a label) and sum_p >= 1 (every
  // prediction set is non-empty) whenever the test set is non-empty.
  rep.overall_recall =
      100.0 * static_cast<double>(sum_c) / static_cast<double>(sum_g);
  rep.overall_precision =
      100.0 * static_cast<double>(sum_c) / static_cast<double>(sum_p);
  rep.n_plus = 100.0 * static_cast<double>(tags_hit) / cd;
  return rep;
}

// Best assignments any system limited to min(k, c) tags per example could
// make: the true tags themselves, trimmed to a random k-subset when there
// are too many, padded with random distinct wrong tags when too few. The
// padding makes precision honest (every set has exactly min(k, c) entries).
inline PredictionSet upper_bound_predictions(const Dataset& gt, int k,
                                             std::uint64_t seed) {
  validate(gt);
  if (k < 1) throw ValidationError("upper bound: k must be >= 1");
  Rng rng(seed);
  const int c = gt.num_tags;
  const int m = std::min(k, c);
  PredictionSet preds;
  preds.k = k;
  preds.assigned.reserve(gt.examples.size());
  for (const Example& ex : gt.examples) {
    std::vector<int> chosen = ex.labels;
    if (static_cast<int>(chosen.size()) > m) {
      rng.shuffle(chosen);
      chosen.resize(static_cast<std::size_t>(m));
    } else if (static_cast<int>(chosen.size()) < m) {
      std::vector<std::uint8_t> taken(static_cast<std::size_t>(c), 0);
      for (int t : chosen) taken[static_cast<std::size_t>(t)] = 1;
      while (static_cast<int>(chosen.size()) < m) {
        const int t = rng.below_int(c);
        if (!taken[static_cast<std::size_t>(t)]) {
          taken[static_cast<std::size_t>(t)] = 1;
          chosen.push_back(t);
        }
      }
    }
    std::sort(chosen.begin(), chosen.end());
    preds.assigned.push_back(std::move(chosen));
  }
  return preds;
}

// Headline comment line, TSV per-tag rows, and a pooled "overall" row.
inline void write_metrics_table(const MetricsReport& rep,
                                const std::vector<std::string>& tag_names,
                                std::ostream& os) {
  if (tag_names.size() != rep.per_tag.size())
    throw ValidationError("metrics table: " +
                          std::to_string(tag_names.size()) + " names for " +
                          std::to_string(rep.per_tag.size()) + " tags");
  os << "# k=" << rep.k
     << " per_class_recall=" << detail::fmt2(rep.per_class_recall)
     << " per_class_precision=" << detail::fmt2(rep.per_class_precision)
     << " overall_recall=" << detail::fmt2(rep.overall_recall)
     << " overall_precision=" << detail::fmt2(rep.overall_precision)
     << " n_plus=" << detail::fmt2(rep.n_plus) << "\n";
  os << "tag\tname\tn_ground\tn_predicted\tn_correct\trecall\tprecision\n";
  long long sum_g = 0, sum_p = 0, sum_c = 0;
  for (std::size_t t = 0; t < rep.per_tag.size(); ++t) {
    const TagMetrics& tm = rep.per_tag[t];
    os << t << "\t" << tag_names[t] << "\t" << tm.n_ground << "\t"
       << tm.n_predicted << "\t" << tm.n_correct << "\t"
       << detail::fmt2(tm.recall) << "\t" << detail::fmt2(tm.precision)
       << "\n";
    sum_g += tm.n_ground;
    sum_p += tm.n_predicted;
    sum_c += tm.n_correct;
  }
  os << "overall\t-\t" << sum_g << "\t" << sum_p << "\t" << sum_c << "\t"
     << detail::fmt2(rep.overall_recall) << "\t"
     << detail::fmt2(rep.overall_precision) << "\n";
}

}  // namespace tagrank
