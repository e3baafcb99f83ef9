#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "tagrank/baselines.hpp"
#include "tagrank/core.hpp"
#include "tagrank/data.hpp"
#include "tagrank/metrics.hpp"
#include "tagrank/optimizer.hpp"
#include "tagrank/rng.hpp"
#include "tagrank/scorer.hpp"
#include "tagrank/text_io.hpp"

namespace tagrank {

// One shared protocol run: split once, fit every method on the train side,
// score the test side, and report the same metric set for each method at
// each cutoff k. cfg.seed drives the split, every training run, and the
// upper-bound draw, so a config determines the whole grid.
struct CompareConfig {
  TrainConfig train;  // loss field is overridden per scorer row
  KnnConfig knn;
  SvmConfig svm;
  double train_fraction = 0.75;
  std::vector<int> ks = {3};
  std::uint64_t seed = 0;
};

struct CompareRow {
  std::string method;
  MetricsReport report;
};

struct CompareTable {
  int k = 0;
  std::vector<CompareRow> rows;  // upper_bound, knn, svm, softmax, ranking, warp
};

inline void validate_compare_config(const CompareConfig& cfg) {
  validate_train_config(cfg.train);
  validate_svm_config(cfg.svm);
  if (!(cfg.train_fraction > 0.0) || !(cfg.train_fraction < 1.0))
    throw ValidationError("compare: train_fraction must be in (0, 1)");
  if (cfg.ks.empty()) throw ValidationError("compare: need at least one k");
  for (int k : cfg.ks)
    if (k < 1) throw ValidationError("compare: every k must be >= 1");
}

inline std::vector<CompareTable> run_comparison(const Dataset& ds,
                                                const CompareConfig& cfg,
                                                std::ostream* progress = nullptr) {
  validate_compare_config(cfg);
  auto [train_set, test_set] = split(ds, cfg.train_fraction,
                                     mix_seed(cfg.seed, 1));
  validate_knn_config(cfg.knn, static_cast<int>(train_set.examples.size()));
  if (progress)
    *progress << "split: " << train_set.examples.size() << " train / "
              << test_set.examples.size() << " test\n";

  const LossKind kinds[] = {LossKind::softmax, LossKind::pairwise,
                            LossKind::warp};
  const char* scorer_names[] = {"softmax", "ranking", "warp"};
  std::vector<std::vector<ScoreVector>> scorer_scores(3);
  for (int m = 0; m < 3; ++m) {
    TrainConfig tc = cfg.train;
    tc.loss = kinds[m];
    tc.seed = cfg.seed;
    if (progress) *progress << "training " << scorer_names[m] << " scorer\n";
    const TrainResult res =
        train(train_set, tc, [&](const EpochRecord& r) {
          if (progress)
            *progress << "  epoch=" << r.epoch << " lr=" << r.lr
                      << " mean_loss=" << r.mean_loss << "\n";
        });
    scorer_scores[static_cast<std::size_t>(m)].reserve(
        test_set.examples.size());
    for (const Example& ex : test_set.examples)
      scorer_scores[static_cast<std::size_t>(m)].push_back(
          score(res.params, ex.features));
  }

  if (progress) *progress << "scoring knn baseline\n";
  std::vector<ScoreVector> knn_scores;
  knn_scores.reserve(test_set.examples.size());
  for (const Example& ex : test_set.examples)
    knn_scores.push_back(knn_posterior(train_set, ex.features, cfg.knn));

  if (progress) *progress << "training svm baseline\n";
  SvmConfig sc = cfg.svm;
  sc.seed = cfg.seed;
  const SvmModel svm = svm_train(train_set, sc);
  std::vector<ScoreVector> svm_score_rows;
  svm_score_rows.reserve(test_set.examples.size());
  for (const Example& ex : test_set.examples)
    svm_score_rows.push_back(svm_scores(svm, ex.features));

  std::vector<CompareTable> tables;
  tables.reserve(cfg.ks.size());
  for (int k : cfg.ks) {
    CompareTable table;
    table.k = k;
    table.rows.push_back(
        {"upper_bound",
         compute_metrics(upper_bound_predictions(
                             test_set, k,
                             mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(k))),
                         test_set)});
    table.rows.push_back(
        {"knn", compute_metrics(topk_predictions(knn_scores, k), test_set)});
    table.rows.push_back(
        {"svm",
         compute_metrics(topk_predictions(svm_score_rows, k), test_set)});
    for (int m = 0; m < 3; ++m)
      table.rows.push_back(
          {scorer_names[m],
           compute_metrics(
               topk_predictions(scorer_scores[static_cast<std::size_t>(m)], k),
               test_set)});
    tables.push_back(std::move(table));
  }
  return tables;
}

// TSV grid: one row per (k, method), five metric columns.
inline void write_comparison(const std::vector<CompareTable>& tables,
                             std::ostream& os) {
  os << "k\tmethod\tper_class_recall\tper_class_precision\toverall_recall"
        "\toverall_precision\tn_plus\n";
  for (const CompareTable& t : tables)
    for (const CompareRow& r : t.rows)
      os << t.k << "\t" << r.method << "\t"
         << detail::fmt2(r.report.per_class_recall) << "\t"
         << detail::fmt2(r.report.per_class_precision) << "\t"
         << detail::fmt2(r.report.overall_recall) << "\t"
         << detail::fmt2(r.report.overall_precision) << "\t"
         << detail::fmt2(r.report.n_plus) << "\n";
}

}  // namespace tagrank
