// Command-line front end: synth / split / train / eval / compare.
// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 numerical failure during training.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tagrank/tagrank.hpp"

namespace {

using namespace tagrank;

// CLI convention: "--hidden 0" asks for a linear scorer (no hidden layer).
std::vector<int> normalize_hidden(std::vector<int> hidden) {
  if (hidden.size() == 1 && hidden[0] == 0) hidden.clear();
  return hidden;
}

void print_headline(const MetricsReport& rep) {
  std::cout << "k=" << rep.k
            << " per_class_recall=" << detail::fmt2(rep.per_class_recall)
            << " per_class_precision=" << detail::fmt2(rep.per_class_precision)
            << " overall_recall=" << detail::fmt2(rep.overall_recall)
            << " overall_precision=" << detail::fmt2(rep.overall_precision)
            << " n_plus=" << detail::fmt2(rep.n_plus) << "\n";
}

void write_per_tag_table(const MetricsReport& rep, const Dataset& ds,
                         const std::string& path) {
  std::ostringstream ss;
  write_metrics_table(rep, ds.tag_names, ss);
  detail::write_file_atomic(path, ss.str());
  std::cout << "wrote per-tag table " << path << "\n";
}

void require_same_shape(const Dataset& train, const Dataset& test) {
  if (train.num_tags != test.num_tags)
    throw ValidationError("train set has " + std::to_string(train.num_tags) +
                          " tags but eval set has " +
                          std::to_string(test.num_tags));
  if (train.dim != test.dim)
    throw ValidationError("train set has dim " + std::to_string(train.dim) +
                          " but eval set has dim " +
                          std::to_string(test.dim));
}

struct SynthArgs {
  SynthConfig cfg;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  const Dataset ds = generate_synthetic(a.cfg);
  save_dataset(ds, a.out);
  std::cout << "wrote " << a.out << ": tags=" << ds.num_tags
            << " dim=" << ds.dim << " examples=" << ds.examples.size()
            << "\n";
  std::vector<long long> counts(static_cast<std::size_t>(ds.num_tags), 0);
  for (const Example& ex : ds.examples)
    for (int t : ex.labels) ++counts[static_cast<std::size_t>(t)];
  std::vector<int> order(static_cast<std::size_t>(ds.num_tags));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const long long cx = counts[static_cast<std::size_t>(x)];
    const long long cy = counts[static_cast<std::size_t>(y)];
    return cx != cy ? cx > cy : x < y;
  });
  const std::size_t show = std::min<std::size_t>(5, order.size());
  std::cout << "most frequent:";
  for (std::size_t i = 0; i < show; ++i)
    std::cout << " " << ds.tag_names[static_cast<std::size_t>(order[i])] << "="
              << counts[static_cast<std::size_t>(order[i])];
  std::cout << "\nleast frequent:";
  for (std::size_t i = order.size() - show; i < order.size(); ++i)
    std::cout << " " << ds.tag_names[static_cast<std::size_t>(order[i])] << "="
              << counts[static_cast<std::size_t>(order[i])];
  std::cout << "\n";
}

struct SplitArgs {
  std::string data, train_out, test_out;
  double fraction = 0.75;
  std::uint64_t seed = 0;
};

void run_split(const SplitArgs& a) {
  const Dataset ds = load_dataset(a.data);
  const auto [train_set, test_set] = split(ds, a.fraction, a.seed);
  save_dataset(train_set, a.train_out);
  save_dataset(test_set, a.test_out);
  std::cout << "wrote " << a.train_out << " (" << train_set.examples.size()
            << " examples) and " << a.test_out << " ("
            << test_set.examples.size() << " examples)\n";
}

struct TrainArgs {
  std::string data;
  std::string loss = "softmax";
  std::string out = "model.ckpt";
  std::string log;
  TrainConfig cfg;
};

void run_train(const TrainArgs& a) {
  const Dataset ds = load_dataset(a.data);
  TrainConfig cfg = a.cfg;
  cfg.loss = parse_loss_kind(a.loss);
  cfg.hidden = normalize_hidden(cfg.hidden);
  const TrainResult res = train(ds, cfg, [](const EpochRecord& r) {
    std::fprintf(stderr, "epoch=%d step=%lld lr=%g mean_loss=%.6g elapsed=%.2fs\n",
                 r.epoch, r.step, r.lr, r.mean_loss, r.elapsed_seconds);
  });
  save_scorer(res.params, a.out);
  std::cout << "trained " << ds.examples.size() << " examples for "
            << cfg.epochs << " epochs (loss=" << to_string(cfg.loss) << ")\n";
  if (!res.log.epochs.empty())
    std::cout << "final mean_loss="
              << detail::fmt17(res.log.epochs.back().mean_loss) << "\n";
  std::cout << "wrote " << a.out << "\n";
  if (!a.log.empty()) {
    write_train_log(res.log, a.log);
    std::cout << "wrote " << a.log << "\n";
  }
}

struct EvalArgs {
  std::string data;
  int k = 3;
  std::string model;
  bool upper_bound = false;
  bool knn = false;
  bool svm = false;
  std::string train_data;
  std::uint64_t seed = 0;
  std::string per_tag;
  KnnConfig knn_cfg;
  SvmConfig svm_cfg;
};

void run_eval(const EvalArgs& a) {
  const Dataset ds = load_dataset(a.data);
  PredictionSet preds;
  if (a.upper_bound) {
    preds = upper_bound_predictions(ds, a.k, a.seed);
  } else if (a.knn) {
    const Dataset tr = load_dataset(a.train_data);
    require_same_shape(tr, ds);
    validate_knn_config(a.knn_cfg, static_cast<int>(tr.examples.size()));
    std::vector<ScoreVector> scores;
    scores.reserve(ds.examples.size());
    for (const Example& ex : ds.examples)
      scores.push_back(knn_posterior(tr, ex.features, a.knn_cfg));
    preds = topk_predictions(scores, a.k);
  } else if (a.svm) {
    const Dataset tr = load_dataset(a.train_data);
    require_same_shape(tr, ds);
    SvmConfig sc = a.svm_cfg;
    sc.seed = a.seed;
    const SvmModel model = svm_train(tr, sc);
    std::vector<ScoreVector> scores;
    scores.reserve(ds.examples.size());
    for (const Example& ex : ds.examples)
      scores.push_back(svm_scores(model, ex.features));
    preds = topk_predictions(scores, a.k);
  } else {
    const ScorerParams params = load_scorer(a.model);
    if (params.architecture.front() != ds.dim)
      throw ValidationError("model expects dim " +
                            std::to_string(params.architecture.front()) +
                            " but dataset has dim " + std::to_string(ds.dim));
    if (params.architecture.back() != ds.num_tags)
      throw ValidationError("model scores " +
                            std::to_string(params.architecture.back()) +
                            " tags but dataset has " +
                            std::to_string(ds.num_tags));
    std::vector<ScoreVector> scores;
    scores.reserve(ds.examples.size());
    for (const Example& ex : ds.examples)
      scores.push_back(score(params, ex.features));
    preds = topk_predictions(scores, a.k);
  }
  const MetricsReport rep = compute_metrics(preds, ds);
  print_headline(rep);
  if (!a.per_tag.empty()) write_per_tag_table(rep, ds, a.per_tag);
}

struct CompareArgs {
  std::string data;
  std::string out;
  CompareConfig cfg;
};

void run_compare(const CompareArgs& a) {
  const Dataset ds = load_dataset(a.data);
  CompareConfig cfg = a.cfg;
  cfg.train.hidden = normalize_hidden(cfg.train.hidden);
  const std::vector<CompareTable> tables = run_comparison(ds, cfg, &std::cerr);
  std::ostringstream ss;
  write_comparison(tables, ss);
  if (a.out.empty()) {
    std::cout << ss.str();
  } else {
    detail::write_file_atomic(a.out, ss.str());
    std::cout << "wrote " << a.out << "\n";
  }
}

void add_train_flags(CLI::App* cmd, TrainConfig& cfg) {
  cmd->add_option("--lr", cfg.learning_rate, "initial learning rate")
      ->capture_default_str();
  cmd->add_option("--momentum", cfg.momentum, "SGD momentum in [0,1)")
      ->capture_default_str();
  cmd->add_option("--batch", cfg.batch_size, "mini-batch size")
      ->capture_default_str();
  cmd->add_option("--decay-factor", cfg.decay_factor,
                  "staircase decay multiplier in (0,1]")
      ->capture_default_str();
  cmd->add_option("--decay-every", cfg.decay_every,
                  "epochs between decay steps")
      ->capture_default_str();
  cmd->add_option("--epochs", cfg.epochs, "training epochs")
      ->capture_default_str();
  cmd->add_option("--hidden", cfg.hidden,
                  "hidden layer widths (0 for a linear scorer)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--dropout", cfg.dropout_ratio,
                  "hidden-unit drop probability in [0,1)")
      ->capture_default_str();
  cmd->add_option("--warp-max-trials", cfg.warp_max_trials,
                  "sampling budget per positive (0: number of negatives)")
      ->capture_default_str();
}

void add_knn_flags(CLI::App* cmd, KnnConfig& cfg) {
  cmd->add_option("--knn-k", cfg.k, "neighbors per query")
      ->capture_default_str();
  cmd->add_option("--sigma", cfg.sigma, "distance kernel width")
      ->capture_default_str();
}

void add_svm_flags(CLI::App* cmd, SvmConfig& cfg) {
  cmd->add_option("--svm-C", cfg.C, "SVM regularization constant")
      ->capture_default_str();
  cmd->add_option("--svm-epochs", cfg.epochs, "SVM training epochs")
      ->capture_default_str();
  cmd->add_option("--svm-lr", cfg.learning_rate, "SVM step-size scale")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tagrank: multilabel tag ranking trainer and evaluator"};
  app.set_config("--config", "", "read options from a config file");
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic long-tail multilabel dataset");
  synth->add_option("--out", synth_args.out, "output dataset path")
      ->required();
  synth->add_option("--tags", synth_args.cfg.num_tags, "vocabulary size")
      ->capture_default_str();
  synth->add_option("--dim", synth_args.cfg.dim, "feature dimension")
      ->capture_default_str();
  synth->add_option("--n", synth_args.cfg.num_examples, "number of examples")
      ->capture_default_str();
  synth->add_option("--zipf", synth_args.cfg.zipf_exponent,
                    "tag popularity exponent")
      ->capture_default_str();
  synth->add_option("--min-labels", synth_args.cfg.min_labels,
                    "fewest labels per example")
      ->capture_default_str();
  synth->add_option("--max-labels", synth_args.cfg.max_labels,
                    "most labels per example")
      ->capture_default_str();
  synth->add_option("--noise", synth_args.cfg.noise_sigma,
                    "feature noise scale")
      ->capture_default_str();
  synth->add_option("--seed", synth_args.cfg.seed, "generator seed")
      ->capture_default_str();
  synth->callback([&] { run_synth(synth_args); });

  SplitArgs split_args;
  CLI::App* split_cmd = app.add_subcommand(
      "split", "split a dataset into train and test files");
  split_cmd->add_option("--data", split_args.data, "input dataset path")
      ->required();
  split_cmd->add_option("--train-out", split_args.train_out,
                        "train-side output path")
      ->required();
  split_cmd->add_option("--test-out", split_args.test_out,
                        "test-side output path")
      ->required();
  split_cmd->add_option("--fraction", split_args.fraction,
                        "train-side fraction in (0,1)")
      ->capture_default_str();
  split_cmd->add_option("--seed", split_args.seed, "shuffle seed")
      ->capture_default_str();
  split_cmd->callback([&] { run_split(split_args); });

  TrainArgs train_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "train a scorer on a dataset");
  train_cmd->add_option("--data", train_args.data, "training dataset path")
      ->required();
  train_cmd
      ->add_option("--loss", train_args.loss, "training loss")
      ->check(CLI::IsMember({"softmax", "pairwise", "warp"}))
      ->capture_default_str();
  train_cmd->add_option("--out", train_args.out, "checkpoint output path")
      ->capture_default_str();
  train_cmd->add_option("--log", train_args.log,
                        "write a per-epoch training log here");
  train_cmd->add_option("--seed", train_args.cfg.seed,
                        "seed for init, shuffling, dropout, and sampling")
      ->capture_default_str();
  add_train_flags(train_cmd, train_args.cfg);
  train_cmd->callback([&] { run_train(train_args); });

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "score a dataset and report top-k annotation metrics");
  eval_cmd->add_option("--data", eval_args.data, "evaluation dataset path")
      ->required();
  eval_cmd->add_option("--k", eval_args.k, "tags assigned per example")
      ->check(CLI::Range(1, 1000000))
      ->capture_default_str();
  CLI::App* mode =
      eval_cmd->add_option_group("mode", "what produces the predictions");
  mode->add_option("--model", eval_args.model, "scorer checkpoint path");
  mode->add_flag("--upper-bound", eval_args.upper_bound,
                 "ground-truth upper bound");
  CLI::Option* knn_flag =
      mode->add_flag("--knn", eval_args.knn, "weighted kNN baseline");
  CLI::Option* svm_flag =
      mode->add_flag("--svm", eval_args.svm, "one-vs-all linear SVM baseline");
  mode->require_option(1);
  CLI::Option* train_data_opt = eval_cmd->add_option(
      "--train-data", eval_args.train_data, "training set for baselines");
  knn_flag->needs(train_data_opt);
  svm_flag->needs(train_data_opt);
  eval_cmd->add_option("--seed", eval_args.seed,
                       "seed for the upper-bound draw or SVM training")
      ->capture_default_str();
  eval_cmd->add_option("--per-tag", eval_args.per_tag,
                       "write the per-tag metrics table here");
  add_knn_flags(eval_cmd, eval_args.knn_cfg);
  add_svm_flags(eval_cmd, eval_args.svm_cfg);
  eval_cmd->callback([&] { run_eval(eval_args); });

  CompareArgs compare_args;
  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "run the full loss-versus-baseline comparison grid");
  compare_cmd->add_option("--data", compare_args.data, "dataset path")
      ->required();
  compare_cmd
      ->add_option("--k", compare_args.cfg.ks, "cutoffs to evaluate at")
      ->check(CLI::Range(1, 1000000))
      ->delimiter(',')
      ->capture_default_str();
  compare_cmd
      ->add_option("--train-fraction", compare_args.cfg.train_fraction,
                   "train-side fraction in (0,1)")
      ->capture_default_str();
  compare_cmd->add_option("--seed", compare_args.cfg.seed,
                          "seed shared by split, training, and draws")
      ->capture_default_str();
  compare_cmd->add_option("--out", compare_args.out,
                          "write the grid here instead of stdout");
  add_train_flags(compare_cmd, compare_args.cfg.train);
  add_knn_flags(compare_cmd, compare_args.cfg.knn);
  add_svm_flags(compare_cmd, compare_args.cfg.svm);
  compare_cmd->callback([&] { run_compare(compare_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const tagrank::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const tagrank::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
