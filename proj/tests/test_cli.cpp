#include "testutil.hpp"

#include <cstdio>
#include <sstream>

#include <sys/wait.h>

using namespace tagrank;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

// Runs the built binary with the given arguments. stderr is dropped unless
// the caller folds it into stdout with "2>&1" inside extra.
CliResult run_cli(const std::string& args, bool merge_stderr = false) {
  std::string cmd = std::string(TAGRANK_CLI_PATH) + " " + args;
  cmd += merge_stderr ? " 2>&1" : " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ostringstream ss;
  for (const std::string& line : tagrank::detail::read_lines(path))
    ss << line << "\n";
  return ss.str();
}

Dataset separable_toy() {
  Dataset ds;
  ds.num_tags = 2;
  ds.dim = 2;
  ds.tag_names = {"right", "left"};
  for (int i = 0; i < 10; ++i) {
    Example a;
    a.features = {2.0 + 0.05 * i, (i % 2 == 0) ? 0.3 : -0.3};
    a.labels = {0};
    ds.examples.push_back(a);
    Example b;
    b.features = {-2.0 - 0.05 * i, (i % 2 == 0) ? -0.3 : 0.3};
    b.labels = {1};
    ds.examples.push_back(b);
  }
  return ds;
}

}  // namespace

TEST_CASE("synth writes a loadable dataset and reruns byte-identically") {
  const auto dir = tt::scratch_dir("cli_synth");
  const std::string d1 = (dir / "a.txt").string();
  const std::string d2 = (dir / "b.txt").string();
  const std::string flags = "--tags 9 --dim 4 --n 60 --seed 12 --out ";
  const CliResult r1 = run_cli("synth " + flags + d1);
  REQUIRE(r1.code == 0);
  REQUIRE(r1.out.find("tags=9") != std::string::npos);
  REQUIRE(r1.out.find("most frequent:") != std::string::npos);
  const Dataset ds = load_dataset(d1);
  REQUIRE(ds.num_tags == 9);
  REQUIRE(ds.dim == 4);
  REQUIRE(ds.examples.size() == 60);
  REQUIRE(run_cli("synth " + flags + d2).code == 0);
  REQUIRE(slurp(d1) == slurp(d2));
}

TEST_CASE("cli usage errors exit 1, validation errors exit 2") {
  const auto dir = tt::scratch_dir("cli_err");
  const std::string out = (dir / "x.txt").string();
  REQUIRE(run_cli("synth").code == 1);  // missing --out
  REQUIRE(run_cli("synth --out " + out + " --tags 0").code == 2);
  REQUIRE(run_cli("definitely-not-a-command").code == 1);
  REQUIRE(run_cli("--help").code == 0);
  const CliResult bogus =
      run_cli("train --data " + out + " --loss bogus", true);
  REQUIRE(bogus.code == 1);
  REQUIRE(bogus.out.find("softmax") != std::string::npos);  // lists losses
  REQUIRE(bogus.out.find("warp") != std::string::npos);
  REQUIRE(run_cli("eval --data " + out + " --upper-bound --k 0").code == 1);
  REQUIRE(run_cli("eval --data " + out + " --k 3").code == 1);  // no mode
  REQUIRE(run_cli("eval --data " + out + " --knn --k 3").code == 1);
  REQUIRE(run_cli("eval --data missing.txt --upper-bound").code == 2);
}

TEST_CASE("split produces the expected sides") {
  const auto dir = tt::scratch_dir("cli_split");
  const std::string d = (dir / "d.txt").string();
  const std::string tr = (dir / "tr.txt").string();
  const std::string te = (dir / "te.txt").string();
  REQUIRE(run_cli("synth --tags 6 --dim 3 --n 80 --seed 4 --out " + d).code ==
          0);
  REQUIRE(run_cli("split --data " + d + " --train-out " + tr +
                  " --test-out " + te + " --fraction 0.75 --seed 2")
              .code == 0);
  REQUIRE(load_dataset(tr).examples.size() == 60);
  REQUIRE(load_dataset(te).examples.size() == 20);
}

TEST_CASE("train writes deterministic checkpoint and log") {
  const auto dir = tt::scratch_dir("cli_train");
  const std::string d = (dir / "d.txt").string();
  const std::string m = (dir / "m.ckpt").string();
  const std::string lg = (dir / "log.txt").string();
  REQUIRE(run_cli("synth --tags 8 --dim 4 --n 50 --seed 9 --out " + d).code ==
          0);
  const std::string flags = "train --data " + d + " --loss warp --seed 5" +
                            " --epochs 3 --hidden 8 --out " + m + " --log " +
                            lg;
  const CliResult r1 = run_cli(flags);
  REQUIRE(r1.code == 0);
  REQUIRE(r1.out.find("final mean_loss=") != std::string::npos);
  const std::string ckpt1 = slurp(m);
  const std::string log1 = slurp(lg);
  REQUIRE(log1.rfind("train-log v1\n", 0) == 0);
  REQUIRE(log1.find("epoch=0 step=") != std::string::npos);
  REQUIRE(log1.find("elapsed") == std::string::npos);
  const CliResult r2 = run_cli(flags);
  REQUIRE(r2.code == 0);
  REQUIRE(r2.out == r1.out);
  REQUIRE(slurp(m) == ckpt1);
  REQUIRE(slurp(lg) == log1);
  // the checkpoint loads and matches the dataset shape
  const ScorerParams p = load_scorer(m);
  REQUIRE(p.architecture == std::vector<int>{4, 8, 8});
}

TEST_CASE("train converges on the separable toy set through the cli") {
  const auto dir = tt::scratch_dir("cli_toy");
  const std::string d = (dir / "toy.txt").string();
  const std::string m = (dir / "m.ckpt").string();
  const std::string lg = (dir / "log.txt").string();
  save_dataset(separable_toy(), d);
  const CliResult r = run_cli(
      "train --data " + d +
      " --loss softmax --lr 0.5 --momentum 0.9 --batch 32 --decay-factor 1" +
      " --epochs 200 --hidden 0 --dropout 0 --seed 1 --out " + m + " --log " +
      lg);
  REQUIRE(r.code == 0);
  const auto lines = tagrank::detail::read_lines(lg);
  REQUIRE(lines.size() == 201);  // header + one record per epoch
  const std::string& last = lines.back();
  const auto pos = last.find("mean_loss=");
  REQUIRE(pos != std::string::npos);
  REQUIRE(std::stod(last.substr(pos + 10)) < 0.1);
  // --hidden 0 means linear: exactly one layer
  REQUIRE(load_scorer(m).architecture == std::vector<int>{2, 2});
}

TEST_CASE("train aborts with exit 3 when the loss blows up") {
  const auto dir = tt::scratch_dir("cli_blowup");
  const std::string d = (dir / "d.txt").string();
  const std::string m = (dir / "m.ckpt").string();
  Dataset ds = separable_toy();
  for (Example& ex : ds.examples)
    for (double& f : ex.features) f *= 1e200;  // overflows the forward pass
  save_dataset(ds, d);
  const CliResult r = run_cli("train --data " + d +
                                  " --lr 10 --epochs 5 --hidden 4 --out " + m,
                              true);
  REQUIRE(r.code == 3);
  REQUIRE(r.out.find("non-finite") != std::string::npos);
}

TEST_CASE("eval --knn matches the library composition") {
  const auto dir = tt::scratch_dir("cli_knn");
  const std::string trp = (dir / "tr.txt").string();
  const std::string tep = (dir / "te.txt").string();
  SynthConfig cfg;
  cfg.num_tags = 7;
  cfg.dim = 3;
  cfg.num_examples = 90;
  cfg.min_labels = 1;
  cfg.max_labels = 3;
  cfg.seed = 31;
  const Dataset all = generate_synthetic(cfg);
  const auto [tr, te] = split(all, 0.75, 8);
  save_dataset(tr, trp);
  save_dataset(te, tep);

  KnnConfig kc;
  kc.k = 7;
  kc.sigma = 0.8;
  std::vector<ScoreVector> scores;
  for (const Example& ex : te.examples)
    scores.push_back(knn_posterior(tr, ex.features, kc));
  const MetricsReport rep = compute_metrics(topk_predictions(scores, 2), te);
  std::ostringstream want;
  want << "k=2 per_class_recall=" << tagrank::detail::fmt2(rep.per_class_recall)
       << " per_class_precision="
       << tagrank::detail::fmt2(rep.per_class_precision)
       << " overall_recall=" << tagrank::detail::fmt2(rep.overall_recall)
       << " overall_precision=" << tagrank::detail::fmt2(rep.overall_precision)
       << " n_plus=" << tagrank::detail::fmt2(rep.n_plus) << "\n";

  const CliResult r = run_cli("eval --data " + tep + " --knn --train-data " +
                              trp + " --k 2 --knn-k 7 --sigma 0.8");
  REQUIRE(r.code == 0);
  REQUIRE(r.out == want.str());
}

TEST_CASE("eval --upper-bound has perfect precision when labels cover k") {
  const auto dir = tt::scratch_dir("cli_ub");
  const std::string d = (dir / "d.txt").string();
  REQUIRE(run_cli("synth --tags 10 --dim 3 --n 70 --min-labels 3"
                  " --max-labels 5 --seed 2 --out " +
                  d)
              .code == 0);
  const CliResult r = run_cli("eval --data " + d + " --upper-bound --k 3");
  REQUIRE(r.code == 0);
  REQUIRE(r.out.find("overall_precision=100.00") != std::string::npos);
  // deterministic given --seed
  REQUIRE(run_cli("eval --data " + d + " --upper-bound --k 3").out == r.out);
}

TEST_CASE("eval rejects a model whose shape mismatches the dataset") {
  const auto dir = tt::scratch_dir("cli_mismatch");
  const std::string d5 = (dir / "d5.txt").string();
  const std::string d6 = (dir / "d6.txt").string();
  const std::string m = (dir / "m.ckpt").string();
  REQUIRE(run_cli("synth --tags 5 --dim 3 --n 40 --seed 1 --out " + d5).code ==
          0);
  REQUIRE(run_cli("synth --tags 6 --dim 3 --n 40 --seed 1 --out " + d6).code ==
          0);
  REQUIRE(run_cli("train --data " + d5 + " --epochs 1 --hidden 4 --out " + m)
              .code == 0);
  const CliResult r = run_cli("eval --data " + d6 + " --model " + m, true);
  REQUIRE(r.code == 2);
  REQUIRE(r.out.find("6") != std::string::npos);
}

TEST_CASE("eval writes the per-tag table") {
  const auto dir = tt::scratch_dir("cli_pertag");
  const std::string d = (dir / "d.txt").string();
  const std::string pt = (dir / "pt.tsv").string();
  REQUIRE(run_cli("synth --tags 6 --dim 3 --n 40 --seed 3 --out " + d).code ==
          0);
  REQUIRE(
      run_cli("eval --data " + d + " --upper-bound --k 2 --per-tag " + pt)
          .code == 0);
  const auto lines = tagrank::detail::read_lines(pt);
  REQUIRE(lines.size() == 9);  // headline + header + 6 tags + overall
  REQUIRE(lines[0].rfind("# k=2 ", 0) == 0);
  REQUIRE(lines[1] ==
          "tag\tname\tn_ground\tn_predicted\tn_correct\trecall\tprecision");
  REQUIRE(lines.back().rfind("overall\t-\t", 0) == 0);
}

TEST_CASE("compare emits the ordered grid and reruns identically") {
  const auto dir = tt::scratch_dir("cli_compare");
  const std::string d = (dir / "d.txt").string();
  REQUIRE(run_cli("synth --tags 8 --dim 4 --n 80 --seed 6 --out " + d).code ==
          0);
  const std::string flags = "compare --data " + d +
                            " --k 1 --k 3 --epochs 2 --hidden 8"
                            " --svm-epochs 4 --knn-k 5 --seed 7";
  const CliResult r = run_cli(flags);
  REQUIRE(r.code == 0);
  const CliResult again = run_cli(flags);
  REQUIRE(again.out == r.out);

  std::istringstream ss(r.out);
  std::string line;
  REQUIRE(std::getline(ss, line));
  REQUIRE(line ==
          "k\tmethod\tper_class_recall\tper_class_precision\toverall_recall"
          "\toverall_precision\tn_plus");
  const std::vector<std::string> order = {"upper_bound", "knn",     "svm",
                                          "softmax",     "ranking", "warp"};
  double ub_overall_recall = 0.0;
  int row = 0;
  while (std::getline(ss, line)) {
    std::istringstream fields(line);
    std::string k_str, method, pcr, pcp, orec, oprec, nplus;
    REQUIRE(std::getline(fields, k_str, '\t'));
    REQUIRE(std::getline(fields, method, '\t'));
    REQUIRE(std::getline(fields, pcr, '\t'));
    REQUIRE(std::getline(fields, pcp, '\t'));
    REQUIRE(std::getline(fields, orec, '\t'));
    REQUIRE(std::getline(fields, oprec, '\t'));
    REQUIRE(std::getline(fields, nplus, '\t'));
    REQUIRE(k_str == (row < 6 ? "1" : "3"));
    REQUIRE(method == order[static_cast<std::size_t>(row % 6)]);
    if (row % 6 == 0)
      ub_overall_recall = std::stod(orec);
    else
      REQUIRE(std::stod(orec) <= ub_overall_recall);
    ++row;
  }
  REQUIRE(row == 12);
}

TEST_CASE("config file supplies defaults and flags override it") {
  const auto dir = tt::scratch_dir("cli_config");
  const std::string ini = (dir / "cfg.ini").string();
  const std::string d = (dir / "d.txt").string();
  tagrank::detail::write_file_atomic(ini, "[synth]\ntags=7\ndim=3\nn=30\n");
  REQUIRE(run_cli("--config " + ini + " synth --out " + d).code == 0);
  REQUIRE(load_dataset(d).num_tags == 7);
  REQUIRE(run_cli("--config " + ini + " synth --tags 9 --out " + d).code ==
          0);
  REQUIRE(load_dataset(d).num_tags == 9);
}
