#include "testutil.hpp"

using namespace tagrank;

namespace {

Dataset random_set(int n, int c, int d, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.num_tags = c;
  cfg.dim = d;
  cfg.num_examples = n;
  cfg.min_labels = 1;
  cfg.max_labels = std::min(3, c);
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

// Reference kNN: full stable sort instead of nth_element selection, direct
// formula accumulation in the same neighbor order.
ScoreVector knn_oracle(const Dataset& train, const std::vector<double>& q,
                       const KnnConfig& cfg) {
  std::vector<std::pair<double, int>> all;
  for (std::size_t i = 0; i < train.examples.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t f = 0; f < q.size(); ++f) {
      const double diff = q[f] - train.examples[i].features[f];
      d2 += diff * diff;
    }
    all.push_back({d2, static_cast<int>(i)});
  }
  std::stable_sort(all.begin(), all.end());
  ScoreVector s(static_cast<std::size_t>(train.num_tags), 0.0);
  for (int j = 0; j < cfg.k; ++j) {
    const double w =
        (1.0 / cfg.k) * std::exp(-all[static_cast<std::size_t>(j)].first / cfg.sigma);
    for (int lbl :
         train.examples[static_cast<std::size_t>(all[static_cast<std::size_t>(j)].second)]
             .labels)
      s[static_cast<std::size_t>(lbl)] += w;
  }
  return s;
}

// Four points on a line, separable with margin exactly at x = +-1:
// optimum w = 1, b = 0, objective C * 0 + 0.5.
Dataset svm_toy() {
  Dataset ds;
  ds.num_tags = 2;  // tag 0 is the one under test; tag 1 marks negatives
  ds.dim = 1;
  ds.tag_names = {"pos", "neg"};
  for (double x : {1.0, 2.0}) {
    Example e;
    e.features = {x};
    e.labels = {0};
    ds.examples.push_back(e);
  }
  for (double x : {-1.0, -2.0}) {
    Example e;
    e.features = {x};
    e.labels = {1};
    ds.examples.push_back(e);
  }
  return ds;
}

}  // namespace

TEST_CASE("knn_posterior matches the full-sort oracle bit for bit") {
  const Dataset train = random_set(60, 6, 4, 3);
  KnnConfig cfg;
  cfg.k = 7;
  cfg.sigma = 0.8;
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> q(4);
    for (double& v : q) v = rng.uniform(-2.0, 2.0);
    REQUIRE(knn_posterior(train, q, cfg) == knn_oracle(train, q, cfg));
  }
}

TEST_CASE("knn_posterior hand-worked example") {
  Dataset train;
  train.num_tags = 2;
  train.dim = 1;
  train.tag_names = {"a", "b"};
  Example e0;
  e0.features = {0.0};
  e0.labels = {0};
  Example e1;
  e1.features = {1.0};
  e1.labels = {1};
  Example e2;
  e2.features = {3.0};
  e2.labels = {0, 1};
  train.examples = {e0, e1, e2};

  KnnConfig cfg;
  cfg.k = 2;
  cfg.sigma = 1.0;
  const ScoreVector s = knn_posterior(train, {0.9}, cfg);
  // neighbors: e1 at 0.01, e0 at 0.81; e2 at 4.41 misses the cut
  REQUIRE(s[0] == 0.5 * std::exp(-0.81));
  REQUIRE(s[1] == 0.5 * std::exp(-0.01));
}

TEST_CASE("knn distance ties break toward the lower index") {
  Dataset train;
  train.num_tags = 2;
  train.dim = 1;
  train.tag_names = {"a", "b"};
  Example e0;
  e0.features = {0.0};
  e0.labels = {0};
  Example e1;
  e1.features = {2.0};
  e1.labels = {1};
  train.examples = {e0, e1};
  KnnConfig cfg;
  cfg.k = 1;
  cfg.sigma = 1.0;
  const ScoreVector s = knn_posterior(train, {1.0}, cfg);  // both at d2 = 1
  REQUIRE(s[0] > 0.0);
  REQUIRE(s[1] == 0.0);
}

TEST_CASE("knn scores live in [0, 1] and k = n sums every example") {
  const Dataset train = random_set(40, 5, 3, 7);
  KnnConfig cfg;
  cfg.k = 40;
  cfg.sigma = 2.0;
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> q(3);
    for (double& v : q) v = rng.uniform(-2.0, 2.0);
    const ScoreVector s = knn_posterior(train, q, cfg);
    for (double v : s) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
    }
  }
}

TEST_CASE("knn is invariant to training order when distances are distinct") {
  const Dataset train = random_set(30, 4, 3, 13);
  Dataset shuffled = train;
  Rng rng(99);
  rng.shuffle(shuffled.examples);
  KnnConfig cfg;
  cfg.k = 5;
  cfg.sigma = 1.0;
  const std::vector<double> q = {0.4, -0.1, 0.2};
  REQUIRE(knn_posterior(train, q, cfg) == knn_posterior(shuffled, q, cfg));
}

TEST_CASE("knn validates its inputs") {
  const Dataset train = random_set(10, 3, 2, 17);
  KnnConfig cfg;
  REQUIRE_THROWS_MATCHES(
      knn_posterior(train, {0.0, 0.0}, cfg), ValidationError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("exceeds training set size")));
  cfg.k = 0;
  REQUIRE_THROWS_AS(knn_posterior(train, {0.0, 0.0}, cfg), ValidationError);
  cfg.k = 3;
  cfg.sigma = 0.0;
  REQUIRE_THROWS_AS(knn_posterior(train, {0.0, 0.0}, cfg), ValidationError);
  cfg.sigma = 1.0;
  REQUIRE_THROWS_MATCHES(
      knn_posterior(train, {0.0}, cfg), ValidationError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("expected 2")));
}

TEST_CASE("svm recovers the toy optimum") {
  const Dataset ds = svm_toy();
  SvmConfig cfg;
  cfg.C = 2.0;
  cfg.epochs = 300;
  cfg.seed = 1;
  const SvmModel m = svm_train(ds, cfg);
  std::vector<int> targets = {1, 1, -1, -1};
  const double obj = svm_objective(m.weights[0], m.bias[0], ds, targets, 2.0);
  // optimum is exactly 0.5; stochastic steps must land close above it
  REQUIRE(obj >= 0.5 - 1e-9);
  REQUIRE(obj < 0.55);
  REQUIRE(m.weights[0][0] == Catch::Approx(1.0).margin(0.1));
  REQUIRE(std::abs(m.bias[0]) < 0.1);
}

TEST_CASE("best-iterate objective never exceeds the all-zero bound") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const Dataset ds = random_set(25, 4, 3, seed);
    SvmConfig cfg;
    cfg.epochs = 2;  // barely trained on purpose
    cfg.seed = seed;
    const SvmModel m = svm_train(ds, cfg);
    const double n = static_cast<double>(ds.examples.size());
    for (int tag = 0; tag < ds.num_tags; ++tag) {
      std::vector<int> targets(ds.examples.size());
      int pos = 0;
      for (std::size_t i = 0; i < ds.examples.size(); ++i) {
        const auto& l = ds.examples[i].labels;
        targets[i] =
            std::binary_search(l.begin(), l.end(), tag) ? 1 : -1;
        pos += targets[i] == 1 ? 1 : 0;
      }
      if (pos == 0) continue;
      const double obj = svm_objective(m.weights[static_cast<std::size_t>(tag)],
                                       m.bias[static_cast<std::size_t>(tag)],
                                       ds, targets, cfg.C);
      REQUIRE(obj <= cfg.C * n + 1e-9);
    }
  }
}

TEST_CASE("tags absent from training data score a constant -1") {
  Dataset ds = random_set(15, 3, 2, 23);
  ds.num_tags = 4;  // tag 3 never appears
  ds.tag_names.push_back("ghost");
  SvmConfig cfg;
  cfg.epochs = 5;
  const SvmModel m = svm_train(ds, cfg);
  REQUIRE(m.weights[3] == std::vector<double>{0.0, 0.0});
  REQUIRE(m.bias[3] == -1.0);
  const ScoreVector s = svm_scores(m, {0.3, 0.4});
  REQUIRE(s[3] == -1.0);
}

TEST_CASE("svm training is bit-deterministic in the seed") {
  const Dataset ds = random_set(20, 4, 3, 29);
  SvmConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 5;
  const SvmModel a = svm_train(ds, cfg);
  const SvmModel b = svm_train(ds, cfg);
  REQUIRE(a.weights == b.weights);
  REQUIRE(a.bias == b.bias);
  cfg.seed = 6;
  const SvmModel c = svm_train(ds, cfg);
  REQUIRE(a.weights != c.weights);
}

TEST_CASE("svm separates an easy two-tag problem") {
  Dataset ds;
  ds.num_tags = 2;
  ds.dim = 2;
  ds.tag_names = {"right", "left"};
  Rng rng(31);
  for (int i = 0; i < 30; ++i) {
    Example e;
    const double side = i % 2 == 0 ? 1.0 : -1.0;
    e.features = {side * (1.5 + rng.uniform()), rng.uniform(-0.5, 0.5)};
    e.labels = {side > 0 ? 0 : 1};
    ds.examples.push_back(e);
  }
  SvmConfig cfg;
  cfg.epochs = 60;
  const SvmModel m = svm_train(ds, cfg);
  for (const Example& ex : ds.examples) {
    const ScoreVector s = svm_scores(m, ex.features);
    const int top = s[0] >= s[1] ? 0 : 1;
    REQUIRE(top == ex.labels[0]);
  }
}

TEST_CASE("svm checkpoint round-trips bit-exactly and rejects bad files") {
  const auto dir = tt::scratch_dir("svm");
  const Dataset ds = random_set(12, 3, 2, 37);
  SvmConfig cfg;
  cfg.epochs = 3;
  const SvmModel m = svm_train(ds, cfg);
  const std::string path = (dir / "svm.txt").string();
  save_svm(m, path);
  const SvmModel r = load_svm(path);
  REQUIRE(r.weights == m.weights);
  REQUIRE(r.bias == m.bias);

  const auto write = [&](const std::string& name, const std::string& body) {
    const std::string p = (dir / name).string();
    tagrank::detail::write_file_atomic(p, body);
    return p;
  };
  REQUIRE_THROWS_AS(load_svm((dir / "missing.txt").string()), ValidationError);
  REQUIRE_THROWS_AS(load_svm(write("magic.txt", "nope\n")), ValidationError);
  REQUIRE_THROWS_AS(
      load_svm(write("short.txt", "svm-checkpoint v1\ntags 2\ndim 1\nw 1 b 0\n")),
      ValidationError);
  REQUIRE_THROWS_MATCHES(
      load_svm(write("nan.txt",
                     "svm-checkpoint v1\ntags 1\ndim 1\nw nan b 0\n")),
      ValidationError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("non-finite")));
}

TEST_CASE("svm config validation") {
  SvmConfig cfg;
  REQUIRE_NOTHROW(validate_svm_config(cfg));
  cfg.C = 0.0;
  REQUIRE_THROWS_AS(validate_svm_config(cfg), ValidationError);
  cfg.C = 2.0;
  cfg.learning_rate = 0.0;
  REQUIRE_THROWS_AS(validate_svm_config(cfg), ValidationError);
  cfg.learning_rate = 1.0;
  cfg.epochs = -1;
  REQUIRE_THROWS_AS(validate_svm_config(cfg), ValidationError);
}

TEST_CASE("svm_scores computes affine scores") {
  SvmModel m;
  m.num_tags = 2;
  m.dim = 2;
  m.weights = {{1.0, -1.0}, {0.5, 0.0}};
  m.bias = {0.25, -0.5};
  const ScoreVector s = svm_scores(m, {2.0, 1.0});
  REQUIRE(s[0] == 1.25);
  REQUIRE(s[1] == 0.5);
  REQUIRE_THROWS_AS(svm_scores(m, {1.0}), ValidationError);
}
