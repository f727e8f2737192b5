#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numeric>

#include "core/boosting.hpp"
#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "oracles.hpp"

namespace cycleuq {
namespace {

using testing::first_order_stats;
using testing::OracleSplit;
using testing::scan_splits;

LabeledData random_data(std::size_t n, std::size_t width, std::uint64_t seed, double noise = 0.3) {
  CounterRng rng(seed);
  LabeledData d;
  d.n_features = width;
  std::vector<double> row(width);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = std::round(rng.uniform(0, 4) * 8.0) / 8.0;  // coarse values create ties
    const double z = row[0] - 2.0 + (width > 1 ? 0.5 * (row[1] - 2.0) : 0.0) + noise * rng.normal();
    d.push_back(row, z > 0 ? 1 : 0);
  }
  return d;
}

Hyperparams single_tree(int depth) {
  Hyperparams hp;
  hp.n_trees = 1;
  hp.max_depth = depth;
  hp.min_child_weight = 1.0;
  hp.learning_rate = 0.3;
  hp.reg_lambda = 1.0;
  hp.subsample = 1.0;
  return hp;
}

TEST(Boosting, StumpMatchesExhaustiveScan) {
  LabeledData d;
  d.n_features = 1;
  CounterRng rng(1);
  for (int i = 0; i < 60; ++i) {
    const bool ood = i % 2 == 1;
    const double v = ood ? rng.uniform(0.55, 1.0) : rng.uniform(0.0, 0.45);
    d.push_back(std::vector<double>{v}, ood ? 1 : 0);
  }
  const BoostedEnsemble m = train_boosted(d, single_tree(1), 3);
  std::vector<double> g, h;
  first_order_stats(d, g, h);
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  const OracleSplit o = scan_splits(d, all, g, h, single_tree(1));
  const TreeNode& root = m.trees.at(0).nodes.at(0);
  EXPECT_EQ(root.feature, o.feature);
  EXPECT_EQ(root.threshold, o.threshold);
  EXPECT_NEAR(root.gain, o.gain, 1e-9 * o.gain);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(predict_proba(m, d.row(i)) > 0.5, d.y[i] == 1);
}

double gain_of(const LabeledData& d, const std::vector<std::size_t>& rows, const std::vector<double>& g,
               const std::vector<double>& h, const Hyperparams& hp, int feature, double threshold) {
  double gl = 0, hl = 0, gt = 0, ht = 0;
  for (auto i : rows) {
    gt += g[i];
    ht += h[i];
    if (d.row(i)[static_cast<std::size_t>(feature)] < threshold) {
      gl += g[i];
      hl += h[i];
    }
  }
  const double gr = gt - gl, hr = ht - hl;
  return 0.5 * (gl * gl / (hl + hp.reg_lambda) + gr * gr / (hr + hp.reg_lambda) - gt * gt / (ht + hp.reg_lambda));
}

// The gain depends only on per-side gradient sums, so distinct splits can tie
// exactly; a different choice is accepted only when it is such a tie.
void expect_oracle_split(const LabeledData& d, const std::vector<std::size_t>& rows, const std::vector<double>& g,
                         const std::vector<double>& h, const Hyperparams& hp, const TreeNode& node) {
  const OracleSplit o = scan_splits(d, rows, g, h, hp);
  ASSERT_EQ(node.is_leaf(), o.feature < 0);
  if (o.feature < 0) return;
  if (node.feature == o.feature && node.threshold == o.threshold) {
    EXPECT_NEAR(node.gain, o.gain, 1e-9 * o.gain);
  } else {
    EXPECT_NEAR(gain_of(d, rows, g, h, hp, node.feature, node.threshold), o.gain, 1e-12 * o.gain);
  }
}

TEST(Boosting, DepthTwoTreesMatchExhaustiveScan) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const LabeledData d = random_data(40 + 6 * seed, 3, 100 + seed);
    const Hyperparams hp = single_tree(2);
    const BoostedEnsemble m = train_boosted(d, hp, seed);
    std::vector<double> g, h;
    first_order_stats(d, g, h);
    std::vector<std::size_t> all(d.size());
    std::iota(all.begin(), all.end(), 0);
    const RegressionTree& t = m.trees.at(0);
    SCOPED_TRACE(seed);
    expect_oracle_split(d, all, g, h, hp, t.nodes[0]);
    if (t.nodes[0].is_leaf()) continue;
    std::vector<std::size_t> left, right;
    const auto f = static_cast<std::size_t>(t.nodes[0].feature);
    for (auto i : all) (d.row(i)[f] < t.nodes[0].threshold ? left : right).push_back(i);
    expect_oracle_split(d, left, g, h, hp, t.nodes[static_cast<std::size_t>(t.nodes[0].left)]);
    expect_oracle_split(d, right, g, h, hp, t.nodes[static_cast<std::size_t>(t.nodes[0].right)]);
  }
}

TEST(Boosting, DegenerateLabelsRejected) {
  LabeledData d;
  d.n_features = 1;
  for (int i = 0; i < 10; ++i) d.push_back(std::vector<double>{double(i)}, 1);
  EXPECT_THROW(train_boosted(d, Hyperparams{}, 1), DataError);
}

TEST(Boosting, Trains2200RowsQuickly) {
  const LabeledData d = random_data(2200, 5, 7);
  Hyperparams hp;
  hp.n_trees = 200;
  hp.max_depth = 4;
  hp.subsample = 0.8;
  const auto start = std::chrono::steady_clock::now();
  const BoostedEnsemble m = train_boosted(d, hp, 1);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LE(secs, 1.0);
  EXPECT_EQ(m.trees.size(), 200u);
}

TEST(Boosting, EmptyEnsembleIsSigmoidOfBase) {
  BoostedEnsemble m;
  m.base_score = 0.7;
  m.feature_indices = {0};
  EXPECT_DOUBLE_EQ(predict_proba(m, std::vector<double>{3.0}), 1.0 / (1.0 + std::exp(-0.7)));
}

TEST(Boosting, BatchEqualsPerSample) {
  const LabeledData d = random_data(100, 5, 8);
  const BoostedEnsemble m = train_boosted(d, Hyperparams{}, 2);
  const auto batch = predict_proba(m, d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(batch[i], predict_proba(m, d.row(i)));
    EXPECT_GT(batch[i], 0.0);
    EXPECT_LT(batch[i], 1.0);
  }
}

TEST(Boosting, TrainingLossNonIncreasingPerTree) {
  const LabeledData d = random_data(300, 5, 9, 0.8);
  Hyperparams hp;
  hp.n_trees = 60;
  hp.max_depth = 3;
  const BoostedEnsemble full = train_boosted(d, hp, 3);
  BoostedEnsemble prefix = full;
  prefix.trees.clear();
  double prev = logistic_loss(prefix, d);
  for (const auto& t : full.trees) {
    prefix.trees.push_back(t);
    const double loss = logistic_loss(prefix, d);
    EXPECT_LE(loss, prev + 1e-12);
    prev = loss;
  }
}

TEST(Boosting, Deterministic) {
  const LabeledData d = random_data(200, 5, 10);
  Hyperparams hp;
  hp.subsample = 0.8;
  const BoostedEnsemble a = train_boosted(d, hp, 42);
  const BoostedEnsemble b = train_boosted(d, hp, 42);
  EXPECT_EQ(ensemble_json(a), ensemble_json(b));
  EXPECT_EQ(predict_proba(a, d), predict_proba(b, d));
}

TEST(Boosting, LabelSymmetry) {
  const LabeledData d = random_data(150, 4, 11, 0.5);
  LabeledData flipped = d;
  for (auto& y : flipped.y) y = 1 - y;
  Hyperparams hp;
  hp.n_trees = 30;
  const BoostedEnsemble a = train_boosted(d, hp, 1);
  const BoostedEnsemble b = train_boosted(flipped, hp, 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(predict_proba(b, d.row(i)), 1.0 - predict_proba(a, d.row(i)), 1e-9);
  }
}

TEST(Boosting, FeatureIndicesProjectFeatureVectors) {
  std::vector<FeatureVector> fs;
  std::vector<int> labels;
  CounterRng rng(12);
  for (int i = 0; i < 80; ++i) {
    const double dx1 = rng.uniform();
    fs.push_back({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), dx1});
    labels.push_back(dx1 > 0.5);
  }
  const LabeledData d = LabeledData::from_features(fs, labels, {4});
  const BoostedEnsemble m = train_boosted(d, Hyperparams{}, 1, {4});
  for (std::size_t i = 0; i < fs.size(); ++i) {
    EXPECT_EQ(predict_proba(m, fs[i]), predict_proba(m, std::vector<double>{fs[i].dx1}));
  }
}

TEST(Split, SizesAndStratification) {
  LabeledData d;
  d.n_features = 1;
  for (int i = 0; i < 100; ++i) d.push_back(std::vector<double>{double(i)}, i < 45 ? 1 : 0);
  const auto [train, valid] = split_train_valid(d, 5);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(valid.size(), 20u);
  const auto pos = std::count(valid.y.begin(), valid.y.end(), 1);
  EXPECT_NEAR(static_cast<double>(pos), 0.2 * 45, 1.0);
  const auto [train2, valid2] = split_train_valid(d, 5);
  EXPECT_EQ(valid.x, valid2.x);
  const auto [train3, valid3] = split_train_valid(d, 6);
  EXPECT_NE(valid.x, valid3.x);
}

TEST(Split, TooSmallRejected) {
  LabeledData d;
  d.n_features = 1;
  for (int i = 0; i < 9; ++i) d.push_back(std::vector<double>{double(i)}, i % 2);
  EXPECT_THROW(split_train_valid(d, 1), DataError);
}

// One-feature model whose tree maps x = 0, 1, 2, 3 to the given probabilities.
BoostedEnsemble lookup_model(const std::array<double, 4>& p) {
  RegressionTree t;
  auto logit = [](double q) { return std::log(q / (1 - q)); };
  t.nodes = {{0, 1.5, 0, 1, 1, 2},       {0, 0.5, 0, 1, 3, 4},       {0, 2.5, 0, 1, 5, 6},
             {-1, 0, logit(p[0]), 0, -1, -1}, {-1, 0, logit(p[1]), 0, -1, -1}, {-1, 0, logit(p[2]), 0, -1, -1},
             {-1, 0, logit(p[3]), 0, -1, -1}};
  BoostedEnsemble m;
  m.trees = {t};
  m.learning_rate = 1.0;
  m.feature_indices = {0};
  return m;
}

LabeledData lookup_data(const std::vector<int>& labels) {
  LabeledData d;
  d.n_features = 1;
  for (std::size_t i = 0; i < labels.size(); ++i) d.push_back(std::vector<double>{double(i)}, labels[i]);
  return d;
}

TEST(Threshold, HandCase) {
  const BoostedEnsemble m = lookup_model({0.1, 0.4, 0.6, 0.9});
  const LabeledData v = lookup_data({0, 0, 1, 1});
  const double t = select_threshold(m, v);
  EXPECT_NEAR(t, 0.5, 1e-12);
  EXPECT_EQ(f1(threshold_scores(predict_proba(m, v), t), v.y), 1.0);
}

TEST(Threshold, NeverWorseThanHalf) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(seed);
    std::array<double, 4> p;
    for (auto& q : p) q = rng.uniform(0.05, 0.95);
    const LabeledData v = lookup_data({0, 1, 0, 1});
    const BoostedEnsemble m = lookup_model(p);
    const auto scores = predict_proba(m, v);
    EXPECT_GE(f1(threshold_scores(scores, select_threshold(m, v)), v.y), f1(threshold_scores(scores, 0.5), v.y));
  }
}

TEST(Tune, SinglePointGrid) {
  const LabeledData d = random_data(120, 5, 13);
  HyperGrid grid{{20}, {2}, {1.0}, {0.1}, {1.0}, {1.0}};
  const TuneResult r = tune_hyperparams(d, grid, 1, 4);
  EXPECT_EQ(r.hp, grid.at(0));
  EXPECT_EQ(r.trials.size(), 1u);
}

TEST(Tune, FindsPlantedOptimum) {
  // XOR labels: additive stumps cannot separate them, depth-2 trees can.
  LabeledData d;
  d.n_features = 2;
  CounterRng rng(14);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    d.push_back(std::vector<double>{a, b}, (a > 0) != (b > 0) ? 1 : 0);
  }
  HyperGrid grid{{50}, {1, 2}, {1.0}, {0.3}, {1.0}, {1.0}};
  const TuneResult r = tune_hyperparams(d, grid, 1, 5);
  EXPECT_EQ(r.hp.max_depth, 2);
  EXPECT_GT(r.valid_auc, 0.95);
}

TEST(Tune, DeskScaleWallTime) {
  const LabeledData d = random_data(220, 5, 15, 0.5);
  const auto start = std::chrono::steady_clock::now();
  const TuneResult r = tune_hyperparams(d, HyperGrid{}, 20, 6);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LE(secs, 5.0);
  EXPECT_GE(r.trials.size(), 20u);
}

TEST(Tune, Deterministic) {
  const LabeledData d = random_data(150, 5, 16, 0.5);
  const TuneResult a = tune_hyperparams(d, HyperGrid{}, 5, 7);
  const TuneResult b = tune_hyperparams(d, HyperGrid{}, 5, 7);
  EXPECT_EQ(ensemble_json(a.model), ensemble_json(b.model));
  EXPECT_EQ(a.model.threshold, b.model.threshold);
}

TEST(Importance, SingleStump) {
  BoostedEnsemble m;
  m.feature_indices = {0, 1, 2, 3, 4};
  RegressionTree t;
  t.nodes = {{1, 0.5, 0, 2.0, 1, 2}, {-1, 0, -1, 0, -1, -1}, {-1, 0, 1, 0, -1, -1}};
  m.trees = {t};
  EXPECT_EQ(feature_importance(m), (std::vector<double>{0, 1, 0, 0, 0}));
  RegressionTree u = t;
  u.nodes[0].feature = 4;
  u.nodes[0].gain = 1.0;
  m.trees[0].nodes[0].gain = 3.0;
  m.trees.push_back(u);
  EXPECT_EQ(feature_importance(m), (std::vector<double>{0, 0.75, 0, 0, 0.25}));
}

TEST(Importance, NoSplitsRejected) {
  BoostedEnsemble m;
  m.trees = {RegressionTree{{TreeNode{}}}};
  EXPECT_THROW(feature_importance(m), DataError);
}

TEST(EnsembleJson, RoundTrip) {
  const LabeledData d = random_data(100, 5, 17);
  BoostedEnsemble m = train_boosted(d, Hyperparams{}, 3);
  m.threshold = 0.37;
  const BoostedEnsemble back = parse_ensemble_json(ensemble_json(m));
  EXPECT_EQ(ensemble_json(back), ensemble_json(m));
  EXPECT_EQ(predict_proba(back, d), predict_proba(m, d));
  EXPECT_THROW(parse_ensemble_json("{\"trees\": 3}"), DataError);
}

}  // namespace
}  // namespace cycleuq
