#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"

namespace cycleuq {
namespace {

double pair_auc(const ScoredLabels& s) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    if (s.labels[i] != 1) continue;
    for (std::size_t j = 0; j < s.scores.size(); ++j) {
      if (s.labels[j] != 0) continue;
      pairs += 1.0;
      if (s.scores[i] > s.scores[j]) wins += 1.0;
      else if (s.scores[i] == s.scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Mean of precision@k over the ranks k of positives; assumes distinct scores.
double step_ap(const ScoredLabels& s) {
  std::vector<std::size_t> order(s.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.scores[a] > s.scores[b]; });
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (s.labels[order[k]] == 1) {
      hits += 1.0;
      sum += hits / static_cast<double>(k + 1);
    }
  }
  return sum / hits;
}

ScoredLabels random_scored(std::size_t n, std::uint64_t seed, bool coarse) {
  CounterRng rng(seed);
  ScoredLabels s;
  for (std::size_t i = 0; i < n; ++i) {
    s.labels.push_back(static_cast<int>(rng.below(2)));
    s.scores.push_back(coarse ? std::floor(rng.uniform() * 5.0) / 5.0 : rng.uniform());
  }
  s.labels[0] = 0;
  s.labels[1] = 1;
  return s;
}

TEST(Accuracy, Cases) {
  EXPECT_EQ(accuracy({1, 0, 1}, {1, 0, 1}), 1.0);
  EXPECT_EQ(accuracy({1, 0, 1, 0}, {1, 1, 1, 0}), 0.75);
  EXPECT_EQ(accuracy({0, 1}, {1, 0}), 0.0);
  EXPECT_EQ(accuracy({1, 1, 1, 1}, {0, 1, 0, 1}), 0.5);
  EXPECT_EQ(accuracy({0, 0, 0, 0}, {0, 1, 0, 1}), 0.5);
  EXPECT_THROW(accuracy({1}, {1, 0}), DataError);
}

TEST(RocAuc, Cases) {
  EXPECT_EQ(roc_auc({{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}}), 1.0);
  EXPECT_EQ(roc_auc({{0.5, 0.5, 0.5}, {0, 1, 1}}), 0.5);
  const ScoredLabels hand{{0.5, 0.4, 0.9}, {0, 1, 1}};
  EXPECT_DOUBLE_EQ(roc_auc(hand), pair_auc(hand));
  EXPECT_DOUBLE_EQ(roc_auc(hand), 0.5);
  EXPECT_THROW(roc_auc({{0.1, 0.2}, {1, 1}}), DataError);
}

TEST(RocAuc, MatchesPairEnumeration) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const ScoredLabels s = random_scored(60, seed, seed % 2 == 0);
    EXPECT_NEAR(roc_auc(s), pair_auc(s), 1e-12);
  }
}

TEST(RocAuc, MonotoneTransformInvariant) {
  const ScoredLabels s = random_scored(80, 7, true);
  ScoredLabels t = s;
  for (auto& v : t.scores) v = std::exp(3.0 * v) - 2.0;
  EXPECT_EQ(roc_auc(s), roc_auc(t));
}

TEST(RocAuc, LabelFlipAntisymmetry) {
  const ScoredLabels s = random_scored(50, 8, false);
  ScoredLabels f = s;
  for (auto& l : f.labels) l = 1 - l;
  EXPECT_NEAR(roc_auc(f), 1.0 - roc_auc(s), 1e-12);
}

TEST(AveragePrecision, Cases) {
  EXPECT_EQ(average_precision({{0.9, 0.8, 0.1}, {1, 1, 0}}), 1.0);
  EXPECT_EQ(average_precision({{0.9, 0.1}, {0, 1}}), 0.5);
  const ScoredLabels hand{{0.9, 0.7, 0.6, 0.3, 0.2}, {1, 0, 1, 0, 1}};
  EXPECT_NEAR(average_precision(hand), step_ap(hand), 1e-15);
  EXPECT_THROW(average_precision({{0.1, 0.2}, {0, 0}}), DataError);
}

TEST(AveragePrecision, MatchesStepOracle) {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const ScoredLabels s = random_scored(40, seed, false);
    EXPECT_NEAR(average_precision(s), step_ap(s), 1e-12);
  }
}

TEST(AveragePrecision, TiedGroupCountsOnce) {
  // One rank group holding a positive and a negative: precision 1/2 at recall 1.
  EXPECT_NEAR(average_precision({{0.5, 0.5}, {1, 0}}), 0.5, 1e-15);
}

TEST(F1, Cases) {
  EXPECT_EQ(f1({1, 0, 1}, {1, 0, 1}), 1.0);
  EXPECT_EQ(f1({0, 0, 0}, {1, 0, 1}), 0.0);
  const std::vector<int> pred{1, 1, 1, 0, 0};
  const std::vector<int> labels{1, 1, 0, 1, 0};
  const Confusion c = confusion(pred, labels);
  EXPECT_EQ(c.tp, 2u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  const double precision = 2.0 / 3.0, recall = 2.0 / 3.0;
  EXPECT_NEAR(f1(pred, labels), 2 * precision * recall / (precision + recall), 1e-15);
}

TEST(Threshold, Scores) {
  EXPECT_EQ(threshold_scores({0.1, 0.5, 0.9}, 0.5), (std::vector<int>{0, 0, 1}));
}

}  // namespace
}  // namespace cycleuq
