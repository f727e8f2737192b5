#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/regression.hpp"

namespace cycleuq {

// Row-major design matrix with binary labels (0 = ID, 1 = OOD).
struct LabeledData {
  std::size_t n_features = 0;
  std::vector<double> x;
  std::vector<int> y;

  std::size_t size() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(x).subspan(i * n_features, n_features);
  }
  void push_back(std::span<const double> features, int label);
  LabeledData subset(const std::vector<std::size_t>& rows) const;

  // Projects feature vectors onto the given component indices (0..4).
  static LabeledData from_features(const std::vector<FeatureVector>& fs, const std::vector<int>& labels,
                                   const std::vector<int>& feature_indices);
};

// Flat binary tree; node 0 is the root. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  double value = 0.0;  // leaf log-odds contribution before shrinkage
  double gain = 0.0;
  int left = -1;
  int right = -1;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  int depth() const;
};

struct Hyperparams {
  int n_trees = 100;
  int max_depth = 3;
  double min_child_weight = 1.0;
  double learning_rate = 0.1;
  double reg_lambda = 1.0;
  double subsample = 1.0;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct HyperGrid {
  std::vector<int> n_trees{50, 100, 200};
  std::vector<int> max_depth{2, 3, 4};
  std::vector<double> min_child_weight{1.0, 5.0, 10.0};
  std::vector<double> learning_rate{0.05, 0.1, 0.3};
  std::vector<double> reg_lambda{0.1, 1.0, 10.0};
  std::vector<double> subsample{0.8, 1.0};

  std::size_t size() const;
  Hyperparams at(std::size_t flat_index) const;
};

struct BoostedEnsemble {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;
  double threshold = 0.5;
  Hyperparams hp;
  // Which FeatureVector components the model consumes, in column order.
  std::vector<int> feature_indices{0, 1, 2, 3, 4};

  std::size_t n_features() const noexcept { return feature_indices.size(); }
  double raw_score(std::span<const double> row) const;
};

// Second-order boosting on the logistic loss with exact greedy level-wise
// trees. Deterministic per seed; the seed only drives row subsampling.
BoostedEnsemble train_boosted(const LabeledData& train, const Hyperparams& hp, std::uint64_t seed,
                              std::vector<int> feature_indices = {});

double predict_proba(const BoostedEnsemble& model, std::span<const double> row);
double predict_proba(const BoostedEnsemble& model, const FeatureVector& f);
std::vector<double> predict_proba(const BoostedEnsemble& model, const LabeledData& data);
int predict_label(const BoostedEnsemble& model, const FeatureVector& f);

double logistic_loss(const BoostedEnsemble& model, const LabeledData& data);

// Stratified 80/20 split.
std::pair<LabeledData, LabeledData> split_train_valid(const LabeledData& data, std::uint64_t seed);

// F1-maximizing cut over midpoints of the sorted unique validation scores;
// ties resolve to the larger threshold.
double select_threshold(const BoostedEnsemble& model, const LabeledData& valid);

struct TuneTrial {
  Hyperparams hp;
  double valid_auc = 0.0;
  int phase = 1;
};

struct TuneResult {
  Hyperparams hp;
  BoostedEnsemble model;  // refit on the training partition, threshold set
  double valid_auc = 0.0;
  std::vector<TuneTrial> trials;
};

// Random grid search over `budget` points, then coordinate-wise grid search
// in field order, scored by validation AUC.
TuneResult tune_hyperparams(const LabeledData& data, const HyperGrid& grid, int budget, std::uint64_t seed,
                            std::vector<int> feature_indices = {});

// Split gain accumulated per feature, normalized to sum to 1.
std::vector<double> feature_importance(const BoostedEnsemble& model);

std::string ensemble_json(const BoostedEnsemble& model);
BoostedEnsemble parse_ensemble_json(const std::string& text);

}  // namespace cycleuq
