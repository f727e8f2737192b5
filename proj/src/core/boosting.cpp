#include "core/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"

namespace cycleuq {

namespace {

constexpr double kMinGain = 1e-12;
constexpr double kMinHessian = 1e-16;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

void check_labels(const LabeledData& d) {
  bool pos = false;
  bool neg = false;
  for (int l : d.y) {
    if (l == 1) pos = true;
    else if (l == 0) neg = true;
    else throw DataError("labels must be 0 or 1");
  }
  if (!pos || !neg) throw DataError("degenerate labels");
}

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
};

struct SplitScan {
  double g_left = 0.0;
  double h_left = 0.0;
  double last_value = 0.0;
  bool seen = false;
  double best_gain = kMinGain;
  int best_feature = -1;
  double best_threshold = 0.0;
};

// Grows one tree level by level. `node_of[i]` is the current node of sample
// i, or -1 when the sample is outside this tree's row subsample.
RegressionTree grow_tree(const LabeledData& data, const std::vector<std::vector<std::size_t>>& sorted,
                         const std::vector<double>& grad, const std::vector<double>& hess,
                         std::vector<int> node_of, const Hyperparams& hp) {
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> frontier{0};
  std::vector<NodeStats> stats(1);
  for (std::size_t i = 0; i < node_of.size(); ++i) {
    if (node_of[i] < 0) continue;
    stats[0].g += grad[i];
    stats[0].h += hess[i];
  }

  for (int depth = 0; depth < hp.max_depth && !frontier.empty(); ++depth) {
    std::map<int, SplitScan> scans;
    for (int n : frontier) scans[n] = SplitScan{};
    for (std::size_t f = 0; f < data.n_features; ++f) {
      for (auto& [n, s] : scans) {
        s.g_left = s.h_left = 0.0;
        s.seen = false;
      }
      for (std::size_t i : sorted[f]) {
        const int n = node_of[i];
        if (n < 0) continue;
        auto it = scans.find(n);
        if (it == scans.end()) continue;
        SplitScan& s = it->second;
        const double v = data.x[i * data.n_features + f];
        if (s.seen && v > s.last_value) {
          const NodeStats& tot = stats[static_cast<std::size_t>(n)];
          const double hr = tot.h - s.h_left;
          if (s.h_left >= hp.min_child_weight && hr >= hp.min_child_weight) {
            const double gain = split_gain(s.g_left, s.h_left, tot.g - s.g_left, hr, hp.reg_lambda);
            if (gain > s.best_gain) {
              s.best_gain = gain;
              s.best_feature = static_cast<int>(f);
              s.best_threshold = 0.5 * (s.last_value + v);
            }
          }
        }
        s.g_left += grad[i];
        s.h_left += hess[i];
        s.last_value = v;
        s.seen = true;
      }
    }

    std::vector<int> next;
    std::map<int, std::pair<int, int>> children;
    for (int n : frontier) {
      const SplitScan& s = scans[n];
      if (s.best_feature < 0) continue;
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stats.resize(tree.nodes.size());
      TreeNode& node = tree.nodes[static_cast<std::size_t>(n)];
      node.feature = s.best_feature;
      node.threshold = s.best_threshold;
      node.gain = s.best_gain;
      node.left = l;
      node.right = l + 1;
      children[n] = {l, l + 1};
      next.push_back(l);
      next.push_back(l + 1);
    }
    for (std::size_t i = 0; i < node_of.size(); ++i) {
      const int n = node_of[i];
      if (n < 0) continue;
      auto it = children.find(n);
      if (it == children.end()) continue;
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(n)];
      const bool go_left = data.x[i * data.n_features + static_cast<std::size_t>(node.feature)] < node.threshold;
      const int child = go_left ? it->second.first : it->second.second;
      node_of[i] = child;
      stats[static_cast<std::size_t>(child)].g += grad[i];
      stats[static_cast<std::size_t>(child)].h += hess[i];
    }
    frontier = std::move(next);
  }

  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    TreeNode& node = tree.nodes[n];
    if (node.is_leaf()) node.value = -stats[n].g / (stats[n].h + hp.reg_lambda);
  }
  return tree;
}

void validate(const Hyperparams& hp) {
  if (hp.n_trees < 0 || hp.max_depth < 0 || hp.min_child_weight < 0.0 || !(hp.learning_rate > 0.0) ||
      hp.learning_rate > 1.0 || hp.reg_lambda < 0.0 || !(hp.subsample > 0.0) || hp.subsample > 1.0) {
    throw UsageError("hyperparameters out of range");
  }
}

std::vector<int> default_indices(std::vector<int> indices, std::size_t n_features) {
  if (!indices.empty()) {
    if (indices.size() != n_features) throw UsageError("feature index list does not match data width");
    return indices;
  }
  std::vector<int> out(n_features);
  std::iota(out.begin(), out.end(), 0);
  return out;
}

}  // namespace

void LabeledData::push_back(std::span<const double> features, int label) {
  if (features.size() != n_features) throw DataError("feature width mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
}

LabeledData LabeledData::subset(const std::vector<std::size_t>& rows) const {
  LabeledData out;
  out.n_features = n_features;
  for (std::size_t r : rows) out.push_back(row(r), y[r]);
  return out;
}

LabeledData LabeledData::from_features(const std::vector<FeatureVector>& fs, const std::vector<int>& labels,
                                       const std::vector<int>& feature_indices) {
  if (fs.size() != labels.size()) throw DataError("features and labels differ in length");
  LabeledData out;
  out.n_features = feature_indices.size();
  std::vector<double> row(out.n_features);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto v = fs[i].values();
    for (std::size_t j = 0; j < feature_indices.size(); ++j) {
      const int k = feature_indices[j];
      if (k < 0 || k >= static_cast<int>(kFeatureCount)) throw UsageError("feature index out of range");
      row[j] = v[static_cast<std::size_t>(k)];
    }
    out.push_back(row, labels[i]);
  }
  return out;
}

double RegressionTree::predict(std::span<const double> row) const {
  std::size_t n = 0;
  while (!nodes[n].is_leaf()) {
    const TreeNode& node = nodes[n];
    n = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left
                                                                                              : node.right);
  }
  return nodes[n].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (nodes[n].is_leaf()) continue;
    d[static_cast<std::size_t>(nodes[n].left)] = d[n] + 1;
    d[static_cast<std::size_t>(nodes[n].right)] = d[n] + 1;
    best = std::max(best, d[n] + 1);
  }
  return best;
}

std::size_t HyperGrid::size() const {
  return n_trees.size() * max_depth.size() * min_child_weight.size() * learning_rate.size() *
         reg_lambda.size() * subsample.size();
}

Hyperparams HyperGrid::at(std::size_t flat) const {
  Hyperparams hp;
  auto take = [&flat](const auto& axis) {
    const auto v = axis[flat % axis.size()];
    flat /= axis.size();
    return v;
  };
  hp.n_trees = take(n_trees);
  hp.max_depth = take(max_depth);
  hp.min_child_weight = take(min_child_weight);
  hp.learning_rate = take(learning_rate);
  hp.reg_lambda = take(reg_lambda);
  hp.subsample = take(subsample);
  return hp;
}

double BoostedEnsemble::raw_score(std::span<const double> row) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(row);
  return base_score + learning_rate * sum;
}

BoostedEnsemble train_boosted(const LabeledData& train, const Hyperparams& hp, std::uint64_t seed,
                              std::vector<int> feature_indices) {
  validate(hp);
  check_labels(train);
  const std::size_t n = train.size();

  BoostedEnsemble model;
  model.hp = hp;
  model.learning_rate = hp.learning_rate;
  model.feature_indices = default_indices(std::move(feature_indices), train.n_features);
  const double p = static_cast<double>(std::count(train.y.begin(), train.y.end(), 1)) / static_cast<double>(n);
  model.base_score = std::log(p / (1.0 - p));

  std::vector<std::vector<std::size_t>> sorted(train.n_features, std::vector<std::size_t>(n));
  for (std::size_t f = 0; f < train.n_features; ++f) {
    std::iota(sorted[f].begin(), sorted[f].end(), std::size_t{0});
    std::stable_sort(sorted[f].begin(), sorted[f].end(), [&](std::size_t a, std::size_t b) {
      return train.x[a * train.n_features + f] < train.x[b * train.n_features + f];
    });
  }

  std::vector<double> score(n, model.base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  const auto sample_count = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(hp.subsample * static_cast<double>(n))));
  std::vector<std::size_t> perm(n);

  for (int t = 0; t < hp.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double pi = sigmoid(score[i]);
      grad[i] = pi - train.y[i];
      hess[i] = std::max(pi * (1.0 - pi), kMinHessian);
    }
    std::vector<int> node_of(n, 0);
    if (sample_count < n) {
      CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = 0; i < sample_count; ++i) {
        std::swap(perm[i], perm[i + static_cast<std::size_t>(rng.below(n - i))]);
      }
      std::fill(node_of.begin(), node_of.end(), -1);
      for (std::size_t i = 0; i < sample_count; ++i) node_of[perm[i]] = 0;
    }
    RegressionTree tree = grow_tree(train, sorted, grad, hess, std::move(node_of), hp);
    for (std::size_t i = 0; i < n; ++i) score[i] += hp.learning_rate * tree.predict(train.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

double predict_proba(const BoostedEnsemble& model, std::span<const double> row) {
  if (row.size() != model.n_features()) throw DataError("feature width mismatch");
  return sigmoid(model.raw_score(row));
}

double predict_proba(const BoostedEnsemble& model, const FeatureVector& f) {
  const auto v = f.values();
  std::vector<double> row;
  row.reserve(model.n_features());
  for (int k : model.feature_indices) row.push_back(v[static_cast<std::size_t>(k)]);
  return predict_proba(model, row);
}

std::vector<double> predict_proba(const BoostedEnsemble& model, const LabeledData& data) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict_proba(model, data.row(i));
  return out;
}

int predict_label(const BoostedEnsemble& model, const FeatureVector& f) {
  return predict_proba(model, f) > model.threshold ? 1 : 0;
}

double logistic_loss(const BoostedEnsemble& model, const LabeledData& data) {
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = model.raw_score(data.row(i));
    // log(1 + e^z) - y z, computed stably.
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += softplus - data.y[i] * z;
  }
  return loss / static_cast<double>(data.size());
}

std::pair<LabeledData, LabeledData> split_train_valid(const LabeledData& data, std::uint64_t seed) {
  if (data.size() < 10) throw DataError("split needs at least 10 samples");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y[i] != 0 && data.y[i] != 1) throw DataError("labels must be 0 or 1");
    by_class[data.y[i]].push_back(i);
  }
  if (by_class[0].size() < 2 || by_class[1].size() < 2) throw DataError("too few samples per class to split");

  // Largest-remainder allocation of round(0.2 n) validation slots.
  const auto total_valid = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(data.size())));
  std::size_t quota[2];
  double remainder[2];
  for (int c = 0; c < 2; ++c) {
    const double exact = 0.2 * static_cast<double>(by_class[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
  }
  std::size_t assigned = quota[0] + quota[1];
  while (assigned < total_valid) {
    const int c = remainder[1] > remainder[0] ? 1 : 0;
    ++quota[c];
    remainder[c] = -1.0;
    ++assigned;
  }
  for (int c = 0; c < 2; ++c) quota[c] = std::clamp<std::size_t>(quota[c], 1, by_class[c].size() - 1);

  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> valid_rows;
  for (int c = 0; c < 2; ++c) {
    auto idx = by_class[c];
    CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.below(i))]);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(quota[c]), idx.end());
    valid_rows.insert(valid_rows.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    train_rows.insert(train_rows.end(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]), idx.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(valid_rows.begin(), valid_rows.end());
  return {data.subset(train_rows), data.subset(valid_rows)};
}

double select_threshold(const BoostedEnsemble& model, const LabeledData& valid) {
  check_labels(valid);
  const auto scores = predict_proba(model, valid);
  std::vector<double> uniq = scores;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < 2) return 0.5;
  double best_threshold = 0.5;
  double best_f1 = -1.0;
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
    const double t = 0.5 * (uniq[i] + uniq[i + 1]);
    const double score = f1(threshold_scores(scores, t), valid.y);
    if (score >= best_f1) {
      best_f1 = score;
      best_threshold = t;
    }
  }
  return best_threshold;
}

TuneResult tune_hyperparams(const LabeledData& data, const HyperGrid& grid, int budget, std::uint64_t seed,
                            std::vector<int> feature_indices) {
  if (budget < 1) throw UsageError("tuning budget must be >= 1");
  if (grid.size() == 0) throw UsageError("hyperparameter grid is empty");
  auto [train, valid] = split_train_valid(data, derive_seed(seed, "split"));
  const std::uint64_t train_seed = derive_seed(seed, "train");

  TuneResult result;
  auto evaluate = [&](const Hyperparams& hp, int phase) {
    for (const auto& t : result.trials) {
      if (t.hp == hp) return t.valid_auc;
    }
    const BoostedEnsemble m = train_boosted(train, hp, train_seed, feature_indices);
    const double auc = roc_auc(ScoredLabels{predict_proba(m, valid), valid.y});
    result.trials.push_back(TuneTrial{hp, auc, phase});
    return auc;
  };

  // Phase 1: distinct random grid points.
  std::vector<std::size_t> flat(grid.size());
  std::iota(flat.begin(), flat.end(), std::size_t{0});
  CounterRng rng(derive_seed(seed, "grid"));
  const std::size_t draws = std::min<std::size_t>(static_cast<std::size_t>(budget), flat.size());
  for (std::size_t i = 0; i < draws; ++i) std::swap(flat[i], flat[i + static_cast<std::size_t>(rng.below(flat.size() - i))]);

  Hyperparams best = grid.at(flat[0]);
  double best_auc = -1.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const Hyperparams hp = grid.at(flat[i]);
    const double auc = evaluate(hp, 1);
    if (auc > best_auc) {
      best_auc = auc;
      best = hp;
    }
  }

  // Phase 2: one parameter at a time over its full axis.
  auto sweep = [&](const auto& axis, auto member) {
    for (const auto& v : axis) {
      Hyperparams hp = best;
      hp.*member = v;
      if (hp == best) continue;
      const double auc = evaluate(hp, 2);
      if (auc > best_auc) {
        best_auc = auc;
        best = hp;
      }
    }
  };
  sweep(grid.n_trees, &Hyperparams::n_trees);
  sweep(grid.max_depth, &Hyperparams::max_depth);
  sweep(grid.min_child_weight, &Hyperparams::min_child_weight);
  sweep(grid.learning_rate, &Hyperparams::learning_rate);
  sweep(grid.reg_lambda, &Hyperparams::reg_lambda);
  sweep(grid.subsample, &Hyperparams::subsample);

  result.hp = best;
  result.valid_auc = best_auc;
  result.model = train_boosted(train, best, train_seed, feature_indices);
  result.model.threshold = select_threshold(result.model, valid);
  return result;
}

std::vector<double> feature_importance(const BoostedEnsemble& model) {
  std::vector<double> imp(model.n_features(), 0.0);
  double total = 0.0;
  for (const auto& t : model.trees) {
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) continue;
      imp[static_cast<std::size_t>(n.feature)] += n.gain;
      total += n.gain;
    }
  }
  if (total <= 0.0) throw DataError("no splits");
  for (double& v : imp) v /= total;
  return imp;
}

namespace {

nlohmann::json node_json(const RegressionTree& t, std::size_t n) {
  const TreeNode& node = t.nodes[n];
  if (node.is_leaf()) return {{"leaf", node.value}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"gain", node.gain},
          {"left", node_json(t, static_cast<std::size_t>(node.left))},
          {"right", node_json(t, static_cast<std::size_t>(node.right))}};
}

int parse_node(const nlohmann::json& j, RegressionTree& t) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("leaf")) {
    t.nodes[static_cast<std::size_t>(id)].value = j.at("leaf").get<double>();
    return id;
  }
  TreeNode node;
  node.feature = j.at("feature").get<int>();
  node.threshold = j.at("threshold").get<double>();
  node.gain = j.value("gain", 0.0);
  node.left = parse_node(j.at("left"), t);
  node.right = parse_node(j.at("right"), t);
  t.nodes[static_cast<std::size_t>(id)] = node;
  return id;
}

}  // namespace

std::string ensemble_json(const BoostedEnsemble& model) {
  nlohmann::json j;
  j["feature_indices"] = model.feature_indices;
  j["base_score"] = model.base_score;
  j["learning_rate"] = model.learning_rate;
  j["threshold"] = model.threshold;
  j["hp"] = {{"n_trees", model.hp.n_trees},       {"max_depth", model.hp.max_depth},
             {"min_child_weight", model.hp.min_child_weight},
             {"learning_rate", model.hp.learning_rate}, {"reg_lambda", model.hp.reg_lambda},
             {"subsample", model.hp.subsample}};
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(node_json(t, 0));
  j["trees"] = trees;
  return j.dump();
}

BoostedEnsemble parse_ensemble_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    BoostedEnsemble m;
    m.feature_indices = j.at("feature_indices").get<std::vector<int>>();
    for (int k : m.feature_indices) {
      if (k < 0 || k >= static_cast<int>(kFeatureCount)) throw DataError("feature index out of range");
    }
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.threshold = j.at("threshold").get<double>();
    const auto& hp = j.at("hp");
    m.hp.n_trees = hp.at("n_trees").get<int>();
    m.hp.max_depth = hp.at("max_depth").get<int>();
    m.hp.min_child_weight = hp.at("min_child_weight").get<double>();
    m.hp.learning_rate = hp.at("learning_rate").get<double>();
    m.hp.reg_lambda = hp.at("reg_lambda").get<double>();
    m.hp.subsample = hp.at("subsample").get<double>();
    for (const auto& tj : j.at("trees")) {
      RegressionTree t;
      parse_node(tj, t);
      for (const auto& n : t.nodes) {
        if (!n.is_leaf() && n.feature >= static_cast<int>(m.n_features())) {
          throw DataError("tree split on a feature the model does not consume");
        }
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad classifier JSON: ") + e.what());
  }
}

}  // namespace cycleuq
