#include "core/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "core/error.hpp"

namespace cycleuq {

namespace {

void check_labels(const ScoredLabels& s) {
  if (s.scores.size() != s.labels.size() || s.scores.empty()) {
    throw DataError("scores and labels must have equal nonzero length");
  }
  for (int l : s.labels) {
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
  }
}

std::vector<std::size_t> order_descending(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

Confusion confusion(const std::vector<int>& pred, const std::vector<int>& labels) {
  if (pred.size() != labels.size()) throw DataError("length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && labels[i] == 1) ++c.tp;
    else if (pred[i] == 1) ++c.fp;
    else if (labels[i] == 1) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& labels) {
  if (pred.size() != labels.size()) throw DataError("length mismatch");
  if (pred.empty()) throw DataError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double f1(const std::vector<int>& pred, const std::vector<int>& labels) {
  const Confusion c = confusion(pred, labels);
  const double denom = 2.0 * static_cast<double>(c.tp) + static_cast<double>(c.fp + c.fn);
  if (c.tp == 0 || denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / denom;
}

double roc_auc(const ScoredLabels& s) {
  check_labels(s);
  const auto idx = order_descending(s.scores);
  // Average ranks (ascending) with ties sharing the mean rank.
  std::vector<double> rank(s.scores.size());
  const std::size_t n = idx.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && s.scores[idx[j + 1]] == s.scores[idx[i]]) ++j;
    // Descending positions i..j map to ascending ranks n-j .. n-i (1-based).
    const double avg = (static_cast<double>(n - j) + static_cast<double>(n - i)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  double pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (s.labels[k] == 1) {
      pos += 1.0;
      rank_sum += rank[k];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw DataError("roc_auc needs both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double average_precision(const ScoredLabels& s) {
  check_labels(s);
  const double total_pos = static_cast<double>(std::count(s.labels.begin(), s.labels.end(), 1));
  if (total_pos == 0.0) throw DataError("average_precision needs at least one positive");
  const auto idx = order_descending(s.scores);
  double ap = 0.0;
  double tp = 0.0;
  std::size_t seen = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    double group_pos = 0.0;
    while (j < idx.size() && s.scores[idx[j]] == s.scores[idx[i]]) {
      group_pos += s.labels[idx[j]];
      ++j;
    }
    seen += j - i;
    tp += group_pos;
    if (group_pos > 0.0) ap += (tp / static_cast<double>(seen)) * (group_pos / total_pos);
    i = j;
  }
  return ap;
}

std::vector<int> threshold_scores(const std::vector<double>& scores, double threshold) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
  return out;
}

}  // namespace cycleuq
