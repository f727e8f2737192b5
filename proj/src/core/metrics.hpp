#pragma once

#include <cstddef>
#include <vector>

namespace cycleuq {

struct ScoredLabels {
  std::vector<double> scores;
  std::vector<int> labels;  // 0 = negative (ID), 1 = positive (OOD)
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

Confusion confusion(const std::vector<int>& pred, const std::vector<int>& labels);
double accuracy(const std::vector<int>& pred, const std::vector<int>& labels);
// Zero when the harmonic mean's denominator vanishes.
double f1(const std::vector<int>& pred, const std::vector<int>& labels);
// Mann-Whitney probability that a positive outranks a negative; ties count 1/2.
double roc_auc(const ScoredLabels& s);
// Step-wise AP; equal scores form one rank group.
double average_precision(const ScoredLabels& s);

std::vector<int> threshold_scores(const std::vector<double>& scores, double threshold);

}  // namespace cycleuq
