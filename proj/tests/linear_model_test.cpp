#include <gtest/gtest.h>

#include "core/error.hpp"
#include "core/linear_model.hpp"
#include "core/rng.hpp"

namespace cycleuq {
namespace {

std::vector<FeatureVector> random_features(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<FeatureVector> fs;
  for (std::size_t i = 0; i < n; ++i) {
    fs.push_back({rng.uniform(0, 2), rng.uniform(0, 5), rng.uniform(-1, 1), rng.uniform(0, 1), rng.uniform(0, 3)});
  }
  return fs;
}

// Gaussian elimination with partial pivoting on the augmented normal system.
std::vector<double> solve_normal_equations(const std::vector<FeatureVector>& fs, const std::vector<double>& t,
                                           double ridge) {
  const std::size_t p = kFeatureCount + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t s = 0; s < fs.size(); ++s) {
    std::array<double, kFeatureCount + 1> row{};
    const auto v = fs[s].values();
    std::copy(v.begin(), v.end(), row.begin());
    row[kFeatureCount] = 1.0;
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += row[i] * row[j];
      a[i][p] += row[i] * t[s];
    }
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) a[i][i] += ridge;
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> x(p);
  for (std::size_t i = 0; i < p; ++i) x[i] = a[i][p] / a[i][i];
  return x;
}

TEST(LinearModel, ExactRecovery) {
  const auto fs = random_features(30, 1);
  const std::array<double, 5> w{0.5, -1.0, 2.0, 0.25, 3.0};
  std::vector<double> t;
  for (const auto& f : fs) {
    const auto v = f.values();
    double y = 0.7;
    for (std::size_t i = 0; i < 5; ++i) y += w[i] * v[i];
    t.push_back(y);
  }
  const LinearModel m = fit_linear(fs, t, 0.0);
  const auto pred = predict(m, fs);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(pred[i], t[i], 1e-9);
  EXPECT_NEAR(r_squared(pred, t), 1.0, 1e-12);
  EXPECT_NEAR(m.intercept, 0.7, 1e-8);
}

TEST(LinearModel, ConstantTargets) {
  const auto fs = random_features(20, 2);
  const LinearModel m = fit_linear(fs, std::vector<double>(20, 1.5), 1e-3);
  for (double w : m.weights) EXPECT_NEAR(w, 0.0, 1e-10);
  EXPECT_NEAR(m.intercept, 1.5, 1e-10);
}

TEST(LinearModel, MatchesGaussianElimination) {
  const auto fs = random_features(50, 3);
  CounterRng rng(4);
  std::vector<double> t;
  for (std::size_t i = 0; i < fs.size(); ++i) t.push_back(rng.uniform(0, 10));
  const LinearModel m = fit_linear(fs, t, 1e-6);
  const auto oracle = solve_normal_equations(fs, t, 1e-6);
  for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_NEAR(m.weights[i], oracle[i], 1e-8);
  EXPECT_NEAR(m.intercept, oracle[kFeatureCount], 1e-8);
}

TEST(LinearModel, PredictIsAffine) {
  const auto fs = random_features(40, 5);
  CounterRng rng(6);
  std::vector<double> t;
  for (std::size_t i = 0; i < fs.size(); ++i) t.push_back(rng.uniform(0, 1));
  const LinearModel m = fit_linear(fs, t, 1e-8);
  EXPECT_DOUBLE_EQ(predict(m, FeatureVector{}), m.intercept);
  const auto a = fs[0].values();
  const auto b = fs[1].values();
  const double alpha = 0.3;
  std::array<double, 5> mix{};
  for (std::size_t i = 0; i < 5; ++i) mix[i] = alpha * a[i] + (1 - alpha) * b[i];
  EXPECT_NEAR(predict(m, FeatureVector::from_values(mix)), alpha * predict(m, fs[0]) + (1 - alpha) * predict(m, fs[1]),
              1e-10);
  const auto batch = predict(m, fs);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    double dot = m.intercept;
    const auto v = fs[i].values();
    for (std::size_t j = 0; j < 5; ++j) dot += m.weights[j] * v[j];
    EXPECT_NEAR(batch[i], dot, 1e-12);
  }
}

TEST(LinearModel, RidgeNeverImprovesTrainingFit) {
  const auto fs = random_features(30, 7);
  CounterRng rng(8);
  std::vector<double> t;
  for (const auto& f : fs) t.push_back(f.eps_y + rng.uniform(-0.5, 0.5));
  const double r0 = r_squared(predict(fit_linear(fs, t, 0.0), fs), t);
  for (double ridge : {1e-4, 1e-1, 10.0}) {
    EXPECT_GE(r0 + 1e-12, r_squared(predict(fit_linear(fs, t, ridge), fs), t));
  }
}

TEST(RSquared, HandCases) {
  const std::vector<double> a{1, 2, 3};
  EXPECT_DOUBLE_EQ(r_squared(a, a), 1.0);
  EXPECT_DOUBLE_EQ(r_squared({2, 2, 2}, a), 0.0);
  EXPECT_DOUBLE_EQ(r_squared({1, 2, 4}, a), 0.5);
  EXPECT_THROW(r_squared({1, 2}, {1, 1}), DataError);
}

TEST(LinearModel, JsonRoundTrip) {
  LinearModel m;
  m.weights = {0.1, -2.0, 1.0 / 3.0, 0.0, 5e-9};
  m.intercept = 0.25;
  m.ridge = 1e-8;
  const LinearModel back = parse_linear_model_json(linear_model_json(m));
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_EQ(back.ridge, m.ridge);
}

}  // namespace
}  // namespace cycleuq
