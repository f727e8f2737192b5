#include "core/linear_model.hpp"

#include <cmath>

#include <json.hpp>

#include "core/error.hpp"

namespace cycleuq {

namespace {

constexpr std::size_t kDim = kFeatureCount + 1;
using Matrix = std::array<std::array<double, kDim>, kDim>;

// Cholesky solve of a symmetric positive definite system. A pivot that loses
// all but 1e-12 of its column's own magnitude marks a collinear column.
std::array<double, kDim> cholesky_solve(Matrix a, std::array<double, kDim> rhs) {
  for (std::size_t j = 0; j < kDim; ++j) {
    const double floor = 1e-12 * a[j][j];
    double diag = a[j][j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j][k] * a[j][k];
    if (!(diag > floor) || !(diag > 0.0)) throw NumericalError("rank deficient; increase ridge");
    a[j][j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < kDim; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  for (std::size_t i = 0; i < kDim; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i][k] * rhs[k];
    rhs[i] = s / a[i][i];
  }
  for (std::size_t i = kDim; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t k = i + 1; k < kDim; ++k) s -= a[k][i] * rhs[k];
    rhs[i] = s / a[i][i];
  }
  return rhs;
}

}  // namespace

LinearModel fit_linear(const std::vector<FeatureVector>& features, const std::vector<double>& targets,
                       double ridge) {
  if (features.size() != targets.size()) throw DataError("features and targets differ in length");
  if (features.size() < kDim) throw DataError("linear fit needs at least 6 samples");
  if (!(ridge >= 0.0)) throw UsageError("ridge must be >= 0");

  Matrix normal{};
  std::array<double, kDim> rhs{};
  for (std::size_t s = 0; s < features.size(); ++s) {
    const auto f = features[s].values();
    std::array<double, kDim> row{};
    std::copy(f.begin(), f.end(), row.begin());
    row[kFeatureCount] = 1.0;
    for (std::size_t i = 0; i < kDim; ++i) {
      rhs[i] += row[i] * targets[s];
      for (std::size_t j = 0; j < kDim; ++j) normal[i][j] += row[i] * row[j];
    }
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) normal[i][i] += ridge;

  const auto sol = cholesky_solve(normal, rhs);
  LinearModel m;
  std::copy(sol.begin(), sol.begin() + kFeatureCount, m.weights.begin());
  m.intercept = sol[kFeatureCount];
  m.ridge = ridge;
  return m;
}

double predict(const LinearModel& model, const FeatureVector& f) {
  const auto v = f.values();
  double s = model.intercept;
  for (std::size_t i = 0; i < kFeatureCount; ++i) s += model.weights[i] * v[i];
  return s;
}

std::vector<double> predict(const LinearModel& model, const std::vector<FeatureVector>& fs) {
  std::vector<double> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(predict(model, f));
  return out;
}

double r_squared(const std::vector<double>& predicted, const std::vector<double>& actual) {
  if (predicted.size() != actual.size() || actual.empty()) {
    throw DataError("r_squared needs equal nonzero lengths");
  }
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) throw DataError("r_squared undefined: zero total variance");
  return 1.0 - ss_res / ss_tot;
}

std::string linear_model_json(const LinearModel& model) {
  nlohmann::json j;
  j["weights"] = model.weights;
  j["intercept"] = model.intercept;
  j["ridge"] = model.ridge;
  return j.dump(2);
}

LinearModel parse_linear_model_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    LinearModel m;
    const auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != kFeatureCount) throw DataError("linear model needs 5 weights");
    std::copy(w.begin(), w.end(), m.weights.begin());
    m.intercept = j.at("intercept").get<double>();
    m.ridge = j.value("ridge", 0.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad linear model JSON: ") + e.what());
  }
}

}  // namespace cycleuq
