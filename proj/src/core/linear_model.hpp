#pragma once

#include <array>
#include <string>
#include <vector>

#include "core/regression.hpp"

namespace cycleuq {

// Affine map from the five-feature vector to the predicted ||eps_0||.
struct LinearModel {
  std::array<double, kFeatureCount> weights{};
  double intercept = 0.0;
  double ridge = 0.0;
};

// Solves (X^T X + ridge * I) w = X^T t with an unpenalized intercept column.
LinearModel fit_linear(const std::vector<FeatureVector>& features, const std::vector<double>& targets,
                       double ridge);
double predict(const LinearModel& model, const FeatureVector& f);
std::vector<double> predict(const LinearModel& model, const std::vector<FeatureVector>& fs);

// 1 - SS_res / SS_tot.
double r_squared(const std::vector<double>& predicted, const std::vector<double>& actual);

std::string linear_model_json(const LinearModel& model);
LinearModel parse_linear_model_json(const std::string& text);

}  // namespace cycleuq
