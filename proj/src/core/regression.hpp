#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/cycle.hpp"

namespace cycleuq {

// d_n ≈ eps * k^n + b over n = start_index .. start_index + len - 1.
struct ExpFit {
  double k_hat = 1.0;      // robustness
  double eps_hat = 0.0;    // uncertainty
  double b_hat = 0.0;      // bias
  double r_squared = 1.0;
  double objective = 0.0;  // residual sum of squares
  int start_index = 1;

  double model(int n) const;
};

struct FitOptions {
  double k_min = 1e-3;
  double k_max = 4.0;
  int grid_points = 200;
  double k_tolerance = 1e-6;
};

// Closed-form (eps, b) minimizing the squared residual for a fixed k, with
// eps clipped at zero.
struct LinearPart {
  double eps = 0.0;
  double b = 0.0;
  double sse = 0.0;
};
LinearPart project_linear(std::span<const double> d, int start_index, double k);

// Variable projection: log-grid scan over k, golden-section refinement of
// every grid-local minimum. When the best fit has eps == 0 the rate is
// unidentifiable and k_hat is reported as 1.
ExpFit fit_exponential(std::span<const double> d, int start_index, const FitOptions& options = {});

inline constexpr std::size_t kFeatureCount = 5;
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {"eps_x", "eps_y", "b_x",
                                                                          "b_y", "dx1"};

// Fixed ordering (eps_x, eps_y, b_x, b_y, dx1).
struct FeatureVector {
  double eps_x = 0.0;
  double eps_y = 0.0;
  double b_x = 0.0;
  double b_y = 0.0;
  double dx1 = 0.0;

  std::array<double, kFeatureCount> values() const { return {eps_x, eps_y, b_x, b_y, dx1}; }
  static FeatureVector from_values(std::span<const double> v);
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct TraceFeatures {
  FeatureVector features;
  ExpFit fit_y;  // over dy, n = 1..N
  ExpFit fit_x;  // over dx, n = 2..N+1
};

TraceFeatures extract_features(const CycleTrace& trace, const FitOptions& options = {});

// One row of the feature CSV: eps_x,eps_y,b_x,b_y,dx1,label,eps0.
struct FeatureRow {
  FeatureVector features;
  std::optional<int> label;
  std::optional<double> eps0;
};

std::string features_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_features_csv(const std::string& text);

}  // namespace cycleuq
