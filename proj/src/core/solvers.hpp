#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "core/image.hpp"
#include "core/operators.hpp"

namespace cycleuq {

struct WienerParams {
  BlurKernel kernel;
  double lambda = 0.0;
};

struct LandweberParams {
  int factor = 4;
  double lambda = 0.0;
  int steps = 50;
  double step_size = 0.0;
  bool clamp = false;
  // When set, step_size tracks 1/L_op whenever lambda changes.
  bool auto_step = true;
};

// Bound on the spectral norm of the Landweber normal operator
// A^T A + lambda * D^T D for block pooling A and periodic forward differences D.
double landweber_operator_bound(int factor, double lambda);

// Deterministic inverse solver g. Immutable after construction; all
// constructors validate their parameters.
class SolverSpec {
 public:
  static SolverSpec wiener(BlurKernel kernel, double lambda);
  // step_size <= 0 selects 1/L_op automatically.
  static SolverSpec landweber(int factor, double lambda, int steps, double step_size, bool clamp);

  bool is_wiener() const noexcept { return std::holds_alternative<WienerParams>(params_); }
  const WienerParams& wiener_params() const { return std::get<WienerParams>(params_); }
  const LandweberParams& landweber_params() const { return std::get<LandweberParams>(params_); }
  double lambda() const;

  SolverSpec with_lambda(double lambda) const;
  // Wiener only: same lambda, different deconvolution kernel.
  SolverSpec with_kernel(BlurKernel kernel) const;

 private:
  explicit SolverSpec(std::variant<WienerParams, LandweberParams> p) : params_(std::move(p)) {}
  std::variant<WienerParams, LandweberParams> params_;
};

// Per-frequency conj(H) X / (|H|^2 + lambda).
Image wiener_apply(const Image& x, const BlurKernel& kernel, double lambda);

struct LandweberRun {
  Image output;
  std::vector<double> objective;  // value before each iteration and after the last
};

// Gradient descent on 0.5*||A y - x||^2 + 0.5*lambda*||grad y||^2 from the
// nearest-neighbor upsampling of x.
Image landweber_apply(const Image& x, const LandweberParams& p);
LandweberRun landweber_run(const Image& x, const LandweberParams& p, bool record_objective);
double landweber_objective(const Image& y, const Image& x, int factor, double lambda);

Image apply_solver(const Image& x, const SolverSpec& solver);

struct CalibrationPair {
  Image x;
  Image y;
  // Per-sample deconvolution kernel for Wiener prototypes; the prototype's
  // own kernel is used when absent.
  std::optional<BlurKernel> kernel;
};

struct CalibrationResult {
  SolverSpec spec = SolverSpec::wiener(BlurKernel::delta(), 0.0);
  double mean_error = 0.0;
  std::vector<std::pair<double, double>> scan;  // (lambda, mean error) per grid value
};

// Picks the grid lambda with the smallest mean ||g(x) - y||; ties go to the
// larger lambda.
CalibrationResult calibrate_solver(const SolverSpec& proto, const std::vector<CalibrationPair>& id_set,
                                   const std::vector<double>& lambda_grid);

std::string calibration_json(const CalibrationResult& result);

}  // namespace cycleuq
