#include "core/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/fft.hpp"

namespace cycleuq {

namespace {

constexpr double kSingularSpectrum = 1e-20;

void validate(const LandweberParams& p) {
  if (p.factor < 1) throw UsageError("landweber factor must be >= 1");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) throw UsageError("landweber lambda must be >= 0");
  if (p.steps < 0) throw UsageError("landweber steps must be >= 0");
  const double bound = 2.0 / landweber_operator_bound(p.factor, p.lambda);
  if (!(p.step_size > 0.0) || p.step_size >= bound) {
    throw UsageError("landweber step_size violates stability bound (must be in (0, " +
                     std::to_string(bound) + "))");
  }
}

// D^T D y for periodic forward differences: the negated 5-point Laplacian.
void apply_dtd(const std::vector<double>& y, std::size_t h, std::size_t w, std::vector<double>& out) {
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t rn = (r + 1) % h;
    const std::size_t rp = (r + h - 1) % h;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t cn = (c + 1) % w;
      const std::size_t cp = (c + w - 1) % w;
      out[r * w + c] = 4.0 * y[r * w + c] - y[rn * w + c] - y[rp * w + c] - y[r * w + cn] -
                       y[r * w + cp];
    }
  }
}

double objective_raw(const std::vector<double>& y, std::size_t h, std::size_t w, const Image& x,
                     int factor, double lambda) {
  const auto f = static_cast<std::size_t>(factor);
  const std::size_t ow = w / f;
  std::vector<double> pooled(x.size(), 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) pooled[(r / f) * ow + c / f] += y[r * w + c];
  }
  const double inv = 1.0 / static_cast<double>(f * f);
  double data = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    const double d = pooled[i] * inv - x[i];
    data += d * d;
  }
  double smooth = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double v = y[r * w + c];
      const double dx = y[r * w + (c + 1) % w] - v;
      const double dy = y[((r + 1) % h) * w + c] - v;
      smooth += dx * dx + dy * dy;
    }
  }
  return 0.5 * data + 0.5 * lambda * smooth;
}

}  // namespace

double landweber_operator_bound(int factor, double lambda) {
  return 1.0 / static_cast<double>(factor * factor) + 8.0 * lambda;
}

SolverSpec SolverSpec::wiener(BlurKernel kernel, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("wiener lambda must be >= 0");
  return SolverSpec(WienerParams{std::move(kernel), lambda});
}

SolverSpec SolverSpec::landweber(int factor, double lambda, int steps, double step_size, bool clamp) {
  LandweberParams p{factor, lambda, steps, step_size, clamp, step_size <= 0.0};
  if (p.auto_step && factor >= 1 && lambda >= 0.0) {
    p.step_size = 1.0 / landweber_operator_bound(factor, lambda);
  }
  validate(p);
  return SolverSpec(p);
}

double SolverSpec::lambda() const {
  return is_wiener() ? wiener_params().lambda : landweber_params().lambda;
}

SolverSpec SolverSpec::with_lambda(double lambda) const {
  if (is_wiener()) return wiener(wiener_params().kernel, lambda);
  const auto& p = landweber_params();
  return landweber(p.factor, lambda, p.steps, p.auto_step ? 0.0 : p.step_size, p.clamp);
}

SolverSpec SolverSpec::with_kernel(BlurKernel kernel) const {
  if (!is_wiener()) throw UsageError("with_kernel requires a Wiener solver");
  return wiener(std::move(kernel), wiener_params().lambda);
}

Image wiener_apply(const Image& x, const BlurKernel& kernel, double lambda) {
  if (!(lambda >= 0.0)) throw UsageError("wiener lambda must be >= 0");
  Spectrum xs = fft2(x);
  const Spectrum hs = kernel_spectrum(kernel, x.height(), x.width());
  for (std::size_t i = 0; i < xs.values.size(); ++i) {
    const Complex hv = hs.values[i];
    const double denom = std::norm(hv) + lambda;
    if (denom <= kSingularSpectrum) throw NumericalError("singular spectrum");
    xs.values[i] = std::conj(hv) * xs.values[i] / denom;
  }
  return ifft2(xs);
}

double landweber_objective(const Image& y, const Image& x, int factor, double lambda) {
  const auto f = static_cast<std::size_t>(factor);
  if (y.height() != x.height() * f || y.width() != x.width() * f) throw DataError("shape mismatch");
  return objective_raw(std::vector<double>(y.data().begin(), y.data().end()), y.height(), y.width(),
                       x, factor, lambda);
}

LandweberRun landweber_run(const Image& x, const LandweberParams& p, bool record_objective) {
  validate(p);
  const auto f = static_cast<std::size_t>(p.factor);
  const std::size_t h = x.height() * f;
  const std::size_t w = x.width() * f;
  const std::size_t ow = x.width();
  const double inv = 1.0 / static_cast<double>(f * f);

  const Image init = upsample_nearest(x, p.factor);
  std::vector<double> y(init.data().begin(), init.data().end());
  std::vector<double> residual(x.size());
  std::vector<double> dtd(y.size());

  LandweberRun run{init, {}};
  if (record_objective) run.objective.push_back(objective_raw(y, h, w, x, p.factor, p.lambda));

  for (int it = 0; it < p.steps; ++it) {
    std::fill(residual.begin(), residual.end(), 0.0);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) residual[(r / f) * ow + c / f] += y[r * w + c];
    }
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = residual[i] * inv - x[i];
    if (p.lambda > 0.0) apply_dtd(y, h, w, dtd);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t i = r * w + c;
        double grad = residual[(r / f) * ow + c / f] * inv;
        if (p.lambda > 0.0) grad += p.lambda * dtd[i];
        double v = y[i] - p.step_size * grad;
        if (p.clamp) v = std::clamp(v, 0.0, 1.0);
        y[i] = v;
      }
    }
    if (record_objective) run.objective.push_back(objective_raw(y, h, w, x, p.factor, p.lambda));
  }
  run.output = Image(h, w, std::move(y));
  return run;
}

Image landweber_apply(const Image& x, const LandweberParams& p) {
  return landweber_run(x, p, false).output;
}

Image apply_solver(const Image& x, const SolverSpec& solver) {
  if (solver.is_wiener()) {
    const auto& p = solver.wiener_params();
    return wiener_apply(x, p.kernel, p.lambda);
  }
  return landweber_apply(x, solver.landweber_params());
}

CalibrationResult calibrate_solver(const SolverSpec& proto, const std::vector<CalibrationPair>& id_set,
                                   const std::vector<double>& lambda_grid) {
  if (id_set.empty()) throw UsageError("calibration set is empty");
  if (lambda_grid.empty()) throw UsageError("lambda grid is empty");

  std::optional<SolverSpec> best;
  double best_error = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> scan;
  for (double lambda : lambda_grid) {
    const SolverSpec candidate = proto.with_lambda(lambda);
    double total = 0.0;
    for (const auto& pair : id_set) {
      const SolverSpec s = (candidate.is_wiener() && pair.kernel) ? candidate.with_kernel(*pair.kernel)
                                                                  : candidate;
      total += diff_norm(apply_solver(pair.x, s), pair.y);
    }
    const double err = total / static_cast<double>(id_set.size());
    scan.emplace_back(lambda, err);
    const double tie = 1e-12 * std::max(best_error, 1e-300);
    const bool better = err < best_error - tie;
    const bool tied_larger = std::abs(err - best_error) <= tie && best && lambda > best->lambda();
    if (!best || better || tied_larger) {
      best = candidate;
      best_error = err;
    }
  }
  return CalibrationResult{*best, best_error, std::move(scan)};
}

std::string calibration_json(const CalibrationResult& result) {
  nlohmann::json j;
  j["lambda"] = result.spec.lambda();
  j["mean_error"] = result.mean_error;
  nlohmann::json scan = nlohmann::json::array();
  for (const auto& [lambda, err] : result.scan) scan.push_back({{"lambda", lambda}, {"mean_error", err}});
  j["scan"] = scan;
  return j.dump();
}

}  // namespace cycleuq
