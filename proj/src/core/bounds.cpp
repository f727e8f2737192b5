#include "core/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace cycleuq {

namespace {

constexpr int kMaxPowerIterations = 200;
constexpr double kPowerTolerance = 1e-10;
constexpr double kDivergence = 1e8;

class CycleMap {
 public:
  CycleMap(const SolverSpec& solver, const ForwardSpec& forward, const Image& anchor)
      : solver_(solver), forward_(forward), anchor_(anchor), base_(apply(anchor)) {
    step_ = 1e-4 * std::max(1.0, l2_norm(anchor));
  }

  Image apply(const Image& y) const { return apply_solver(apply_forward(y, forward_), solver_); }

  // Finite-difference Jacobian-vector product at the anchor for unit v.
  Image jvp(const Image& v) const {
    const Image shifted = apply(combine(1.0, anchor_, step_, v));
    return scale(subtract(shifted, base_), 1.0 / step_);
  }

  const Image& anchor() const { return anchor_; }

 private:
  const SolverSpec& solver_;
  const ForwardSpec& forward_;
  const Image& anchor_;
  Image base_;
  double step_ = 1e-4;
};

Image random_unit(const Image& like, CounterRng& rng) {
  std::vector<double> v(like.size());
  for (double& e : v) e = rng.normal();
  Image out(like.height(), like.width(), std::move(v));
  return scale(out, 1.0 / l2_norm(out));
}

void check_finite(double v) {
  if (!std::isfinite(v) || v > kDivergence) throw NumericalError("power iteration diverged");
}

// Dominant growth factor ||J v|| / ||v|| by repeated application.
std::pair<double, int> power_norm(const CycleMap& map, Image v) {
  double prev = -1.0;
  int it = 0;
  double est = 0.0;
  for (it = 1; it <= kMaxPowerIterations; ++it) {
    Image w = map.jvp(v);
    est = l2_norm(w);
    check_finite(est);
    if (est == 0.0) return {0.0, it};
    v = scale(w, 1.0 / est);
    if (prev >= 0.0 && std::abs(est - prev) <= kPowerTolerance * est) break;
    prev = est;
  }
  return {est, std::min(it, kMaxPowerIterations)};
}

// Smallest growth via power iteration on the shifted map (shift*I - J),
// whose dominant component is the weakest direction of J.
double shifted_power_min(const CycleMap& map, Image v, double shift) {
  double est = 0.0;
  double prev = -1.0;
  for (int it = 0; it < kMaxPowerIterations; ++it) {
    Image w = combine(shift, v, -1.0, map.jvp(v));
    const double n = l2_norm(w);
    check_finite(n);
    if (n == 0.0) return shift;
    v = scale(w, 1.0 / n);
    est = shift - n;
    if (prev >= -0.5 && std::abs(est - prev) <= kPowerTolerance * std::max(1.0, std::abs(est))) break;
    prev = est;
  }
  return std::max(0.0, est);
}

}  // namespace

const char* to_string(LipschitzMethod m) noexcept {
  switch (m) {
    case LipschitzMethod::ExactFourier:
      return "exact_fourier";
    case LipschitzMethod::PowerIteration:
      return "power_iteration";
    case LipschitzMethod::FiniteDifferenceProbe:
      return "finite_difference_probe";
  }
  return "unknown";
}

const char* to_string(LowerRegime r) noexcept {
  switch (r) {
    case LowerRegime::Divergent:
      return "eq9";
    case LowerRegime::Convergent:
      return "eq10";
    case LowerRegime::Inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

std::vector<Complex> cycle_multiplier(const SolverSpec& solver, const ForwardSpec& forward, std::size_t height,
                                      std::size_t width) {
  if (!solver.is_wiener() || !forward.is_blur()) throw UsageError("fourier multiplier needs wiener + blur");
  const Spectrum hs = kernel_spectrum(solver.wiener_params().kernel, height, width);
  const Spectrum hf = kernel_spectrum(forward.kernel(), height, width);
  const double lambda = solver.lambda();
  std::vector<Complex> m(hs.values.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double denom = std::norm(hs.values[i]) + lambda;
    if (denom <= 1e-20) throw NumericalError("singular spectrum");
    m[i] = std::conj(hs.values[i]) * hf.values[i] / denom;
  }
  return m;
}

LipschitzEstimate estimate_lipschitz(const SolverSpec& solver, const ForwardSpec& forward, const Image& anchor,
                                     int probes, std::uint64_t seed, EstimateMode mode) {
  if (probes < 1) throw UsageError("probes must be >= 1");
  if (mode == EstimateMode::Auto) {
    mode = solver.is_wiener() && forward.is_blur() ? EstimateMode::ExactFourier : EstimateMode::PowerIteration;
  }
  LipschitzEstimate est;
  if (mode == EstimateMode::ExactFourier) {
    const auto m = cycle_multiplier(solver, forward, anchor.height(), anchor.width());
    est.method = LipschitzMethod::ExactFourier;
    est.L_hat = 0.0;
    est.l_hat = std::numeric_limits<double>::infinity();
    for (const Complex& c : m) {
      est.L_hat = std::max(est.L_hat, std::abs(c));
      est.l_hat = std::min(est.l_hat, std::abs(c));
    }
    return est;
  }

  const CycleMap map(solver, forward, anchor);
  CounterRng rng(seed);
  double probe_max = 0.0;
  double probe_min = std::numeric_limits<double>::infinity();
  for (int p = 0; p < probes; ++p) {
    const double r = l2_norm(map.jvp(random_unit(anchor, rng)));
    check_finite(r);
    probe_max = std::max(probe_max, r);
    probe_min = std::min(probe_min, r);
  }
  if (mode == EstimateMode::FiniteDifferenceProbe) {
    est.method = LipschitzMethod::FiniteDifferenceProbe;
    est.L_hat = probe_max;
    est.l_hat = probe_min;
    est.iterations = probes;
    return est;
  }
  est.method = LipschitzMethod::PowerIteration;
  const auto [top, iters] = power_norm(map, random_unit(anchor, rng));
  est.L_hat = std::max(top, probe_max);
  est.iterations = iters;
  const double shift = est.L_hat * 1.01 + 1e-12;
  est.l_hat = std::min({shifted_power_min(map, random_unit(anchor, rng), shift), probe_min, est.L_hat});
  return est;
}

double unbiasedness_residual(const SolverSpec& solver, const ForwardSpec& forward, const Image& y) {
  const double n = l2_norm(y);
  if (n == 0.0) throw DataError("zero ground truth");
  return diff_norm(apply_solver(apply_forward(y, forward), solver), y) / n;
}

RecursiveBoundReport check_recursive_bound(const CycleTrace& trace, double L_hat) {
  RecursiveBoundReport r;
  for (std::size_t n = 0; n + 1 < trace.dy.size(); ++n) {
    const double a = trace.dy[n];
    const double b = trace.dy[n + 1];
    const double ratio = a > 0.0 ? b / a : 0.0;
    r.ratios.push_back(ratio);
    r.max_ratio = std::max(r.max_ratio, ratio);
    if (b > L_hat * a * (1.0 + kBoundRelTol) + kBoundAbsTol) r.pass = false;
  }
  return r;
}

UpperBoundReport check_upper_bound(const CycleTrace& trace, double L_hat, const GroundTruthError& eps0,
                                   std::optional<double> residual) {
  if (!(L_hat > 0.0)) throw UsageError("upper bound needs L_hat > 0");
  UpperBoundReport r;
  r.unbiasedness_residual = residual;
  r.precondition_held = residual.has_value() && *residual <= kUnbiasedTol;
  for (std::size_t i = 0; i < trace.dy.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double bound = std::pow(L_hat, n) * ((L_hat + 1.0) / L_hat) * eps0.eps0_norm;
    r.bounds.push_back(bound);
    if (trace.dy[i] > bound * (1.0 + kBoundRelTol) + kBoundAbsTol) r.pass = false;
  }
  return r;
}

LowerBoundReport check_lower_bound(const CycleTrace& trace, double l_hat, double L_hat,
                                   const GroundTruthError& eps0) {
  LowerBoundReport r;
  if (!(l_hat > 0.0)) return r;
  double factor = 0.0;
  if (l_hat >= 1.0) {
    r.regime = LowerRegime::Divergent;
    factor = (l_hat - 1.0) / l_hat;
  } else if (L_hat < 1.0) {
    r.regime = LowerRegime::Convergent;
    factor = (1.0 - L_hat) / l_hat;
  } else {
    return r;
  }
  r.pass = true;
  for (std::size_t i = 0; i < trace.dy.size(); ++i) {
    const double bound = std::pow(l_hat, static_cast<double>(i + 1)) * factor * eps0.eps0_norm;
    r.bounds.push_back(bound);
    if (trace.dy[i] * (1.0 + kBoundRelTol) + kBoundAbsTol < bound) r.pass = false;
  }
  return r;
}

BoundsReport verify_bounds(const CycleTrace& trace, const LipschitzEstimate& estimate, const GroundTruthError& eps0,
                           std::optional<double> residual) {
  BoundsReport r;
  r.estimate = estimate;
  r.recursive = check_recursive_bound(trace, estimate.L_hat);
  r.upper = check_upper_bound(trace, estimate.L_hat, eps0, residual);
  r.lower = check_lower_bound(trace, estimate.l_hat, estimate.L_hat, eps0);
  return r;
}

std::string bounds_report_json(const BoundsReport& report) {
  nlohmann::json j;
  j["L_hat"] = report.estimate.L_hat;
  j["l_hat"] = report.estimate.l_hat;
  j["method"] = to_string(report.estimate.method);
  j["per_n_ratios"] = report.recursive.ratios;
  j["eq6_pass"] = report.recursive.pass;
  j["eq7_pass"] = report.upper.pass;
  j["eq9or10_regime"] = to_string(report.lower.regime);
  if (report.lower.regime == LowerRegime::Inconclusive) {
    j["eq9or10_pass"] = nullptr;
  } else {
    j["eq9or10_pass"] = report.lower.pass;
  }
  if (report.upper.unbiasedness_residual) j["unbiasedness_residual"] = *report.upper.unbiasedness_residual;
  j["unbiased_precondition"] = report.upper.precondition_held;
  return j.dump(2);
}

}  // namespace cycleuq
