#include <gtest/gtest.h>

#include <json.hpp>

#include "core/bounds.hpp"
#include "core/error.hpp"
#include "core/noise.hpp"
#include "oracles.hpp"

namespace cycleuq {
namespace {

using testing::random_image;

CycleTrace wiener_trace(const Image& clean, const BlurKernel& k, double lambda, double sigma, std::uint64_t seed,
                        int n = 5) {
  const Image x = add_gaussian(blur_forward(clean, k), sigma, seed);
  return run_cycles(x, SolverSpec::wiener(k, lambda), ForwardSpec::blur(k), n);
}

CycleTrace trace_with_dy(std::vector<double> dy) {
  CycleTrace t;
  t.n_cycles = static_cast<int>(dy.size());
  t.dy = std::move(dy);
  t.dx.assign(t.dy.size() + 1, 0.0);
  return t;
}

TEST(Lipschitz, ExactInverseIsIdentity) {
  const BlurKernel k = testing::invertible_kernel();
  const auto est = estimate_lipschitz(SolverSpec::wiener(k, 0.0), ForwardSpec::blur(k), Image(16, 16), 4, 1);
  EXPECT_EQ(est.method, LipschitzMethod::ExactFourier);
  EXPECT_NEAR(est.L_hat, 1.0, 1e-12);
  EXPECT_NEAR(est.l_hat, 1.0, 1e-12);
}

TEST(Lipschitz, HugeLambdaCollapses) {
  const BlurKernel k = generate_motion_kernel(2, 7, 10);
  const Spectrum hs = kernel_spectrum(k, 16, 16);
  double hmax = 0.0;
  for (const Complex& c : hs.values) hmax = std::max(hmax, std::norm(c));
  const auto est = estimate_lipschitz(SolverSpec::wiener(k, 1e6 * hmax), ForwardSpec::blur(k), Image(16, 16), 4, 1);
  EXPECT_LT(est.L_hat, 0.01);
}

TEST(Lipschitz, PowerIterationAgreesWithFourier) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const BlurKernel k = generate_motion_kernel(10 + s, 7, 12);
    const SolverSpec g = SolverSpec::wiener(k, 1e-2);
    const ForwardSpec f = ForwardSpec::blur(k);
    const Image anchor = random_image(16, 16, 20 + s);
    const auto exact = estimate_lipschitz(g, f, anchor, 8, s, EstimateMode::ExactFourier);
    const auto power = estimate_lipschitz(g, f, anchor, 8, s, EstimateMode::PowerIteration);
    EXPECT_EQ(power.method, LipschitzMethod::PowerIteration);
    EXPECT_NEAR(power.L_hat, exact.L_hat, 0.01 * exact.L_hat);
    EXPECT_LE(power.iterations, 200);
  }
}

TEST(Lipschitz, FourierGainsBracketMultiplier) {
  const BlurKernel k = generate_motion_kernel(3, 9, 20);
  const SolverSpec g = SolverSpec::wiener(k, 3e-3);
  const ForwardSpec f = ForwardSpec::blur(k);
  const auto est = estimate_lipschitz(g, f, Image(32, 32), 1, 0);
  const auto hs = testing::naive_dft(pad_kernel(k, 32, 32));
  double lo = INFINITY, hi = 0.0;
  for (const Complex& h : hs) {
    const double m = std::norm(h) / (std::norm(h) + 3e-3);
    EXPECT_GE(m, est.l_hat - 1e-12);
    EXPECT_LE(m, est.L_hat + 1e-12);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  EXPECT_NEAR(est.l_hat, lo, 1e-12);
  EXPECT_NEAR(est.L_hat, hi, 1e-12);
}

TEST(Lipschitz, LandweberUsesPowerIteration) {
  const SolverSpec g = SolverSpec::landweber(2, 0.05, 20, 0.0, false);
  const auto est = estimate_lipschitz(g, ForwardSpec::pool(2), random_image(8, 8, 1), 4, 2);
  EXPECT_EQ(est.method, LipschitzMethod::PowerIteration);
  EXPECT_GT(est.L_hat, 0.0);
  EXPECT_LE(est.l_hat, est.L_hat);
  EXPECT_THROW(cycle_multiplier(g, ForwardSpec::pool(2), 8, 8), UsageError);
}

TEST(RecursiveBound, HoldsForExactGain) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const BlurKernel k = generate_motion_kernel(30 + s, 9, 18);
    const CycleTrace t = wiener_trace(random_image(32, 32, 40 + s), k, 1e-2, 0.03, s);
    const auto est = estimate_lipschitz(SolverSpec::wiener(k, 1e-2), ForwardSpec::blur(k), t.output(), 1, 0);
    const auto r = check_recursive_bound(t, est.L_hat);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.ratios.size(), t.dy.size() - 1);
    EXPECT_LE(r.max_ratio, est.L_hat * (1 + 1e-9));
  }
}

TEST(RecursiveBound, ZeroGainFails) { EXPECT_FALSE(check_recursive_bound(trace_with_dy({1.0, 0.5, 0.2}), 0.0).pass); }

TEST(RecursiveBound, ZeroSequencePassesVacuously) {
  EXPECT_TRUE(check_recursive_bound(trace_with_dy({0.0, 0.0, 0.0}), 0.0).pass);
}

TEST(UpperBound, ExactInverseHoldsTrivially) {
  const BlurKernel k = testing::invertible_kernel();
  const Image y = random_image(16, 16, 5);
  const CycleTrace t = run_cycles(blur_forward(y, k), SolverSpec::wiener(k, 0.0), ForwardSpec::blur(k), 4);
  const auto r = check_upper_bound(t, 1.0, actual_uncertainty(t, y));
  EXPECT_TRUE(r.pass);
}

TEST(UpperBound, InflatedGainHoldsAFortiori) {
  const BlurKernel k = generate_motion_kernel(6, 9, 20);
  const Image y = random_image(32, 32, 6);
  const CycleTrace t = wiener_trace(y, k, 1e-2, 0.02, 7);
  const auto est = estimate_lipschitz(SolverSpec::wiener(k, 1e-2), ForwardSpec::blur(k), y, 1, 0);
  const auto eps0 = actual_uncertainty(t, y);
  const auto base = check_upper_bound(t, est.L_hat, eps0);
  const auto inflated = check_upper_bound(t, 10.0 * est.L_hat, eps0);
  if (base.pass) EXPECT_TRUE(inflated.pass);
  for (std::size_t i = 0; i < base.bounds.size(); ++i) EXPECT_GE(inflated.bounds[i], base.bounds[i]);
}

TEST(UpperBound, FormulaAndPrecondition) {
  const CycleTrace t = trace_with_dy({0.5, 0.25, 0.125});
  const auto r = check_upper_bound(t, 0.5, GroundTruthError{1.0}, 5e-4);
  ASSERT_EQ(r.bounds.size(), 3u);
  for (int n = 1; n <= 3; ++n) EXPECT_NEAR(r.bounds[static_cast<std::size_t>(n - 1)], std::pow(0.5, n) * 3.0, 1e-15);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.precondition_held);
  EXPECT_FALSE(check_upper_bound(t, 0.5, GroundTruthError{1.0}, 0.5).precondition_held);
  EXPECT_THROW(check_upper_bound(t, 0.0, GroundTruthError{1.0}), UsageError);
}

TEST(LowerBound, IdentityCycleIsDivergentRegimeWithZeroBound) {
  const CycleTrace t = trace_with_dy({0.0, 0.0, 0.0});
  const auto r = check_lower_bound(t, 1.0, 1.0, GroundTruthError{2.0});
  EXPECT_EQ(r.regime, LowerRegime::Divergent);
  EXPECT_TRUE(r.pass);
  for (double b : r.bounds) EXPECT_EQ(b, 0.0);
}

TEST(LowerBound, ConvergentRegimeForWiener) {
  const BlurKernel k = generate_motion_kernel(8, 9, 20);
  const Image y = random_image(32, 32, 8);
  const CycleTrace t = wiener_trace(y, k, 1e-2, 0.05, 9);
  const auto est = estimate_lipschitz(SolverSpec::wiener(k, 1e-2), ForwardSpec::blur(k), y, 1, 0);
  ASSERT_LT(est.L_hat, 1.0);
  const auto r = check_lower_bound(t, est.l_hat, est.L_hat, actual_uncertainty(t, y));
  EXPECT_EQ(r.regime, LowerRegime::Convergent);
  EXPECT_EQ(r.bounds.size(), t.dy.size());
}

TEST(LowerBound, MixedRegimeInconclusive) {
  const auto r = check_lower_bound(trace_with_dy({1, 1, 1}), 0.5, 1.2, GroundTruthError{1.0});
  EXPECT_EQ(r.regime, LowerRegime::Inconclusive);
  EXPECT_STREQ(to_string(r.regime), "inconclusive");
}

TEST(BoundsReport, JsonSchema) {
  const BlurKernel k = generate_motion_kernel(9, 9, 20);
  const Image y = random_image(32, 32, 10);
  const CycleTrace t = wiener_trace(y, k, 1e-2, 0.02, 11);
  const SolverSpec g = SolverSpec::wiener(k, 1e-2);
  const auto est = estimate_lipschitz(g, ForwardSpec::blur(k), y, 1, 0);
  const auto rep = verify_bounds(t, est, actual_uncertainty(t, y), unbiasedness_residual(g, ForwardSpec::blur(k), y));
  const auto j = nlohmann::json::parse(bounds_report_json(rep));
  for (const char* key : {"L_hat", "l_hat", "method", "per_n_ratios", "eq6_pass", "eq7_pass", "eq9or10_regime",
                          "eq9or10_pass"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["method"], "exact_fourier");
  EXPECT_TRUE(j["eq6_pass"].get<bool>());
  EXPECT_EQ(j["per_n_ratios"].size(), t.dy.size() - 1);
}

}  // namespace
}  // namespace cycleuq
