#include <gtest/gtest.h>

#include <limits>

#include "core/error.hpp"
#include "core/noise.hpp"
#include "core/solvers.hpp"
#include "oracles.hpp"

namespace cycleuq {
namespace {

using testing::invertible_kernel;
using testing::max_abs_diff;
using testing::random_image;

TEST(Wiener, DeltaKernelIsIdentity) {
  const Image x = random_image(16, 16, 1);
  EXPECT_LE(max_abs_diff(wiener_apply(x, BlurKernel::delta(3), 0.0), x), 1e-9);
}

TEST(Wiener, ExactInverseAtZeroLambda) {
  const Image y = random_image(32, 32, 2);
  const BlurKernel k = invertible_kernel();
  EXPECT_LE(max_abs_diff(wiener_apply(blur_forward(y, k), k, 0.0), y), 1e-8);
}

TEST(Wiener, MatchesPerFrequencyFormula) {
  const Image y = random_image(32, 32, 3);
  const BlurKernel k = testing::box_kernel(5);
  const double lambda = 1e-3;
  const auto xs = testing::naive_dft(y);
  const auto ks = testing::naive_dft(pad_kernel(k, 32, 32));
  std::vector<Complex> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = std::conj(ks[i]) * xs[i] / (std::norm(ks[i]) + lambda);
  const Image oracle = testing::naive_idft_real(out, 32, 32);
  EXPECT_LE(max_abs_diff(wiener_apply(y, k, lambda), oracle), 1e-8);
}

TEST(Wiener, SingularSpectrumAtZeroLambda) {
  // Two taps half a period apart cancel at the quarter-frequency bin.
  const BlurKernel k(3, {0, 0, 0, 0.5, 0, 0.5, 0, 0, 0});
  EXPECT_THROW(wiener_apply(random_image(16, 16, 4), k, 0.0), NumericalError);
  EXPECT_NO_THROW(wiener_apply(random_image(16, 16, 4), k, 1e-3));
}

TEST(Wiener, Linearity) {
  const Image a = random_image(16, 16, 5, -1, 1);
  const Image b = random_image(16, 16, 6, -1, 1);
  const BlurKernel k = generate_motion_kernel(3, 7, 10);
  const double alpha = 2.5, beta = -0.4;
  const Image lhs = wiener_apply(combine(alpha, a, beta, b), k, 1e-2);
  const Image rhs = combine(alpha, wiener_apply(a, k, 1e-2), beta, wiener_apply(b, k, 1e-2));
  EXPECT_LE(max_abs_diff(lhs, rhs), 1e-10);
}

TEST(Wiener, ApproximateLeftInverseAtTinyLambda) {
  const BlurKernel k = invertible_kernel();
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image y = random_image(32, 32, 10 + s);
    const Image back = wiener_apply(blur_forward(y, k), k, 1e-6);
    EXPECT_LE(diff_norm(back, y) / l2_norm(y), 1e-3);
  }
}

TEST(Wiener, NegativeLambdaRejected) {
  EXPECT_THROW(SolverSpec::wiener(invertible_kernel(), -1.0), UsageError);
}

TEST(Landweber, ConstantIsFixedPoint) {
  for (double lambda : {0.0, 0.1, 3.0}) {
    const Image out = apply_solver(Image(8, 8, 0.42), SolverSpec::landweber(4, lambda, 25, 0.0, false));
    ASSERT_EQ(out.height(), 32u);
    for (double v : out.data()) EXPECT_NEAR(v, 0.42, 1e-12);
  }
}

TEST(Landweber, DataConsistency) {
  const Image x = pool_forward(random_image(16, 16, 7), 2);
  const Image y = apply_solver(x, SolverSpec::landweber(2, 0.0, 500, 0.0, false));
  EXPECT_LE(max_abs_diff(pool_forward(y, 2), x), 1e-4);
}

TEST(Landweber, ZeroStepsIsNearestNeighbor) {
  const Image x = random_image(8, 8, 9);
  EXPECT_EQ(apply_solver(x, SolverSpec::landweber(4, 0.1, 0, 0.0, false)), upsample_nearest(x, 4));
}

TEST(Landweber, ObjectiveIsMonotone) {
  const Image x = random_image(16, 16, 10);
  for (double lambda : {0.01, 0.3}) {
    LandweberParams p;
    p.factor = 4;
    p.lambda = lambda;
    p.steps = 60;
    p.step_size = 1.0 / landweber_operator_bound(4, lambda);
    const LandweberRun run = landweber_run(x, p, true);
    ASSERT_EQ(run.objective.size(), 61u);
    for (std::size_t t = 1; t < run.objective.size(); ++t) EXPECT_LE(run.objective[t], run.objective[t - 1] + 1e-12);
    EXPECT_NEAR(run.objective.back(), landweber_objective(run.output, x, 4, lambda), 1e-12);
  }
}

TEST(Landweber, UnstableStepRejected) {
  const double bound = landweber_operator_bound(4, 0.1);
  EXPECT_THROW(SolverSpec::landweber(4, 0.1, 10, 2.5 / bound, false), UsageError);
  EXPECT_THROW(SolverSpec::landweber(0, 0.1, 10, 0.0, false), UsageError);
}

TEST(Calibrate, SingleGridPoint) {
  const BlurKernel k = invertible_kernel();
  const Image y = random_image(16, 16, 11);
  const std::vector<CalibrationPair> set{{blur_forward(y, k), y, std::nullopt}};
  EXPECT_EQ(calibrate_solver(SolverSpec::wiener(k, 0.5), set, {0.07}).spec.lambda(), 0.07);
}

TEST(Calibrate, ExactInverseDominates) {
  const BlurKernel k = invertible_kernel();
  std::vector<CalibrationPair> set;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Image y = random_image(16, 16, 20 + s);
    set.push_back({blur_forward(y, k), y, std::nullopt});
  }
  EXPECT_EQ(calibrate_solver(SolverSpec::wiener(k, 1.0), set, {1e-2, 0.0, 1e-4}).spec.lambda(), 0.0);
}

TEST(Calibrate, MatchesBruteForceArgmin) {
  std::vector<CalibrationPair> set;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const BlurKernel k = generate_motion_kernel(30 + s, 7, 12);
    const Image y = random_image(16, 16, 40 + s);
    set.push_back({add_gaussian(blur_forward(y, k), 0.02, 50 + s), y, k});
  }
  const std::vector<double> grid{1e-6, 1e-4, 1e-2};
  double best = std::numeric_limits<double>::infinity();
  double best_lambda = -1.0;
  for (double lambda : grid) {
    double total = 0.0;
    for (const auto& p : set) total += diff_norm(wiener_apply(p.x, *p.kernel, lambda), p.y);
    if (total / static_cast<double>(set.size()) < best) {
      best = total / static_cast<double>(set.size());
      best_lambda = lambda;
    }
  }
  const CalibrationResult r = calibrate_solver(SolverSpec::wiener(BlurKernel::delta(), 1.0), set, grid);
  EXPECT_EQ(r.spec.lambda(), best_lambda);
  EXPECT_NEAR(r.mean_error, best, 1e-12);
  EXPECT_EQ(r.scan.size(), grid.size());
}

TEST(Calibrate, EmptyInputsRejected) {
  EXPECT_THROW(calibrate_solver(SolverSpec::wiener(invertible_kernel(), 0.0), {}, {0.1}), UsageError);
}

}  // namespace
}  // namespace cycleuq
