#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/cycle.hpp"
#include "core/fft.hpp"
#include "core/image.hpp"
#include "core/operators.hpp"
#include "core/solvers.hpp"

namespace cycleuq {

enum class LipschitzMethod { ExactFourier, PowerIteration, FiniteDifferenceProbe };

const char* to_string(LipschitzMethod m) noexcept;

struct LipschitzEstimate {
  double L_hat = 0.0;
  double l_hat = 0.0;
  LipschitzMethod method = LipschitzMethod::ExactFourier;
  int iterations = 0;
};

// Auto picks ExactFourier whenever the cycle is a Fourier multiplier
// (Wiener solver with a blur forward model), PowerIteration otherwise.
enum class EstimateMode { Auto, ExactFourier, PowerIteration, FiniteDifferenceProbe };

// Per-frequency multiplier of the linear cycle y -> g(f∘h(y)) on an HxW grid:
// conj(Hs) Hf / (|Hs|^2 + lambda). Requires a Wiener solver and blur forward.
std::vector<Complex> cycle_multiplier(const SolverSpec& solver, const ForwardSpec& forward,
                                      std::size_t height, std::size_t width);

// Power iteration and probing act on the finite-difference Jacobian of the
// cycle map at `anchor`; they are estimates, not certificates.
LipschitzEstimate estimate_lipschitz(const SolverSpec& solver, const ForwardSpec& forward, const Image& anchor,
                                     int probes, std::uint64_t seed, EstimateMode mode = EstimateMode::Auto);

// ||T(y) - y|| / ||y|| for the cycle map T on a ground-truth image.
double unbiasedness_residual(const SolverSpec& solver, const ForwardSpec& forward, const Image& y);

inline constexpr double kBoundRelTol = 1e-6;
inline constexpr double kBoundAbsTol = 1e-10;
inline constexpr double kUnbiasedTol = 1e-3;

struct RecursiveBoundReport {
  bool pass = true;
  std::vector<double> ratios;  // dy[n+1] / dy[n]; 0 when dy[n] == 0
  double max_ratio = 0.0;
};

RecursiveBoundReport check_recursive_bound(const CycleTrace& trace, double L_hat);

struct UpperBoundReport {
  bool pass = true;
  std::vector<double> bounds;  // per n = 1..N
  std::optional<double> unbiasedness_residual;
  bool precondition_held = false;
};

UpperBoundReport check_upper_bound(const CycleTrace& trace, double L_hat, const GroundTruthError& eps0,
                                   std::optional<double> unbiasedness_residual = std::nullopt);

enum class LowerRegime { Divergent, Convergent, Inconclusive };

const char* to_string(LowerRegime r) noexcept;

struct LowerBoundReport {
  LowerRegime regime = LowerRegime::Inconclusive;
  bool pass = false;  // meaningful only when regime != Inconclusive
  std::vector<double> bounds;
};

LowerBoundReport check_lower_bound(const CycleTrace& trace, double l_hat, double L_hat,
                                   const GroundTruthError& eps0);

struct BoundsReport {
  LipschitzEstimate estimate;
  RecursiveBoundReport recursive;
  UpperBoundReport upper;
  LowerBoundReport lower;
};

BoundsReport verify_bounds(const CycleTrace& trace, const LipschitzEstimate& estimate, const GroundTruthError& eps0,
                           std::optional<double> unbiasedness_residual = std::nullopt);

// {L_hat, l_hat, method, per_n_ratios, eq6_pass, eq7_pass, eq9or10_regime, eq9or10_pass}
std::string bounds_report_json(const BoundsReport& report);

}  // namespace cycleuq
