#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/operators.hpp"
#include "core/solvers.hpp"

namespace cycleuq {

// Forward-backward cycle record. x_seq = {x, x_1, ..., x_{N+1}},
// y_seq = {y_0, ..., y_N}; dy[n-1] = ||y_n - y_{n-1}||, dx[n-1] = ||x_n - x_{n-1}||.
struct CycleTrace {
  int n_cycles = 0;
  std::vector<Image> x_seq;
  std::vector<Image> y_seq;
  std::vector<double> dy;
  std::vector<double> dx;

  const Image& output() const { return y_seq.front(); }
};

struct GroundTruthError {
  double eps0_norm = 0.0;
};

// y_0 = g(x); x_n = f∘h(y_{n-1}), y_n = g(x_n) for n = 1..N; x_{N+1} = f∘h(y_N).
CycleTrace run_cycles(const Image& x, const SolverSpec& solver, const ForwardSpec& forward,
                      int n_cycles);

GroundTruthError actual_uncertainty(const CycleTrace& trace, const Image& ground_truth);

// CSV with header "n,dy,dx"; the last row (n = N+1) has an empty dy.
std::string trace_csv(const CycleTrace& trace);
void write_trace_csv(const CycleTrace& trace, const std::filesystem::path& path);
// PGM dumps x_<n>.pgm / y_<n>.pgm for every step.
void dump_trace_images(const CycleTrace& trace, const std::filesystem::path& dir);

}  // namespace cycleuq
