#include "core/cycle.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/format.hpp"

namespace cycleuq {

namespace {

double checked_norm(const Image& a, const Image& b) {
  const double d = diff_norm(a, b);
  if (!std::isfinite(d)) throw NumericalError("cycle diverged numerically");
  return d;
}

}  // namespace

CycleTrace run_cycles(const Image& x, const SolverSpec& solver, const ForwardSpec& forward,
                      int n_cycles) {
  if (n_cycles < 1) throw UsageError("n_cycles must be >= 1");
  CycleTrace t;
  t.n_cycles = n_cycles;
  t.x_seq.reserve(static_cast<std::size_t>(n_cycles) + 2);
  t.y_seq.reserve(static_cast<std::size_t>(n_cycles) + 1);
  try {
    t.x_seq.push_back(x);
    t.y_seq.push_back(apply_solver(x, solver));
    for (int n = 1; n <= n_cycles; ++n) {
      t.x_seq.push_back(apply_forward(t.y_seq.back(), forward));
      if (!t.x_seq.back().same_shape(x)) throw DataError("forward model output does not match input shape");
      t.y_seq.push_back(apply_solver(t.x_seq.back(), solver));
    }
    t.x_seq.push_back(apply_forward(t.y_seq.back(), forward));
    for (std::size_t n = 1; n < t.y_seq.size(); ++n) t.dy.push_back(checked_norm(t.y_seq[n], t.y_seq[n - 1]));
    for (std::size_t n = 1; n < t.x_seq.size(); ++n) t.dx.push_back(checked_norm(t.x_seq[n], t.x_seq[n - 1]));
  } catch (const NonFiniteError&) {
    throw NumericalError("cycle diverged numerically");
  }
  return t;
}

GroundTruthError actual_uncertainty(const CycleTrace& trace, const Image& ground_truth) {
  return GroundTruthError{diff_norm(trace.output(), ground_truth)};
}

std::string trace_csv(const CycleTrace& trace) {
  std::ostringstream os;
  os << "n,dy,dx\n";
  for (std::size_t i = 0; i < trace.dx.size(); ++i) {
    os << (i + 1) << ',';
    if (i < trace.dy.size()) os << fmt_num(trace.dy[i]);
    os << ',' << fmt_num(trace.dx[i]) << '\n';
  }
  return os.str();
}

void write_trace_csv(const CycleTrace& trace, const std::filesystem::path& path) {
  write_text_file(path, trace_csv(trace));
}

void dump_trace_images(const CycleTrace& trace, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t n = 0; n < trace.x_seq.size(); ++n) {
    io::write_pgm(trace.x_seq[n], dir / ("x_" + std::to_string(n) + ".pgm"));
  }
  for (std::size_t n = 0; n < trace.y_seq.size(); ++n) {
    io::write_pgm(trace.y_seq[n], dir / ("y_" + std::to_string(n) + ".pgm"));
  }
}

}  // namespace cycleuq
