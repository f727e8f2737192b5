#include "core/operators.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace cycleuq {

namespace {

constexpr double kMassTolerance = 1e-12;

double reflect(double p, double hi) {
  // Mirror into [0, hi]; a single fold suffices for step lengths < hi.
  while (p < 0.0 || p > hi) {
    if (p < 0.0) p = -p;
    if (p > hi) p = 2.0 * hi - p;
  }
  return p;
}

}  // namespace

BlurKernel::BlurKernel(int size, std::vector<double> weights)
    : size_(size), weights_(std::move(weights)) {
  if (size_ < 1 || size_ % 2 == 0) throw DataError("kernel size must be odd and >= 1");
  if (weights_.size() != static_cast<std::size_t>(size_ * size_)) {
    throw DataError("kernel weight count does not match size");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) throw DataError("kernel weights must be finite and >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kMassTolerance) throw DataError("kernel weights must sum to 1");
}

BlurKernel BlurKernel::normalized(int size, std::vector<double> raw) {
  double sum = 0.0;
  for (double w : raw) sum += w;
  if (!(sum > 0.0)) throw DataError("kernel has no mass");
  for (double& w : raw) w /= sum;
  return BlurKernel(size, std::move(raw));
}

BlurKernel BlurKernel::delta(int size) {
  std::vector<double> w(static_cast<std::size_t>(size * size), 0.0);
  w[static_cast<std::size_t>((size / 2) * size + size / 2)] = 1.0;
  return BlurKernel(size, std::move(w));
}

ForwardSpec ForwardSpec::pool(int factor) {
  if (factor < 1) throw UsageError("pool factor must be >= 1");
  return ForwardSpec{PoolFactor{factor}};
}

BlurKernel generate_motion_kernel(std::uint64_t seed, int size, int steps) {
  if (size < 3 || size > 63 || size % 2 == 0) {
    throw UsageError("motion kernel size must be odd and in [3, 63]");
  }
  if (steps < 1) throw UsageError("motion kernel steps must be >= 1");

  constexpr double kStepLength = 0.5;
  constexpr double kTurnSigma = 0.35;

  CounterRng rng(seed);
  const double hi = static_cast<double>(size - 1);
  double px = hi / 2.0;
  double py = hi / 2.0;
  double heading = 2.0 * std::numbers::pi * rng.uniform();

  std::vector<double> raster(static_cast<std::size_t>(size * size), 0.0);
  auto deposit = [&](double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const double w[2][2] = {{(1 - fy) * (1 - fx), (1 - fy) * fx}, {fy * (1 - fx), fy * fx}};
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const int r = y0 + dy;
        const int c = x0 + dx;
        if (w[dy][dx] == 0.0 || r < 0 || c < 0 || r >= size || c >= size) continue;
        raster[static_cast<std::size_t>(r * size + c)] += w[dy][dx];
      }
    }
  };

  for (int i = 0; i < steps; ++i) {
    deposit(px, py);
    heading += kTurnSigma * rng.normal();
    px = reflect(px + kStepLength * std::cos(heading), hi);
    py = reflect(py + kStepLength * std::sin(heading), hi);
  }

  std::vector<double> smooth(raster.size(), 0.0);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      double s = 0.0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= size || cc >= size) continue;
          s += raster[static_cast<std::size_t>(rr * size + cc)];
        }
      }
      smooth[static_cast<std::size_t>(r * size + c)] = s / 9.0;
    }
  }
  return BlurKernel::normalized(size, std::move(smooth));
}

Image pad_kernel(const BlurKernel& k, std::size_t height, std::size_t width) {
  const auto ks = static_cast<std::size_t>(k.size());
  if (height < ks || width < ks) throw DataError("image smaller than kernel");
  std::vector<double> out(height * width, 0.0);
  const int half = k.size() / 2;
  for (int r = 0; r < k.size(); ++r) {
    for (int c = 0; c < k.size(); ++c) {
      const std::size_t rr = static_cast<std::size_t>((r - half + static_cast<long>(height)) %
                                                      static_cast<long>(height));
      const std::size_t cc = static_cast<std::size_t>((c - half + static_cast<long>(width)) %
                                                      static_cast<long>(width));
      out[rr * width + cc] += k.at(r, c);
    }
  }
  return Image(height, width, std::move(out));
}

Spectrum kernel_spectrum(const BlurKernel& k, std::size_t height, std::size_t width) {
  return fft2(pad_kernel(k, height, width));
}

Image blur_forward(const Image& y, const BlurKernel& k) {
  const Spectrum ys = fft2(y);
  const Spectrum ks = kernel_spectrum(k, y.height(), y.width());
  return ifft2(multiply(ys, ks));
}

Image pool_forward(const Image& y, int factor) {
  if (factor < 1) throw UsageError("pool factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  if (y.height() % f != 0 || y.width() % f != 0) throw DataError("pool factor mismatch");
  if (factor == 1) return y;
  const std::size_t oh = y.height() / f;
  const std::size_t ow = y.width() / f;
  std::vector<double> out(oh * ow, 0.0);
  const double inv = 1.0 / static_cast<double>(f * f);
  for (std::size_t r = 0; r < y.height(); ++r) {
    for (std::size_t c = 0; c < y.width(); ++c) out[(r / f) * ow + c / f] += y.at(r, c);
  }
  for (double& v : out) v *= inv;
  return Image(oh, ow, std::move(out));
}

Image upsample_nearest(const Image& x, int factor) {
  if (factor < 1) throw UsageError("upsample factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  const std::size_t oh = x.height() * f;
  const std::size_t ow = x.width() * f;
  std::vector<double> out(oh * ow);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) out[r * ow + c] = x.at(r / f, c / f);
  }
  return Image(oh, ow, std::move(out));
}

Image apply_forward(const Image& y, const ForwardSpec& spec) {
  if (spec.is_blur()) return blur_forward(y, spec.kernel());
  return pool_forward(y, spec.pool_factor());
}

namespace io {

void write_kernel(const BlurKernel& k, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << k.size() << '\n' << std::setprecision(17);
  for (int r = 0; r < k.size(); ++r) {
    for (int c = 0; c < k.size(); ++c) os << (c ? " " : "") << k.at(r, c);
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

BlurKernel read_kernel(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  int size = 0;
  if (!(is >> size) || size < 1) throw DataError("bad kernel header: " + path.string());
  std::vector<double> w(static_cast<std::size_t>(size * size));
  for (double& v : w) {
    if (!(is >> v)) throw DataError("truncated kernel file: " + path.string());
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  // Accept text rounded by other tools; anything further off is a bad file.
  if (std::abs(sum - 1.0) > 1e-6) throw DataError("kernel weights must sum to 1: " + path.string());
  if (std::abs(sum - 1.0) > kMassTolerance) return BlurKernel::normalized(size, std::move(w));
  return BlurKernel(size, std::move(w));
}

}  // namespace io

}  // namespace cycleuq
