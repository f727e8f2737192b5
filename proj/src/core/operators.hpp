#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "core/fft.hpp"
#include "core/image.hpp"

namespace cycleuq {

// Square, odd-sized, nonnegative blur kernel with unit mass. The center cell
// sits at index (size/2, size/2).
class BlurKernel {
 public:
  BlurKernel(int size, std::vector<double> weights);

  // Rescales nonnegative raw weights to unit mass.
  static BlurKernel normalized(int size, std::vector<double> raw);
  static BlurKernel delta(int size = 1);

  int size() const noexcept { return size_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double at(int row, int col) const { return weights_[static_cast<std::size_t>(row * size_ + col)]; }

  friend bool operator==(const BlurKernel&, const BlurKernel&) = default;

 private:
  int size_;
  std::vector<double> weights_;
};

struct PoolFactor {
  int factor = 1;
  friend bool operator==(const PoolFactor&, const PoolFactor&) = default;
};

// The deterministic measurement model f∘h: circular blur or average pooling.
struct ForwardSpec {
  std::variant<BlurKernel, PoolFactor> kind;

  static ForwardSpec blur(BlurKernel k) { return ForwardSpec{std::move(k)}; }
  static ForwardSpec pool(int factor);

  bool is_blur() const noexcept { return std::holds_alternative<BlurKernel>(kind); }
  const BlurKernel& kernel() const { return std::get<BlurKernel>(kind); }
  int pool_factor() const { return std::get<PoolFactor>(kind).factor; }
};

// Random-walk motion blur: `steps` trajectory samples starting at the kernel
// center, bilinearly rasterized, smoothed by a 3x3 box and normalized.
BlurKernel generate_motion_kernel(std::uint64_t seed, int size, int steps);

// Kernel laid onto an HxW grid with its center at the origin (periodic wrap).
Image pad_kernel(const BlurKernel& k, std::size_t height, std::size_t width);
Spectrum kernel_spectrum(const BlurKernel& k, std::size_t height, std::size_t width);

Image blur_forward(const Image& y, const BlurKernel& k);
Image pool_forward(const Image& y, int factor);
Image apply_forward(const Image& y, const ForwardSpec& spec);

// Nearest-neighbor replication by `factor` in both axes.
Image upsample_nearest(const Image& x, int factor);

namespace io {

void write_kernel(const BlurKernel& k, const std::filesystem::path& path);
BlurKernel read_kernel(const std::filesystem::path& path);

}  // namespace io

}  // namespace cycleuq
