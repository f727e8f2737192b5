#pragma once

#include <cstdint>
#include <string>

#include "core/image.hpp"

namespace cycleuq {

enum class NoiseKind { None, Gaussian, Snp };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& text);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

// x + N(0, sigma^2) per pixel, clamped to [0,1]. sigma == 0 returns x as is.
Image add_gaussian(const Image& x, double sigma, std::uint64_t seed);

// Exactly round(sigma * pixels) distinct pixels forced to 0 or 1 (fair coin).
Image add_snp(const Image& x, double sigma, std::uint64_t seed);

Image apply_noise(const Image& x, const NoiseSpec& spec);

}  // namespace cycleuq
