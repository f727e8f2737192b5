#include "core/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace cycleuq {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Snp: return "snp";
  }
  return "none";
}

NoiseKind parse_noise_kind(const std::string& text) {
  if (text == "none") return NoiseKind::None;
  if (text == "gaussian" || text == "gauss") return NoiseKind::Gaussian;
  if (text == "snp") return NoiseKind::Snp;
  throw UsageError("unknown noise kind: " + text);
}

Image add_gaussian(const Image& x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw UsageError("gaussian sigma must be >= 0");
  if (sigma == 0.0) return x;
  CounterRng rng(seed);
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
  return Image(x.height(), x.width(), std::move(out));
}

Image add_snp(const Image& x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw UsageError("snp sigma must be in [0, 1]");
  const std::size_t n = x.size();
  const auto count = static_cast<std::size_t>(std::llround(sigma * static_cast<double>(n)));
  if (count == 0) return x;
  CounterRng rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < count; ++i) out[idx[i]] = (rng.next_u64() >> 63) ? 1.0 : 0.0;
  return Image(x.height(), x.width(), std::move(out));
}

Image apply_noise(const Image& x, const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::None: return x;
    case NoiseKind::Gaussian: return add_gaussian(x, spec.sigma, spec.seed);
    case NoiseKind::Snp: return add_snp(x, spec.sigma, spec.seed);
  }
  return x;
}

}  // namespace cycleuq
