#include "core/fft.hpp"

#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace cycleuq {

namespace {

void fft1d(Complex* data, std::size_t n, std::size_t stride, bool inverse) {
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles computed directly rather than by recurrence to keep the
      // round-off at the 1e-15 level for every bin.
      const Complex w(std::cos(angle * static_cast<double>(k)),
                      std::sin(angle * static_cast<double>(k)));
      for (std::size_t start = 0; start < n; start += len) {
        Complex& a = data[(start + k) * stride];
        Complex& b = data[(start + k + half) * stride];
        const Complex t = w * b;
        b = a - t;
        a += t;
      }
    }
  }
}

void require_pow2(std::size_t h, std::size_t w) {
  if (!is_power_of_two(h) || !is_power_of_two(w)) throw DataError("unsupported size");
}

}  // namespace

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

void fft2_inplace(std::vector<Complex>& buf, std::size_t height, std::size_t width, bool inverse) {
  require_pow2(height, width);
  for (std::size_t r = 0; r < height; ++r) fft1d(buf.data() + r * width, width, 1, inverse);
  for (std::size_t c = 0; c < width; ++c) fft1d(buf.data() + c, height, width, inverse);
  if (inverse) {
    const double s = 1.0 / static_cast<double>(height * width);
    for (auto& v : buf) v *= s;
  }
}

Spectrum fft2(const Image& a) {
  Spectrum s{a.height(), a.width(), std::vector<Complex>(a.size())};
  for (std::size_t i = 0; i < a.size(); ++i) s.values[i] = Complex(a[i], 0.0);
  fft2_inplace(s.values, s.height, s.width, false);
  return s;
}

Image ifft2(const Spectrum& s) {
  std::vector<Complex> buf = s.values;
  fft2_inplace(buf, s.height, s.width, true);
  std::vector<double> out(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
  return Image(s.height, s.width, std::move(out));
}

Spectrum multiply(const Spectrum& a, const Spectrum& b) {
  if (a.height != b.height || a.width != b.width) throw DataError("shape mismatch");
  Spectrum out{a.height, a.width, std::vector<Complex>(a.values.size())};
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] * b.values[i];
  return out;
}

}  // namespace cycleuq
