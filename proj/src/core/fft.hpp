#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "core/image.hpp"

namespace cycleuq {

using Complex = std::complex<double>;

// Frequency-domain workspace, same row-major layout as Image.
struct Spectrum {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Complex> values;

  Complex at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
};

bool is_power_of_two(std::size_t n) noexcept;

// Unnormalized forward DFT; the inverse divides by height*width.
Spectrum fft2(const Image& a);
Image ifft2(const Spectrum& s);

// In-place complex 2D transforms on a row-major buffer.
void fft2_inplace(std::vector<Complex>& buf, std::size_t height, std::size_t width, bool inverse);

// Elementwise product of two spectra of equal shape.
Spectrum multiply(const Spectrum& a, const Spectrum& b);

}  // namespace cycleuq
