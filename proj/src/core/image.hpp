#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace cycleuq {

// Dense row-major grayscale image with double samples. Values are finite by
// construction; the nominal range is [0,1] but arithmetic may leave it.
class Image {
 public:
  Image(std::size_t height, std::size_t width, std::vector<double> data);
  Image(std::size_t height, std::size_t width, double fill = 0.0);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }
  double at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Image& a, const Image& b) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> data_;
};

double l2_norm(const Image& a);
double diff_norm(const Image& a, const Image& b);
Image clamp_unit(const Image& a);

Image add(const Image& a, const Image& b);
Image subtract(const Image& a, const Image& b);
Image scale(const Image& a, double alpha);
// alpha*a + beta*b
Image combine(double alpha, const Image& a, double beta, const Image& b);
double mean(const Image& a);

void require_same_shape(const Image& a, const Image& b);

// 64-bit FNV-1a over the raw sample bytes and the dimensions.
std::uint64_t content_hash(const Image& a);

namespace io {

// CGF1: "CGF1", u32 height, u32 width, little-endian float64 row-major.
void write_cgf(const Image& img, const std::filesystem::path& path);
Image read_cgf(const std::filesystem::path& path);

// Binary PGM (P5) with maxval 65535; samples are clamped to [0,1] first.
void write_pgm(const Image& img, const std::filesystem::path& path);
Image read_pgm(const std::filesystem::path& path);

// Dispatches on extension (.pgm, anything else is CGF1).
Image read_image(const std::filesystem::path& path);

}  // namespace io

}  // namespace cycleuq
