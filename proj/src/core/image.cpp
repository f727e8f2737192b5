#include "core/image.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "core/error.hpp"

namespace cycleuq {

namespace {

void check_finite(std::span<const double> data) {
  for (double v : data) {
    if (!std::isfinite(v)) throw NonFiniteError();
  }
}

}  // namespace

Image::Image(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height_ == 0 || width_ == 0) throw DataError("image dimensions must be >= 1");
  if (data_.size() != height_ * width_) {
    throw DataError("image data length " + std::to_string(data_.size()) +
                    " does not match " + std::to_string(height_) + "x" +
                    std::to_string(width_));
  }
  check_finite(data_);
}

Image::Image(std::size_t height, std::size_t width, double fill)
    : Image(height, width, std::vector<double>(height * width, fill)) {}

void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DataError("shape mismatch");
}

double l2_norm(const Image& a) {
  // Neumaier-compensated sum of squares.
  double sum = 0.0;
  double comp = 0.0;
  for (double v : a.data()) {
    const double term = v * v;
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      comp += (sum - t) + term;
    } else {
      comp += (term - t) + sum;
    }
    sum = t;
  }
  const double total = sum + comp;
  if (!std::isfinite(total)) throw NonFiniteError();
  return std::sqrt(total);
}

double diff_norm(const Image& a, const Image& b) {
  require_same_shape(a, b);
  return l2_norm(subtract(a, b));
}

Image clamp_unit(const Image& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return Image(a.height(), a.width(), std::move(out));
}

Image combine(double alpha, const Image& a, double beta, const Image& b) {
  require_same_shape(a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * a[i] + beta * b[i];
  return Image(a.height(), a.width(), std::move(out));
}

Image add(const Image& a, const Image& b) { return combine(1.0, a, 1.0, b); }
Image subtract(const Image& a, const Image& b) { return combine(1.0, a, -1.0, b); }

Image scale(const Image& a, double alpha) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= alpha;
  return Image(a.height(), a.width(), std::move(out));
}

double mean(const Image& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s / static_cast<double>(a.size());
}

std::uint64_t content_hash(const Image& a) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t dims[2] = {a.height(), a.width()};
  mix(dims, sizeof(dims));
  mix(a.data().data(), a.size() * sizeof(double));
  return h;
}

namespace io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "CGF1 I/O assumes a little-endian host");

void put_u32_le(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return is;
}

// Skips whitespace and '#' comments in a PNM header.
std::string pnm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

void write_cgf(const Image& img, const std::filesystem::path& path) {
  auto os = open_out(path);
  os.write("CGF1", 4);
  put_u32_le(os, static_cast<std::uint32_t>(img.height()));
  put_u32_le(os, static_cast<std::uint32_t>(img.width()));
  os.write(reinterpret_cast<const char*>(img.data().data()),
           static_cast<std::streamsize>(img.size() * sizeof(double)));
  if (!os) throw IoError("write failed: " + path.string());
}

Image read_cgf(const std::filesystem::path& path) {
  auto is = open_in(path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CGF1", 4) != 0) {
    throw DataError("bad CGF1 magic: " + path.string());
  }
  const std::uint32_t h = get_u32_le(is);
  const std::uint32_t w = get_u32_le(is);
  if (!is || h == 0 || w == 0) throw DataError("bad CGF1 header: " + path.string());
  std::vector<double> data(static_cast<std::size_t>(h) * w);
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!is) throw DataError("truncated CGF1 payload: " + path.string());
  return Image(h, w, std::move(data));
}

void write_pgm(const Image& img, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
  std::vector<unsigned char> buf(img.size() * 2);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(img[i], 0.0, 1.0) * 65535.0));
    buf[2 * i] = static_cast<unsigned char>(q >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

Image read_pgm(const std::filesystem::path& path) {
  auto is = open_in(path);
  if (pnm_token(is) != "P5") throw DataError("not a binary PGM: " + path.string());
  std::size_t w = 0, h = 0;
  unsigned long maxval = 0;
  try {
    w = std::stoul(pnm_token(is));
    h = std::stoul(pnm_token(is));
    maxval = std::stoul(pnm_token(is));
  } catch (const std::exception&) {
    throw DataError("bad PGM header: " + path.string());
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) {
    throw DataError("bad PGM header: " + path.string());
  }
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> buf(w * h * bytes_per);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!is) throw DataError("truncated PGM payload: " + path.string());
  std::vector<double> data(w * h);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const unsigned v = bytes_per == 2 ? (buf[2 * i] << 8) | buf[2 * i + 1] : buf[i];
    data[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return Image(h, w, std::move(data));
}

Image read_image(const std::filesystem::path& path) {
  if (path.extension() == ".pgm") return read_pgm(path);
  return read_cgf(path);
}

}  // namespace io

}  // namespace cycleuq
