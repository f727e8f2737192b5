#include "core/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "core/error.hpp"
#include "core/fft.hpp"
#include "core/rng.hpp"

namespace cycleuq {

namespace {

Image normalize_range(std::vector<double> v, std::size_t n) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double a = *lo;
  const double span = *hi - *lo;
  for (double& e : v) e = span > 0.0 ? (e - a) / span : 0.5;
  return Image(n, n, std::move(v));
}

Image smooth_field(std::size_t n, CounterRng& rng) {
  std::vector<Complex> buf(n * n);
  for (auto& c : buf) c = Complex(rng.normal(), 0.0);
  fft2_inplace(buf, n, n, false);
  const double cutoff = static_cast<double>(n) / 8.0;
  const double knee = cutoff / 3.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double fr = static_cast<double>(r <= n / 2 ? r : n - r);
    for (std::size_t c = 0; c < n; ++c) {
      const double fc = static_cast<double>(c <= n / 2 ? c : n - c);
      const double rad = std::hypot(fr, fc);
      const double amp = rad < cutoff ? 1.0 / (1.0 + (rad / knee) * (rad / knee)) : 0.0;
      buf[r * n + c] *= amp;
    }
  }
  fft2_inplace(buf, n, n, true);
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = buf[i].real();
  return normalize_range(std::move(v), n);
}

// Coverage of a pixel by a shape given its signed distance (negative inside).
double coverage(double sd) { return std::clamp(0.5 - sd, 0.0, 1.0); }

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  const double t = len2 > 0.0 ? std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0) : 0.0;
  return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

Image shapes(std::size_t n, CounterRng& rng) {
  const double size = static_cast<double>(n);
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double g0 = rng.uniform(0.15, 0.45);
  const double g1 = rng.uniform(0.15, 0.45);
  std::vector<double> v(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double t = 0.5 + ((static_cast<double>(c) / size - 0.5) * std::cos(theta) +
                              (static_cast<double>(r) / size - 0.5) * std::sin(theta));
      v[r * n + c] = g0 + (g1 - g0) * std::clamp(t, 0.0, 1.0);
    }
  }
  const int count = 3 + static_cast<int>(rng.below(5));
  for (int s = 0; s < count; ++s) {
    const bool disk = rng.uniform() < 0.5;
    const double cx = rng.uniform(0.1, 0.9) * size;
    const double cy = rng.uniform(0.1, 0.9) * size;
    const double a = rng.uniform(0.06, 0.2) * size;
    const double b = rng.uniform(0.06, 0.2) * size;
    const double value = rng.uniform(0.5, 1.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double px = static_cast<double>(c) + 0.5 - cx;
        const double py = static_cast<double>(r) + 0.5 - cy;
        const double sd = disk ? std::hypot(px, py) - a : std::max(std::abs(px) - a, std::abs(py) - b);
        const double w = coverage(sd);
        v[r * n + c] = (1.0 - w) * v[r * n + c] + w * value;
      }
    }
  }
  for (double& e : v) e = std::clamp(e, 0.0, 1.0);
  return Image(n, n, std::move(v));
}

Image checker_text(std::size_t n, CounterRng& rng) {
  const int periods[] = {8, 12, 16};
  const double period = periods[rng.below(3)];
  const double phase_r = rng.uniform(0.0, period);
  const double phase_c = rng.uniform(0.0, period);
  const double lo = rng.uniform(0.2, 0.35);
  const double hi = rng.uniform(0.75, 0.95);
  std::vector<double> v(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto br = static_cast<long>(std::floor((static_cast<double>(r) + phase_r) / (period / 2.0)));
      const auto bc = static_cast<long>(std::floor((static_cast<double>(c) + phase_c) / (period / 2.0)));
      v[r * n + c] = ((br + bc) % 2 == 0) ? lo : hi;
    }
  }
  const double size = static_cast<double>(n);
  const int strokes = 3 + static_cast<int>(rng.below(4));
  for (int s = 0; s < strokes; ++s) {
    // A glyph is a short polyline of 2-3 segments.
    double ax = rng.uniform(0.1, 0.9) * size;
    double ay = rng.uniform(0.1, 0.9) * size;
    const int segs = 2 + static_cast<int>(rng.below(2));
    const double ink = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const double half_width = rng.uniform(0.6, 1.2);
    for (int k = 0; k < segs; ++k) {
      const double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double len = rng.uniform(0.08, 0.2) * size;
      const double bx = std::clamp(ax + len * std::cos(ang), 0.0, size);
      const double by = std::clamp(ay + len * std::sin(ang), 0.0, size);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          const double d = segment_distance(static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5, ax, ay,
                                            bx, by);
          const double w = coverage(d - half_width);
          v[r * n + c] = (1.0 - w) * v[r * n + c] + w * ink;
        }
      }
      ax = bx;
      ay = by;
    }
  }
  return Image(n, n, std::move(v));
}

}  // namespace

std::string to_string(SceneClass c) {
  switch (c) {
    case SceneClass::SmoothField:
      return "smooth_field";
    case SceneClass::Shapes:
      return "shapes";
    case SceneClass::CheckerText:
      return "checker_text";
  }
  return "unknown";
}

SceneClass parse_scene_class(const std::string& text) {
  if (text == "smooth_field") return SceneClass::SmoothField;
  if (text == "shapes") return SceneClass::Shapes;
  if (text == "checker_text") return SceneClass::CheckerText;
  throw UsageError("unknown scene class: " + text);
}

Image generate_scene(const SceneSpec& spec) {
  if (spec.size < 32 || !is_power_of_two(spec.size)) throw UsageError("scene size must be a power of two >= 32");
  CounterRng rng(derive_seed(spec.seed, to_string(spec.class_id)));
  switch (spec.class_id) {
    case SceneClass::SmoothField:
      return smooth_field(spec.size, rng);
    case SceneClass::Shapes:
      return shapes(spec.size, rng);
    case SceneClass::CheckerText:
      return checker_text(spec.size, rng);
  }
  throw UsageError("unknown scene class");
}

}  // namespace cycleuq
