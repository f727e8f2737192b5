#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/fft.hpp"
#include "core/scenes.hpp"

namespace cycleuq {
namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

TEST(Scenes, Deterministic) {
  for (SceneClass c : kAllSceneClasses) {
    EXPECT_EQ(generate_scene({c, 64, 5}), generate_scene({c, 64, 5}));
    EXPECT_NE(generate_scene({c, 64, 5}), generate_scene({c, 64, 6}));
  }
}

TEST(Scenes, UnitRange) {
  for (SceneClass c : kAllSceneClasses) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Image im = generate_scene({c, 32, s});
      EXPECT_EQ(im.height(), 32u);
      for (double v : im.data()) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
      }
    }
  }
}

TEST(Scenes, SmoothFieldIsLowPass) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image im = generate_scene({SceneClass::SmoothField, 64, s});
    const double m = mean(im);
    std::vector<double> centered(im.data().begin(), im.data().end());
    for (auto& v : centered) v -= m;
    const Spectrum sp = fft2(Image(64, 64, centered));
    double low = 0.0, total = 0.0;
    for (std::size_t k = 0; k < 64; ++k) {
      for (std::size_t l = 0; l < 64; ++l) {
        const double fk = k < 32 ? double(k) : 64.0 - k;
        const double fl = l < 32 ? double(l) : 64.0 - l;
        const double e = std::norm(sp.at(k, l));
        total += e;
        if (std::hypot(fk, fl) < 64.0 / 8.0) low += e;
      }
    }
    EXPECT_GE(low / total, 0.95);
  }
}

TEST(Scenes, ClassMeansDistinguishable) {
  std::vector<std::vector<double>> means(3);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::uint64_t s = 0; s < 100; ++s) means[c].push_back(mean(generate_scene({kAllSceneClasses[c], 64, s})));
  }
  // Asymptotic critical value at alpha = 0.01 for n = m = 100.
  const double critical = 1.628 * std::sqrt(2.0 / 100.0);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = a + 1; b < 3; ++b) EXPECT_GT(ks_statistic(means[a], means[b]), critical) << a << " vs " << b;
  }
}

TEST(Scenes, BadSizeRejected) {
  EXPECT_THROW(generate_scene({SceneClass::Shapes, 48, 1}), UsageError);
  EXPECT_THROW(generate_scene({SceneClass::Shapes, 16, 1}), UsageError);
}

TEST(Scenes, NamesRoundTrip) {
  for (SceneClass c : kAllSceneClasses) EXPECT_EQ(parse_scene_class(to_string(c)), c);
  EXPECT_THROW(parse_scene_class("faces"), UsageError);
}

}  // namespace
}  // namespace cycleuq
