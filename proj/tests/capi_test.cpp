#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <cycleuq/cycleuq.h>

namespace {

namespace fs = std::filesystem;

std::vector<double> ramp(std::size_t h, std::size_t w) {
  std::vector<double> v(h * w);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.2 + 0.6 * double((i * 37) % 101) / 100.0;
  return v;
}

TEST(CApi, VersionAndDefaultConfig) {
  EXPECT_NE(std::string(cuq_version()), "");
  cuq_config* cfg = nullptr;
  ASSERT_EQ(cuq_config_default("deblur", &cfg), CUQ_OK);
  char* json = nullptr;
  ASSERT_EQ(cuq_config_to_json(cfg, &json), CUQ_OK);
  EXPECT_NE(std::string(json).find("\"testbed\""), std::string::npos);
  cuq_free_string(json);
  cuq_config_free(cfg);
}

TEST(CApi, ErrorsMapToStatuses) {
  cuq_config* cfg = nullptr;
  EXPECT_EQ(cuq_config_default("tomography", &cfg), CUQ_ERR_USAGE);
  EXPECT_NE(std::string(cuq_last_error()), "");
  EXPECT_EQ(cfg, nullptr);

  ASSERT_EQ(cuq_config_default("sr", &cfg), CUQ_OK);
  EXPECT_EQ(cuq_config_set(cfg, "scene.no_such_key=1"), CUQ_ERR_USAGE);
  EXPECT_EQ(cuq_config_set(cfg, "n_cycles=4"), CUQ_OK);
  cuq_config_free(cfg);

  EXPECT_EQ(cuq_config_parse("{not json", &cfg), CUQ_ERR_USAGE);

  cuq_image* img = nullptr;
  EXPECT_EQ(cuq_image_load("/nonexistent/cycleuq.cgf", &img), CUQ_ERR_IO);

  const double bad[4] = {0.1, NAN, 0.3, 0.4};
  EXPECT_EQ(cuq_image_create(2, 2, bad, &img), CUQ_ERR_DATA);
  EXPECT_EQ(cuq_image_create(2, 2, nullptr, &img), CUQ_ERR_USAGE);
}

TEST(CApi, ImageRoundTrip) {
  const auto data = ramp(4, 6);
  cuq_image* img = nullptr;
  ASSERT_EQ(cuq_image_create(4, 6, data.data(), &img), CUQ_OK);
  EXPECT_EQ(cuq_image_height(img), 4u);
  EXPECT_EQ(cuq_image_width(img), 6u);
  const auto path = fs::temp_directory_path() / "cycleuq_capi_image.cgf";
  ASSERT_EQ(cuq_image_save(img, path.c_str()), CUQ_OK);
  cuq_image* back = nullptr;
  ASSERT_EQ(cuq_image_load(path.c_str(), &back), CUQ_OK);
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(cuq_image_data(back)[i], data[i]);
  cuq_image_free(img);
  cuq_image_free(back);
  fs::remove(path);
}

TEST(CApi, WienerCycleTrace) {
  const auto data = ramp(32, 32);
  cuq_image* x = nullptr;
  cuq_kernel* k = nullptr;
  ASSERT_EQ(cuq_image_create(32, 32, data.data(), &x), CUQ_OK);
  ASSERT_EQ(cuq_kernel_generate(3, 9, 10, &k), CUQ_OK);
  EXPECT_EQ(cuq_kernel_size(k), 9);
  double sum = 0.0;
  for (int i = 0; i < 81; ++i) sum += cuq_kernel_weights(k)[i];
  EXPECT_NEAR(sum, 1.0, 1e-12);

  const cuq_forward_desc fwd{CUQ_FORWARD_BLUR, k, 0};
  const cuq_solver_desc sol{CUQ_SOLVER_WIENER, k, 1e-2, 0, 0, 0.0, 0};
  cuq_trace* t = nullptr;
  ASSERT_EQ(cuq_run_cycles(x, &sol, &fwd, 5, &t), CUQ_OK);
  EXPECT_EQ(cuq_trace_cycles(t), 5);
  for (int n = 1; n < 5; ++n) EXPECT_LE(cuq_trace_dy(t)[n], cuq_trace_dy(t)[n - 1] * (1 + 1e-9) + 1e-15);

  cuq_features f{};
  ASSERT_EQ(cuq_trace_features(t, &f), CUQ_OK);
  EXPECT_EQ(f.dx1, cuq_trace_dx(t)[0]);
  EXPECT_GE(f.eps_y, 0.0);

  double eps0 = -1.0;
  ASSERT_EQ(cuq_trace_eps0(t, x, &eps0), CUQ_OK);
  EXPECT_GT(eps0, 0.0);

  char* report = nullptr;
  ASSERT_EQ(cuq_trace_bounds_json(t, &sol, &fwd, x, 1, &report), CUQ_OK);
  EXPECT_NE(std::string(report).find("\"L_hat\""), std::string::npos);
  cuq_free_string(report);

  EXPECT_EQ(cuq_run_cycles(x, &sol, &fwd, 0, &t), CUQ_ERR_USAGE);
  cuq_trace_free(t);
  cuq_kernel_free(k);
  cuq_image_free(x);
}

TEST(CApi, NullHandlesAreSafe) {
  EXPECT_EQ(cuq_trace_cycles(nullptr), 0);
  EXPECT_EQ(cuq_kernel_size(nullptr), 0);
  cuq_image_free(nullptr);
  cuq_trace_free(nullptr);
  cuq_config_free(nullptr);
  cuq_classifier_free(nullptr);
  cuq_free_string(nullptr);
  cuq_features f{};
  EXPECT_EQ(cuq_trace_features(nullptr, &f), CUQ_ERR_USAGE);
}

}  // namespace
