#include <gtest/gtest.h>

#include <filesystem>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/format.hpp"

namespace cycleuq {
namespace {

TEST(Config, TestbedDefaults) {
  EXPECT_EQ(default_config(Testbed::Deblur).n_cycles, 5);
  EXPECT_EQ(default_config(Testbed::Sr).n_cycles, 3);
  EXPECT_EQ(default_config(Testbed::Sr).testbed, Testbed::Sr);
}

TEST(Config, RoundTripIsLossless) {
  for (Testbed t : {Testbed::Deblur, Testbed::Sr}) {
    ExperimentConfig c = default_config(t);
    c.master_seed = 0xfedcba9876543210ULL;
    c.noise.id_max = 0.1 * 0.07;  // 0.007000000000000001
    c.classifier.grid.max_depth = {2, 5};
    const std::string text = config_json(c);
    EXPECT_EQ(config_json(parse_config_json(text)), text);
    EXPECT_EQ(parse_config_json(text).master_seed, c.master_seed);
    EXPECT_EQ(parse_config_json(text).noise.id_max, c.noise.id_max);
  }
}

TEST(Config, PartialFileKeepsTestbedDefaults) {
  const ExperimentConfig c = parse_config_json(R"({"testbed": "sr", "data": {"n_test": 7}})");
  EXPECT_EQ(c.n_cycles, 3);
  EXPECT_EQ(c.data.n_test, 7);
  EXPECT_EQ(c.data.n_train_id, default_config(Testbed::Sr).data.n_train_id);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(parse_config_json(R"({"testbed": "deblur", "colour": 1})"), UsageError);
  EXPECT_THROW(parse_config_json(R"({"data": {"n_tests": 1}})"), UsageError);
  EXPECT_THROW(parse_config_json("[1, 2]"), UsageError);
  EXPECT_THROW(parse_config_json("{"), UsageError);
}

TEST(Config, Overrides) {
  ExperimentConfig c = default_config(Testbed::Deblur);
  apply_override(c, "n_cycles=7");
  apply_override(c, "solver.lambda_grid=[0.5, 0.25]");
  apply_override(c, "output_dir=runs/a");
  apply_override(c, "classifier.grid.subsample=[1.0]");
  EXPECT_EQ(c.n_cycles, 7);
  EXPECT_EQ(c.solver.lambda_grid, (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(c.output_dir, "runs/a");
  EXPECT_EQ(c.classifier.grid.subsample, (std::vector<double>{1.0}));
  EXPECT_THROW(apply_override(c, "nope.key=1"), UsageError);
  EXPECT_THROW(apply_override(c, "data=1"), UsageError);
  EXPECT_THROW(apply_override(c, "no_equals_sign"), UsageError);
  EXPECT_THROW(apply_override(c, "n_cycles=\"five\""), UsageError);
}

TEST(Config, ValidationRejectsBadValues) {
  ExperimentConfig c = default_config(Testbed::Deblur);
  c.n_cycles = 2;
  EXPECT_THROW(validate(c), UsageError);
  c = default_config(Testbed::Deblur);
  c.scene.size = 48;
  EXPECT_THROW(validate(c), UsageError);
  c = default_config(Testbed::Deblur);
  c.solver.lambda_grid = {};
  EXPECT_THROW(validate(c), UsageError);
  EXPECT_NO_THROW(validate(default_config(Testbed::Sr)));
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "cycleuq_config_test.json";
  write_text_file(path, R"({"testbed": "deblur", "master_seed": 99})");
  EXPECT_EQ(load_config(path).master_seed, 99u);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), UsageError);
}

}  // namespace
}  // namespace cycleuq
