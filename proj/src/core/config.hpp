#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/boosting.hpp"
#include "core/dataset.hpp"

namespace cycleuq {

struct SceneConfig {
  std::size_t size = 64;
  // Deblur uses the first class; SR runs over all listed classes.
  std::vector<std::string> classes{"shapes", "smooth_field", "checker_text"};
};

struct ForwardConfig {
  int kernel_size = 15;
  int min_steps = 8;
  int max_steps = 40;
  int n_train_kernels = 26;
  int n_test_kernels = 5;
  int pool_factor = 4;
};

struct SolverConfig {
  std::vector<double> lambda_grid{1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  int landweber_steps = 30;
  bool landweber_clamp = true;
  int n_calibration = 20;
};

struct NoiseConfig {
  double id_max = 0.01;     // deblur ID: Gaussian sigma in [0, id_max)
  double ood_min = 0.01;    // deblur OOD: Gaussian sigma in [ood_min, ood_max]
  double ood_max = 0.10;
  std::vector<double> sigma_grid{0.005, 0.009, 0.01, 0.02, 0.05, 0.10};
  std::vector<double> snp_grid{0.01, 0.02, 0.05, 0.10};
  double sr_ood_min = 0.02;
  double sr_ood_max = 0.05;
  std::vector<double> sr_id_levels{0.005, 0.01};
};

struct DataConfig {
  int n_train_id = 100;
  int n_train_ood = 120;
  int n_test = 50;
  int n_predictor = 200;
  int n_predictor_snp = 100;
  double predictor_sigma_max = 0.10;
  int n_curves = 3;
};

struct ClassifierConfig {
  int tune_budget = 20;
  HyperGrid grid;
};

struct PredictorConfig {
  double ridge = 1e-8;
};

struct BoundsConfig {
  int n_images = 50;
  double lambda = 1e-2;
  double sigma = 0.02;
  int probes = 8;
  // Calibrate lambda on noiseless ID data instead of using `lambda`.
  bool calibrate = false;
};

struct ExperimentConfig {
  Testbed testbed = Testbed::Deblur;
  int n_cycles = 5;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  int jobs = 1;
  SceneConfig scene;
  ForwardConfig forward;
  SolverConfig solver;
  NoiseConfig noise;
  DataConfig data;
  ClassifierConfig classifier;
  PredictorConfig predictor;
  BoundsConfig bounds;
};

// Testbed defaults: N = 5 for deblurring, N = 3 for super-resolution.
ExperimentConfig default_config(Testbed t);

std::string config_json(const ExperimentConfig& cfg);
// Missing keys keep the defaults of the declared testbed. Unknown keys are
// rejected.
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// "section.key=value" where value is JSON, or a bare string.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

void validate(const ExperimentConfig& cfg);

}  // namespace cycleuq
