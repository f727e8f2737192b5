#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/boosting.hpp"
#include "core/bounds.hpp"
#include "core/config.hpp"
#include "core/dataset.hpp"
#include "core/linear_model.hpp"
#include "core/regression.hpp"
#include "core/solvers.hpp"

namespace cycleuq {

// One measurement pushed through the cycle engine and the feature fits.
struct SampleResult {
  std::string set;
  std::string id;
  std::string scene_class;
  int label = 0;
  NoiseKind noise = NoiseKind::None;
  double sigma = 0.0;
  std::uint64_t hash = 0;
  double eps0 = 0.0;
  TraceFeatures features;
  std::vector<double> dy;
  std::vector<double> dx;
  double score_cycle = 0.0;  // OOD probability, five-feature classifier
  double score_dx1 = 0.0;    // OOD probability, dx1-only baseline
};

// Pushes recipes through synthesis, cycles and feature extraction. `solver_for`
// maps a recipe to its solver (Wiener solvers carry the per-sample kernel).
template <typename SolverFor>
std::vector<SampleResult> process_samples(const std::string& set, const std::vector<SampleRecipe>& recipes,
                                          SolverFor&& solver_for, int n_cycles, int jobs);

struct EvalRow {
  std::string experiment_id;
  std::string subset;
  double accuracy = 0.0;
  double auc = 0.0;  // NaN when the subset holds a single class
  double ap = 0.0;
  double f1 = 0.0;
  std::size_t n_samples = 0;
};

EvalRow evaluate_scores(const std::string& experiment_id, const std::string& subset,
                        const std::vector<double>& scores, const std::vector<int>& labels, double threshold);

struct SigmaPoint {
  std::string noise_kind;
  double sigma = 0.0;
  double accuracy_cycle = 0.0;
  double accuracy_dx1 = 0.0;
  std::size_t n_samples = 0;
};

struct DeblurReport {
  ExperimentConfig config;
  CalibrationResult calibration;
  TuneResult classifier;
  TuneResult baseline;
  std::vector<double> importance;
  LinearModel predictor;
  double predictor_r2_train = 0.0;
  double predictor_r2_snp = 0.0;
  std::vector<EvalRow> table;
  std::vector<SigmaPoint> accuracy_vs_sigma;
  std::vector<SampleResult> samples;  // every processed sample, tagged by set
};

DeblurReport run_deblur_experiment(const ExperimentConfig& cfg);

struct SrClassReport {
  std::string scene_class;
  CalibrationResult calibration;
  TuneResult classifier;
  TuneResult baseline;
};

struct SrReport {
  ExperimentConfig config;
  std::vector<SrClassReport> classes;
  // [train class][test class]; diagonal = fraction of same-class ID images
  // predicted ID, off-diagonal = fraction of other-class images predicted OOD.
  std::vector<std::vector<double>> matrix_cycle;
  std::vector<std::vector<double>> matrix_dx1;
  std::vector<EvalRow> table;
  std::vector<SampleResult> samples;
};

SrReport run_sr_experiment(const ExperimentConfig& cfg);

struct BoundsSuiteReport {
  double lambda = 0.0;
  std::size_t n_images = 0;
  double eq6_pass_rate = 0.0;
  double eq7_pass_rate = 0.0;
  // Among images whose lower-bound regime was conclusive.
  double eq9or10_pass_rate = 0.0;
  std::size_t n_eq9 = 0;
  std::size_t n_eq10 = 0;
  std::size_t n_inconclusive = 0;
  std::vector<BoundsReport> images;
};

BoundsSuiteReport run_bounds_suite(const ExperimentConfig& cfg);

// The deblur training/test split or the per-class SR split, as recipes.
std::vector<SampleRecipe> dataset_recipes(const ExperimentConfig& cfg);
std::vector<ManifestRow> generate_dataset(const ExperimentConfig& cfg, const std::filesystem::path& dir);

// Runs cycles on every manifest row. Without an explicit lambda, each scene
// class is calibrated on its label-0 rows over cfg.solver.lambda_grid.
std::vector<FeatureRow> fit_manifest_features(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                              std::optional<double> lambda);

// Report files are a pure function of the report: no timings, fixed order.
void write_deblur_report(const DeblurReport& r, const std::filesystem::path& dir);
void write_sr_report(const SrReport& r, const std::filesystem::path& dir);
void write_bounds_report(const BoundsSuiteReport& r, const std::filesystem::path& dir);
std::string bounds_suite_json(const BoundsSuiteReport& r);

std::string samples_csv(const std::vector<SampleResult>& samples, int n_cycles);

// Reads samples.csv (and matrix/importance files when present) from a report
// directory and writes per-figure CSVs into `out`.
void emit_plotdata(const std::filesystem::path& report_dir, const std::filesystem::path& out, int n_curves);

}  // namespace cycleuq

#include "core/experiment_impl.hpp"
