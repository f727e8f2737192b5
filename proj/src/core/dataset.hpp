#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/noise.hpp"
#include "core/operators.hpp"
#include "core/scenes.hpp"

namespace cycleuq {

enum class Testbed { Deblur, Sr };

std::string to_string(Testbed t);
Testbed parse_testbed(const std::string& text);

// Noise level below which a sample is in-distribution (label 0):
// 0.01 for deblurring, 0.02 for super-resolution.
double id_threshold(Testbed t);
int label_for(Testbed t, NoiseKind kind, double sigma);

// Everything needed to regenerate one sample bit-identically.
struct SampleRecipe {
  std::string id;
  SceneSpec scene;
  ForwardSpec forward;
  NoiseSpec noise;
  int label = 0;
};

struct Sample {
  SampleRecipe recipe;
  Image ground_truth;
  Image measurement;
};

// measurement = noise(f∘h(scene)).
Sample synthesize(const SampleRecipe& recipe);

struct ManifestRow {
  std::string path;
  std::string scene_class;
  double sigma = 0.0;
  std::string noise_kind;
  int label = 0;
  std::string ground_truth_path;
  std::string kernel_path;  // empty for pooling forward models
  std::uint64_t hash = 0;
  std::uint64_t ground_truth_hash = 0;
};

// Writes <id>.cgf / <id>.pgm, ground truth and kernel files under `dir`, and
// dir/manifest.jsonl with paths relative to `dir`.
std::vector<ManifestRow> write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& dir);

std::string manifest_jsonl(const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> parse_manifest(const std::string& text);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& dir);

// Re-reads every image referenced by the manifest and checks its hash.
// Returns the paths that did not match.
std::vector<std::string> verify_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& dir);

}  // namespace cycleuq
