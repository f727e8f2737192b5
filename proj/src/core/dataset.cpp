#include "core/dataset.hpp"

#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/format.hpp"

namespace cycleuq {

std::string to_string(Testbed t) { return t == Testbed::Deblur ? "deblur" : "sr"; }

Testbed parse_testbed(const std::string& text) {
  if (text == "deblur") return Testbed::Deblur;
  if (text == "sr") return Testbed::Sr;
  throw UsageError("unknown testbed: " + text);
}

double id_threshold(Testbed t) { return t == Testbed::Deblur ? 0.01 : 0.02; }

int label_for(Testbed t, NoiseKind kind, double sigma) {
  if (kind == NoiseKind::None) return 0;
  return sigma < id_threshold(t) ? 0 : 1;
}

Sample synthesize(const SampleRecipe& recipe) {
  Image gt = generate_scene(recipe.scene);
  Image x = apply_noise(apply_forward(gt, recipe.forward), recipe.noise);
  return Sample{recipe, std::move(gt), std::move(x)};
}

std::vector<ManifestRow> write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& dir) {
  std::vector<ManifestRow> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) {
    const std::string& id = s.recipe.id;
    if (id.empty() || id.find('/') != std::string::npos) throw DataError("bad sample id: '" + id + "'");
    ManifestRow row;
    row.path = "x/" + id + ".cgf";
    row.ground_truth_path = "gt/" + id + ".cgf";
    row.scene_class = to_string(s.recipe.scene.class_id);
    row.sigma = s.recipe.noise.sigma;
    row.noise_kind = to_string(s.recipe.noise.kind);
    row.label = s.recipe.label;
    row.hash = content_hash(s.measurement);
    row.ground_truth_hash = content_hash(s.ground_truth);
    std::filesystem::create_directories(dir / "x");
    std::filesystem::create_directories(dir / "gt");
    io::write_cgf(s.measurement, dir / row.path);
    io::write_pgm(s.measurement, dir / ("x/" + id + ".pgm"));
    io::write_cgf(s.ground_truth, dir / row.ground_truth_path);
    io::write_pgm(s.ground_truth, dir / ("gt/" + id + ".pgm"));
    if (s.recipe.forward.is_blur()) {
      row.kernel_path = "kernels/" + id + ".txt";
      std::filesystem::create_directories(dir / "kernels");
      io::write_kernel(s.recipe.forward.kernel(), dir / row.kernel_path);
    }
    rows.push_back(std::move(row));
  }
  write_text_file(dir / "manifest.jsonl", manifest_jsonl(rows));
  return rows;
}

std::string manifest_jsonl(const std::vector<ManifestRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["path"] = r.path;
    j["class"] = r.scene_class;
    j["sigma"] = r.sigma;
    j["noise_kind"] = r.noise_kind;
    j["label"] = r.label;
    j["ground_truth_path"] = r.ground_truth_path;
    j["kernel_path"] = r.kernel_path;
    j["hash"] = r.hash;
    j["ground_truth_hash"] = r.ground_truth_hash;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ManifestRow> parse_manifest(const std::string& text) {
  std::vector<ManifestRow> rows;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestRow r;
      r.path = j.at("path").get<std::string>();
      r.scene_class = j.at("class").get<std::string>();
      r.sigma = j.at("sigma").get<double>();
      r.noise_kind = j.at("noise_kind").get<std::string>();
      r.label = j.at("label").get<int>();
      r.ground_truth_path = j.at("ground_truth_path").get<std::string>();
      r.kernel_path = j.value("kernel_path", "");
      r.hash = j.at("hash").get<std::uint64_t>();
      r.ground_truth_hash = j.value("ground_truth_hash", std::uint64_t{0});
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& dir) {
  return parse_manifest(read_text_file(dir / "manifest.jsonl"));
}

std::vector<std::string> verify_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& dir) {
  std::vector<std::string> bad;
  for (const auto& r : rows) {
    if (content_hash(io::read_image(dir / r.path)) != r.hash) bad.push_back(r.path);
    if (r.ground_truth_hash != 0 && content_hash(io::read_image(dir / r.ground_truth_path)) != r.ground_truth_hash) {
      bad.push_back(r.ground_truth_path);
    }
  }
  return bad;
}

}  // namespace cycleuq
