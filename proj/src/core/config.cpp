#include "core/config.hpp"

#include <json.hpp>

#include "core/error.hpp"
#include "core/fft.hpp"
#include "core/format.hpp"
#include "core/scenes.hpp"

namespace cycleuq {

namespace {

using nlohmann::ordered_json;

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["testbed"] = to_string(c.testbed);
  j["n_cycles"] = c.n_cycles;
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  j["jobs"] = c.jobs;
  j["scene"] = {{"size", c.scene.size}, {"classes", c.scene.classes}};
  j["forward"] = {{"kernel_size", c.forward.kernel_size},         {"min_steps", c.forward.min_steps},
                  {"max_steps", c.forward.max_steps},             {"n_train_kernels", c.forward.n_train_kernels},
                  {"n_test_kernels", c.forward.n_test_kernels},   {"pool_factor", c.forward.pool_factor}};
  j["solver"] = {{"lambda_grid", c.solver.lambda_grid},
                 {"landweber_steps", c.solver.landweber_steps},
                 {"landweber_clamp", c.solver.landweber_clamp},
                 {"n_calibration", c.solver.n_calibration}};
  j["noise"] = {{"id_max", c.noise.id_max},           {"ood_min", c.noise.ood_min},
                {"ood_max", c.noise.ood_max},         {"sigma_grid", c.noise.sigma_grid},
                {"snp_grid", c.noise.snp_grid},       {"sr_ood_min", c.noise.sr_ood_min},
                {"sr_ood_max", c.noise.sr_ood_max},   {"sr_id_levels", c.noise.sr_id_levels}};
  j["data"] = {{"n_train_id", c.data.n_train_id},
               {"n_train_ood", c.data.n_train_ood},
               {"n_test", c.data.n_test},
               {"n_predictor", c.data.n_predictor},
               {"n_predictor_snp", c.data.n_predictor_snp},
               {"predictor_sigma_max", c.data.predictor_sigma_max},
               {"n_curves", c.data.n_curves}};
  const HyperGrid& g = c.classifier.grid;
  j["classifier"] = {{"tune_budget", c.classifier.tune_budget},
                     {"grid",
                      {{"n_trees", g.n_trees},
                       {"max_depth", g.max_depth},
                       {"min_child_weight", g.min_child_weight},
                       {"learning_rate", g.learning_rate},
                       {"reg_lambda", g.reg_lambda},
                       {"subsample", g.subsample}}}};
  j["predictor"] = {{"ridge", c.predictor.ridge}};
  j["bounds"] = {{"n_images", c.bounds.n_images},
                 {"lambda", c.bounds.lambda},
                 {"sigma", c.bounds.sigma},
                 {"probes", c.bounds.probes},
                 {"calibrate", c.bounds.calibrate}};
  return j;
}

ExperimentConfig from_json(const ordered_json& j) {
  ExperimentConfig c;
  c.testbed = parse_testbed(j.at("testbed").get<std::string>());
  c.n_cycles = j.at("n_cycles").get<int>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.output_dir = j.at("output_dir").get<std::string>();
  c.jobs = j.at("jobs").get<int>();
  const auto& s = j.at("scene");
  c.scene.size = s.at("size").get<std::size_t>();
  c.scene.classes = s.at("classes").get<std::vector<std::string>>();
  const auto& f = j.at("forward");
  c.forward.kernel_size = f.at("kernel_size").get<int>();
  c.forward.min_steps = f.at("min_steps").get<int>();
  c.forward.max_steps = f.at("max_steps").get<int>();
  c.forward.n_train_kernels = f.at("n_train_kernels").get<int>();
  c.forward.n_test_kernels = f.at("n_test_kernels").get<int>();
  c.forward.pool_factor = f.at("pool_factor").get<int>();
  const auto& sv = j.at("solver");
  c.solver.lambda_grid = sv.at("lambda_grid").get<std::vector<double>>();
  c.solver.landweber_steps = sv.at("landweber_steps").get<int>();
  c.solver.landweber_clamp = sv.at("landweber_clamp").get<bool>();
  c.solver.n_calibration = sv.at("n_calibration").get<int>();
  const auto& n = j.at("noise");
  c.noise.id_max = n.at("id_max").get<double>();
  c.noise.ood_min = n.at("ood_min").get<double>();
  c.noise.ood_max = n.at("ood_max").get<double>();
  c.noise.sigma_grid = n.at("sigma_grid").get<std::vector<double>>();
  c.noise.snp_grid = n.at("snp_grid").get<std::vector<double>>();
  c.noise.sr_ood_min = n.at("sr_ood_min").get<double>();
  c.noise.sr_ood_max = n.at("sr_ood_max").get<double>();
  c.noise.sr_id_levels = n.at("sr_id_levels").get<std::vector<double>>();
  const auto& d = j.at("data");
  c.data.n_train_id = d.at("n_train_id").get<int>();
  c.data.n_train_ood = d.at("n_train_ood").get<int>();
  c.data.n_test = d.at("n_test").get<int>();
  c.data.n_predictor = d.at("n_predictor").get<int>();
  c.data.n_predictor_snp = d.at("n_predictor_snp").get<int>();
  c.data.predictor_sigma_max = d.at("predictor_sigma_max").get<double>();
  c.data.n_curves = d.at("n_curves").get<int>();
  const auto& cl = j.at("classifier");
  c.classifier.tune_budget = cl.at("tune_budget").get<int>();
  const auto& g = cl.at("grid");
  c.classifier.grid.n_trees = g.at("n_trees").get<std::vector<int>>();
  c.classifier.grid.max_depth = g.at("max_depth").get<std::vector<int>>();
  c.classifier.grid.min_child_weight = g.at("min_child_weight").get<std::vector<double>>();
  c.classifier.grid.learning_rate = g.at("learning_rate").get<std::vector<double>>();
  c.classifier.grid.reg_lambda = g.at("reg_lambda").get<std::vector<double>>();
  c.classifier.grid.subsample = g.at("subsample").get<std::vector<double>>();
  c.predictor.ridge = j.at("predictor").at("ridge").get<double>();
  const auto& b = j.at("bounds");
  c.bounds.n_images = b.at("n_images").get<int>();
  c.bounds.lambda = b.at("lambda").get<double>();
  c.bounds.sigma = b.at("sigma").get<double>();
  c.bounds.probes = b.at("probes").get<int>();
  c.bounds.calibrate = b.at("calibrate").get<bool>();
  return c;
}

void merge_known(ordered_json& base, const ordered_json& user, const std::string& prefix) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw UsageError("unknown config key: " + key);
    ordered_json& slot = base[it.key()];
    if (slot.is_object()) {
      if (!it.value().is_object()) throw UsageError("config key must be a section: " + key);
      merge_known(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

ExperimentConfig checked(const ordered_json& j) {
  try {
    ExperimentConfig c = from_json(j);
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
}

}  // namespace

ExperimentConfig default_config(Testbed t) {
  ExperimentConfig c;
  c.testbed = t;
  if (t == Testbed::Sr) {
    c.n_cycles = 3;
    c.scene.size = 128;
    c.solver.lambda_grid = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1};
    c.data.n_train_id = 100;
    c.data.n_train_ood = 120;
  }
  return c;
}

std::string config_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ExperimentConfig parse_config_json(const std::string& text) {
  ordered_json user;
  try {
    user = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) throw UsageError("config must be a JSON object");
  Testbed t = Testbed::Deblur;
  if (user.contains("testbed")) {
    if (!user["testbed"].is_string()) throw UsageError("testbed must be a string");
    t = parse_testbed(user["testbed"].get<std::string>());
  }
  ordered_json base = to_json(default_config(t));
  merge_known(base, user, "");
  return checked(base);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw UsageError(e.what());
  }
  return parse_config_json(text);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;
  }
  ordered_json j = to_json(cfg);
  ordered_json* slot = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!slot->is_object() || !slot->contains(key)) throw UsageError("unknown config key: " + path);
    slot = &(*slot)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (slot->is_object()) throw UsageError("cannot override a whole section: " + path);
  *slot = value;
  cfg = checked(j);
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("invalid config: ") + what);
  };
  require(c.n_cycles >= 3, "n_cycles must be >= 3");
  require(c.jobs >= 1, "jobs must be >= 1");
  require(c.scene.size >= 32 && is_power_of_two(c.scene.size), "scene.size must be a power of two >= 32");
  require(!c.scene.classes.empty(), "scene.classes is empty");
  for (const auto& name : c.scene.classes) parse_scene_class(name);
  require(c.forward.kernel_size >= 3 && c.forward.kernel_size % 2 == 1 && c.forward.kernel_size <= 63,
          "forward.kernel_size must be odd in [3, 63]");
  require(static_cast<std::size_t>(c.forward.kernel_size) <= c.scene.size, "kernel larger than the scene");
  require(c.forward.min_steps >= 1 && c.forward.max_steps >= c.forward.min_steps, "forward steps range");
  require(c.forward.n_train_kernels >= 1 && c.forward.n_test_kernels >= 1, "kernel pool sizes must be >= 1");
  require(c.forward.pool_factor >= 2 && c.scene.size % static_cast<std::size_t>(c.forward.pool_factor) == 0 &&
              is_power_of_two(c.scene.size / static_cast<std::size_t>(c.forward.pool_factor)),
          "forward.pool_factor must divide the scene into a power-of-two grid");
  require(!c.solver.lambda_grid.empty(), "solver.lambda_grid is empty");
  for (double l : c.solver.lambda_grid) require(l >= 0.0, "lambda must be >= 0");
  require(c.solver.landweber_steps >= 1, "solver.landweber_steps must be >= 1");
  require(c.solver.n_calibration >= 1, "solver.n_calibration must be >= 1");
  require(c.noise.id_max > 0.0 && c.noise.ood_min >= c.noise.id_max && c.noise.ood_max > c.noise.ood_min,
          "noise ranges");
  require(c.noise.sr_ood_max > c.noise.sr_ood_min && c.noise.sr_ood_min > 0.0, "sr noise range");
  require(c.data.n_train_id >= 5 && c.data.n_train_ood >= 5, "training counts must be >= 5");
  require(c.data.n_test >= 1, "data.n_test must be >= 1");
  require(c.data.n_predictor >= 10 && c.data.n_predictor_snp >= 2, "predictor counts");
  require(c.data.n_curves >= 0, "data.n_curves must be >= 0");
  require(c.classifier.tune_budget >= 1, "classifier.tune_budget must be >= 1");
  require(c.classifier.grid.size() > 0, "classifier.grid has an empty axis");
  require(c.predictor.ridge >= 0.0, "predictor.ridge must be >= 0");
  require(c.bounds.n_images >= 1 && c.bounds.probes >= 1 && c.bounds.lambda >= 0.0 && c.bounds.sigma >= 0.0,
          "bounds section");
}

}  // namespace cycleuq
