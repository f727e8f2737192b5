// Command-line front end over the cycleuq C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cycleuq/cycleuq.h"

namespace {

struct Failure {
  cuq_status status;
  std::string message;
};

void check(cuq_status s) {
  if (s != CUQ_OK) throw Failure{s, cuq_last_error()};
}

int exit_code(cuq_status s) {
  switch (s) {
    case CUQ_OK:
      return 0;
    case CUQ_ERR_USAGE:
      return 1;
    case CUQ_ERR_DATA:
    case CUQ_ERR_IO:
      return 2;
    case CUQ_ERR_NUMERIC:
    case CUQ_ERR_INTERNAL:
      return 3;
  }
  return 3;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  cuq_free_string(s);
  return out;
}

struct Globals {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int jobs = 0;
  std::vector<std::string> overrides;
};

// Owns a cuq_config resolved from --config (or the testbed default), then
// --set overrides, then the dedicated global flags; later sources win.
class Config {
 public:
  Config(const Globals& g, const std::string& testbed) {
    if (!g.config_path.empty()) {
      check(cuq_config_load(g.config_path.c_str(), &cfg_));
      if (!testbed.empty() && json().at("testbed") != testbed) {
        throw Failure{CUQ_ERR_USAGE, "config testbed does not match this command (expected " + testbed + ")"};
      }
    } else {
      check(cuq_config_default(testbed.empty() ? "deblur" : testbed.c_str(), &cfg_));
    }
    for (const auto& o : g.overrides) set(o);
    if (g.seed_set) set("master_seed=" + std::to_string(g.seed));
    if (g.jobs > 0) set("jobs=" + std::to_string(g.jobs));
    if (!g.out.empty()) set("output_dir=" + nlohmann::json(g.out).dump());
  }
  ~Config() { cuq_config_free(cfg_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;

  const cuq_config* get() const { return cfg_; }
  std::string output_dir() const { return json().at("output_dir").get<std::string>(); }
  nlohmann::json json() const {
    char* s = nullptr;
    check(cuq_config_to_json(cfg_, &s));
    return nlohmann::json::parse(take(s));
  }

 private:
  void set(const std::string& assignment) { check(cuq_config_set(cfg_, assignment.c_str())); }

  cuq_config* cfg_ = nullptr;
};

class ImageHandle {
 public:
  explicit ImageHandle(const std::string& path) { check(cuq_image_load(path.c_str(), &img_)); }
  ~ImageHandle() { cuq_image_free(img_); }
  ImageHandle(const ImageHandle&) = delete;
  ImageHandle& operator=(const ImageHandle&) = delete;
  const cuq_image* get() const { return img_; }

 private:
  cuq_image* img_ = nullptr;
};

class KernelHandle {
 public:
  KernelHandle() = default;
  explicit KernelHandle(const std::string& path) { check(cuq_kernel_load(path.c_str(), &k_)); }
  ~KernelHandle() { cuq_kernel_free(k_); }
  KernelHandle(const KernelHandle&) = delete;
  KernelHandle& operator=(const KernelHandle&) = delete;
  const cuq_kernel* get() const { return k_; }

 private:
  cuq_kernel* k_ = nullptr;
};

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

struct CyclesArgs {
  std::string input;
  std::string ground_truth;
  std::string solver = "wiener";
  std::string forward = "blur";
  std::string kernel;
  double lambda = 1e-2;
  int factor = 4;
  int steps = 30;
  double step_size = 0.0;
  bool clamp = false;
  int n_cycles = 5;
  bool dump_images = false;
};

int run_cycles(const Globals& g, const CyclesArgs& a) {
  const Config cfg(g, "");
  const std::string out = cfg.output_dir();
  const ImageHandle x(a.input);
  const bool needs_kernel = a.solver == "wiener" || a.forward == "blur";
  if (needs_kernel && a.kernel.empty()) throw Failure{CUQ_ERR_USAGE, "--kernel is required for blur/wiener"};
  const KernelHandle kernel = needs_kernel ? KernelHandle(a.kernel) : KernelHandle();

  cuq_solver_desc solver{};
  solver.kind = a.solver == "wiener" ? CUQ_SOLVER_WIENER : CUQ_SOLVER_LANDWEBER;
  solver.kernel = kernel.get();
  solver.lambda = a.lambda;
  solver.factor = a.factor;
  solver.steps = a.steps;
  solver.step_size = a.step_size;
  solver.clamp = a.clamp ? 1 : 0;
  cuq_forward_desc forward{};
  forward.kind = a.forward == "blur" ? CUQ_FORWARD_BLUR : CUQ_FORWARD_POOL;
  forward.kernel = kernel.get();
  forward.pool_factor = a.factor;

  cuq_trace* trace = nullptr;
  check(cuq_run_cycles(x.get(), &solver, &forward, a.n_cycles, &trace));
  std::unique_ptr<cuq_trace, void (*)(cuq_trace*)> owned(trace, cuq_trace_free);
  std::filesystem::create_directories(out);
  check(cuq_trace_write_csv(trace, join(out, "trace.csv").c_str()));
  if (a.dump_images) check(cuq_trace_dump_images(trace, join(out, "images").c_str()));
  cuq_image* y0 = nullptr;
  check(cuq_trace_output(trace, &y0));
  const cuq_status saved = cuq_image_save(y0, join(out, "y0.pgm").c_str());
  cuq_image_free(y0);
  check(saved);

  cuq_features f{};
  const cuq_status fs = cuq_trace_features(trace, &f);
  if (fs == CUQ_OK) {
    std::printf("eps_x=%.6g eps_y=%.6g b_x=%.6g b_y=%.6g dx1=%.6g k_x=%.6g k_y=%.6g\n", f.eps_x, f.eps_y, f.b_x,
                f.b_y, f.dx1, f.k_x, f.k_y);
  } else if (a.n_cycles >= 3) {
    check(fs);
  }
  if (!a.ground_truth.empty()) {
    const ImageHandle gt(a.ground_truth);
    double eps0 = 0.0;
    check(cuq_trace_eps0(trace, gt.get(), &eps0));
    std::printf("eps0=%.6g\n", eps0);
    char* json = nullptr;
    check(cuq_trace_bounds_json(trace, &solver, &forward, gt.get(), 0, &json));
    const std::string text = take(json);
    std::FILE* fp = std::fopen(join(out, "bounds.json").c_str(), "w");
    if (!fp) throw Failure{CUQ_ERR_IO, "cannot write " + join(out, "bounds.json")};
    std::fputs(text.c_str(), fp);
    std::fputc('\n', fp);
    std::fclose(fp);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-consistency uncertainty quantification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON experiment config");
  auto* seed_opt = app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--set", g.overrides, "config override section.key=value (repeatable)");

  auto* gen = app.add_subcommand("gen-data", "synthesize a dataset with a manifest");
  std::string gen_testbed = "deblur";
  gen->add_option("--testbed", gen_testbed)->check(CLI::IsMember({"deblur", "sr"}));

  auto* cyc = app.add_subcommand("run-cycles", "run forward-backward cycles on one measurement");
  CyclesArgs ca;
  cyc->add_option("--input", ca.input, "measurement image (.pgm or .cgf)")->required();
  cyc->add_option("--ground-truth", ca.ground_truth, "ground truth for eps0 and bound checks");
  cyc->add_option("--solver", ca.solver)->check(CLI::IsMember({"wiener", "landweber"}));
  cyc->add_option("--forward", ca.forward)->check(CLI::IsMember({"blur", "pool"}));
  cyc->add_option("--kernel", ca.kernel, "kernel text file");
  cyc->add_option("--lambda", ca.lambda);
  cyc->add_option("--factor", ca.factor);
  cyc->add_option("--steps", ca.steps);
  cyc->add_option("--step-size", ca.step_size);
  cyc->add_flag("--clamp", ca.clamp);
  cyc->add_option("-n,--cycles", ca.n_cycles);
  cyc->add_flag("--dump-images", ca.dump_images);

  auto* fit = app.add_subcommand("fit-features", "cycle features for every manifest row");
  std::string fit_data;
  double fit_lambda = -1.0;
  fit->add_option("--data", fit_data, "dataset directory")->required();
  fit->add_option("--lambda", fit_lambda, "fixed lambda (default: calibrate)");

  auto* train = app.add_subcommand("train", "tune the OOD classifier on a feature CSV");
  std::string train_csv;
  bool dx1_only = false;
  bool with_predictor = false;
  train->add_option("--features", train_csv)->required();
  train->add_flag("--dx1-only", dx1_only, "baseline restricted to dx1");
  train->add_flag("--predictor", with_predictor, "also fit the linear eps0 predictor");

  auto* eval = app.add_subcommand("evaluate", "score a feature CSV with a trained classifier");
  std::string eval_model;
  std::string eval_csv;
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--features", eval_csv)->required();

  auto* deblur = app.add_subcommand("deblur-exp", "corrupted-input detection experiment");
  auto* sr = app.add_subcommand("sr-exp", "cross-class super-resolution experiment");
  auto* bounds = app.add_subcommand("verify-bounds", "Lipschitz bound verification suite");

  auto* plot = app.add_subcommand("plot-data", "per-figure CSVs from a report directory");
  std::string plot_report;
  int plot_curves = 3;
  plot->add_option("--report", plot_report)->required();
  plot->add_option("--curves", plot_curves);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  g.seed_set = seed_opt->count() > 0;

  try {
    if (*gen) {
      const Config cfg(g, gen_testbed);
      size_t n = 0;
      check(cuq_generate_dataset(cfg.get(), cfg.output_dir().c_str(), &n));
      std::printf("wrote %zu samples to %s\n", n, cfg.output_dir().c_str());
    } else if (*cyc) {
      return run_cycles(g, ca);
    } else if (*fit) {
      const Config cfg(g, "");
      std::filesystem::create_directories(cfg.output_dir());
      const std::string out = join(cfg.output_dir(), "features.csv");
      check(cuq_fit_features(cfg.get(), fit_data.c_str(), fit_lambda, out.c_str()));
      std::printf("wrote %s\n", out.c_str());
    } else if (*train) {
      const Config cfg(g, "");
      cuq_classifier* model = nullptr;
      check(cuq_classifier_train_csv(train_csv.c_str(), cfg.get(), dx1_only ? 1 : 0, &model));
      std::unique_ptr<cuq_classifier, void (*)(cuq_classifier*)> owned(model, cuq_classifier_free);
      std::filesystem::create_directories(cfg.output_dir());
      const std::string out = join(cfg.output_dir(), dx1_only ? "baseline.json" : "classifier.json");
      check(cuq_classifier_save(model, out.c_str()));
      std::printf("wrote %s\n", out.c_str());
      if (with_predictor) {
        double r2 = 0.0;
        const std::string pout = join(cfg.output_dir(), "predictor.json");
        check(cuq_predictor_fit_csv(train_csv.c_str(), cfg.json().at("predictor").at("ridge").get<double>(),
                                    pout.c_str(), &r2));
        std::printf("wrote %s (train R^2 %.4f)\n", pout.c_str(), r2);
      }
    } else if (*eval) {
      const Config cfg(g, "");
      cuq_classifier* model = nullptr;
      check(cuq_classifier_load(eval_model.c_str(), &model));
      std::unique_ptr<cuq_classifier, void (*)(cuq_classifier*)> owned(model, cuq_classifier_free);
      std::filesystem::create_directories(cfg.output_dir());
      char* metrics = nullptr;
      check(cuq_classifier_evaluate_csv(model, eval_csv.c_str(), join(cfg.output_dir(), "predictions.csv").c_str(),
                                        &metrics));
      const std::string text = take(metrics);
      std::printf("%s\n", text.c_str());
      std::FILE* fp = std::fopen(join(cfg.output_dir(), "metrics.json").c_str(), "w");
      if (!fp) throw Failure{CUQ_ERR_IO, "cannot write metrics.json"};
      std::fputs(text.c_str(), fp);
      std::fputc('\n', fp);
      std::fclose(fp);
    } else if (*deblur) {
      const Config cfg(g, "deblur");
      check(cuq_run_deblur_experiment(cfg.get(), cfg.output_dir().c_str()));
      std::printf("report written to %s\n", cfg.output_dir().c_str());
    } else if (*sr) {
      const Config cfg(g, "sr");
      check(cuq_run_sr_experiment(cfg.get(), cfg.output_dir().c_str()));
      std::printf("report written to %s\n", cfg.output_dir().c_str());
    } else if (*bounds) {
      const Config cfg(g, "");
      check(cuq_run_bounds_suite(cfg.get(), cfg.output_dir().c_str()));
      std::printf("bounds report written to %s\n", join(cfg.output_dir(), "bounds.json").c_str());
    } else if (*plot) {
      const std::string out = g.out.empty() ? join(plot_report, "plotdata") : g.out;
      check(cuq_emit_plotdata(plot_report.c_str(), out.c_str(), plot_curves));
      std::printf("plot data written to %s\n", out.c_str());
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "cycleuq: error: %s\n", f.message.c_str());
    return exit_code(f.status);
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "cycleuq: error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cycleuq: error: %s\n", e.what());
    return 3;
  }
  return 0;
}
