#include "cycleuq/cycleuq.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "core/boosting.hpp"
#include "core/bounds.hpp"
#include "core/config.hpp"
#include "core/cycle.hpp"
#include "core/error.hpp"
#include "core/experiment.hpp"
#include "core/format.hpp"
#include "core/linear_model.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"

using namespace cycleuq;

struct cuq_config {
  ExperimentConfig cfg;
};
struct cuq_image {
  Image img;
};
struct cuq_kernel {
  BlurKernel k;
};
struct cuq_trace {
  CycleTrace trace;
};
struct cuq_classifier {
  BoostedEnsemble model;
};

namespace {

thread_local std::string g_last_error;

cuq_status fail(cuq_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

cuq_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage:
      return CUQ_ERR_USAGE;
    case ErrorKind::Data:
      return CUQ_ERR_DATA;
    case ErrorKind::Numerical:
      return CUQ_ERR_NUMERIC;
    case ErrorKind::Io:
      return CUQ_ERR_IO;
  }
  return CUQ_ERR_INTERNAL;
}

template <typename F>
cuq_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CUQ_OK;
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CUQ_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CUQ_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CUQ_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* name) {
  if (!p) throw UsageError(std::string(name) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ForwardSpec to_forward(const cuq_forward_desc* d) {
  need(d, "forward");
  if (d->kind == CUQ_FORWARD_BLUR) {
    need(d->kernel, "forward.kernel");
    return ForwardSpec::blur(d->kernel->k);
  }
  if (d->kind == CUQ_FORWARD_POOL) return ForwardSpec::pool(d->pool_factor);
  throw UsageError("unknown forward kind");
}

SolverSpec to_solver(const cuq_solver_desc* d) {
  need(d, "solver");
  if (d->kind == CUQ_SOLVER_WIENER) {
    need(d->kernel, "solver.kernel");
    return SolverSpec::wiener(d->kernel->k, d->lambda);
  }
  if (d->kind == CUQ_SOLVER_LANDWEBER) {
    return SolverSpec::landweber(d->factor, d->lambda, d->steps, d->step_size, d->clamp != 0);
  }
  throw UsageError("unknown solver kind");
}

LabeledData labeled_from_csv(const std::string& path, const std::vector<int>& indices) {
  const auto rows = parse_features_csv(read_text_file(path));
  std::vector<FeatureVector> fs;
  std::vector<int> labels;
  for (const auto& r : rows) {
    if (!r.label) throw DataError("feature row without label in " + path);
    fs.push_back(r.features);
    labels.push_back(*r.label);
  }
  return LabeledData::from_features(fs, labels, indices);
}

}  // namespace

extern "C" {

const char* cuq_last_error(void) { return g_last_error.c_str(); }

const char* cuq_version(void) { return "1.0.0"; }

void cuq_free_string(char* s) { std::free(s); }

cuq_status cuq_config_default(const char* testbed, cuq_config** out) {
  return guarded([&] {
    need(testbed, "testbed");
    need(out, "out");
    *out = new cuq_config{default_config(parse_testbed(testbed))};
  });
}

cuq_status cuq_config_load(const char* path, cuq_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cuq_config{load_config(path)};
  });
}

cuq_status cuq_config_parse(const char* json, cuq_config** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new cuq_config{parse_config_json(json)};
  });
}

cuq_status cuq_config_set(cuq_config* cfg, const char* assignment) {
  return guarded([&] {
    need(cfg, "config");
    need(assignment, "assignment");
    apply_override(cfg->cfg, assignment);
  });
}

cuq_status cuq_config_to_json(const cuq_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = dup_string(config_json(cfg->cfg));
  });
}

void cuq_config_free(cuq_config* cfg) { delete cfg; }

cuq_status cuq_image_create(size_t height, size_t width, const double* data, cuq_image** out) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    if (height == 0 || width == 0) throw UsageError("image dimensions must be >= 1");
    *out = new cuq_image{Image(height, width, std::vector<double>(data, data + height * width))};
  });
}

cuq_status cuq_image_load(const char* path, cuq_image** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cuq_image{io::read_image(path)};
  });
}

cuq_status cuq_image_save(const cuq_image* img, const char* path) {
  return guarded([&] {
    need(img, "image");
    need(path, "path");
    const std::filesystem::path p(path);
    if (p.extension() == ".pgm") {
      io::write_pgm(img->img, p);
    } else {
      io::write_cgf(img->img, p);
    }
  });
}

size_t cuq_image_height(const cuq_image* img) { return img ? img->img.height() : 0; }
size_t cuq_image_width(const cuq_image* img) { return img ? img->img.width() : 0; }
const double* cuq_image_data(const cuq_image* img) { return img ? img->img.data().data() : nullptr; }
void cuq_image_free(cuq_image* img) { delete img; }

cuq_status cuq_kernel_generate(uint64_t seed, int size, int steps, cuq_kernel** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cuq_kernel{generate_motion_kernel(seed, size, steps)};
  });
}

cuq_status cuq_kernel_load(const char* path, cuq_kernel** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cuq_kernel{io::read_kernel(path)};
  });
}

cuq_status cuq_kernel_save(const cuq_kernel* k, const char* path) {
  return guarded([&] {
    need(k, "kernel");
    need(path, "path");
    io::write_kernel(k->k, path);
  });
}

int cuq_kernel_size(const cuq_kernel* k) { return k ? k->k.size() : 0; }
const double* cuq_kernel_weights(const cuq_kernel* k) { return k ? k->k.weights().data() : nullptr; }
void cuq_kernel_free(cuq_kernel* k) { delete k; }

cuq_status cuq_run_cycles(const cuq_image* x, const cuq_solver_desc* solver, const cuq_forward_desc* forward,
                          int n_cycles, cuq_trace** out) {
  return guarded([&] {
    need(x, "x");
    need(out, "out");
    *out = new cuq_trace{run_cycles(x->img, to_solver(solver), to_forward(forward), n_cycles)};
  });
}

int cuq_trace_cycles(const cuq_trace* t) { return t ? t->trace.n_cycles : 0; }
const double* cuq_trace_dy(const cuq_trace* t) { return t ? t->trace.dy.data() : nullptr; }
const double* cuq_trace_dx(const cuq_trace* t) { return t ? t->trace.dx.data() : nullptr; }

cuq_status cuq_trace_output(const cuq_trace* t, cuq_image** out) {
  return guarded([&] {
    need(t, "trace");
    need(out, "out");
    *out = new cuq_image{t->trace.output()};
  });
}

cuq_status cuq_trace_write_csv(const cuq_trace* t, const char* path) {
  return guarded([&] {
    need(t, "trace");
    need(path, "path");
    write_trace_csv(t->trace, path);
  });
}

cuq_status cuq_trace_dump_images(const cuq_trace* t, const char* dir) {
  return guarded([&] {
    need(t, "trace");
    need(dir, "dir");
    dump_trace_images(t->trace, dir);
  });
}

cuq_status cuq_trace_features(const cuq_trace* t, cuq_features* out) {
  return guarded([&] {
    need(t, "trace");
    need(out, "out");
    const TraceFeatures tf = extract_features(t->trace);
    const FeatureVector& f = tf.features;
    *out = cuq_features{f.eps_x,          f.eps_y,          f.b_x,
                        f.b_y,            f.dx1,            tf.fit_x.k_hat,
                        tf.fit_y.k_hat,   tf.fit_x.r_squared, tf.fit_y.r_squared};
  });
}

cuq_status cuq_trace_eps0(const cuq_trace* t, const cuq_image* ground_truth, double* out) {
  return guarded([&] {
    need(t, "trace");
    need(ground_truth, "ground_truth");
    need(out, "out");
    *out = actual_uncertainty(t->trace, ground_truth->img).eps0_norm;
  });
}

cuq_status cuq_trace_bounds_json(const cuq_trace* t, const cuq_solver_desc* solver, const cuq_forward_desc* forward,
                                 const cuq_image* ground_truth, uint64_t seed, char** out) {
  return guarded([&] {
    need(t, "trace");
    need(out, "out");
    const SolverSpec s = to_solver(solver);
    const ForwardSpec f = to_forward(forward);
    const Image& anchor = ground_truth ? ground_truth->img : t->trace.output();
    const LipschitzEstimate est = estimate_lipschitz(s, f, anchor, 8, seed);
    if (ground_truth) {
      const double residual = unbiasedness_residual(s, f, ground_truth->img);
      const auto rep = verify_bounds(t->trace, est, actual_uncertainty(t->trace, ground_truth->img), residual);
      *out = dup_string(bounds_report_json(rep));
      return;
    }
    BoundsReport rep;
    rep.estimate = est;
    rep.recursive = check_recursive_bound(t->trace, est.L_hat);
    auto j = nlohmann::json::parse(bounds_report_json(rep));
    j["eq7_pass"] = nullptr;
    j["eq9or10_regime"] = "inconclusive";
    j["eq9or10_pass"] = nullptr;
    j.erase("unbiased_precondition");
    *out = dup_string(j.dump(2));
  });
}

void cuq_trace_free(cuq_trace* t) { delete t; }

cuq_status cuq_classifier_train_csv(const char* features_csv, const cuq_config* cfg, int dx1_only,
                                    cuq_classifier** out) {
  return guarded([&] {
    need(features_csv, "features_csv");
    need(cfg, "config");
    need(out, "out");
    const std::vector<int> indices = dx1_only ? std::vector<int>{4} : std::vector<int>{0, 1, 2, 3, 4};
    const LabeledData data = labeled_from_csv(features_csv, indices);
    const auto& cc = cfg->cfg.classifier;
    TuneResult r = tune_hyperparams(data, cc.grid, cc.tune_budget, derive_seed(cfg->cfg.master_seed, "classifier"),
                                    indices);
    *out = new cuq_classifier{std::move(r.model)};
  });
}

cuq_status cuq_classifier_load(const char* path, cuq_classifier** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new cuq_classifier{parse_ensemble_json(read_text_file(path))};
  });
}

cuq_status cuq_classifier_save(const cuq_classifier* c, const char* path) {
  return guarded([&] {
    need(c, "classifier");
    need(path, "path");
    write_text_file(path, ensemble_json(c->model) + "\n");
  });
}

cuq_status cuq_classifier_predict(const cuq_classifier* c, const cuq_features* f, double* proba, int* label) {
  return guarded([&] {
    need(c, "classifier");
    need(f, "features");
    const FeatureVector fv{f->eps_x, f->eps_y, f->b_x, f->b_y, f->dx1};
    const double p = predict_proba(c->model, fv);
    if (proba) *proba = p;
    if (label) *label = p > c->model.threshold ? 1 : 0;
  });
}

cuq_status cuq_classifier_evaluate_csv(const cuq_classifier* c, const char* features_csv,
                                       const char* predictions_csv, char** metrics_json) {
  return guarded([&] {
    need(c, "classifier");
    need(features_csv, "features_csv");
    need(metrics_json, "metrics_json");
    const auto rows = parse_features_csv(read_text_file(features_csv));
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : rows) {
      if (!r.label) throw DataError("feature row without label in " + std::string(features_csv));
      scores.push_back(predict_proba(c->model, r.features));
      labels.push_back(*r.label);
    }
    const EvalRow row = evaluate_scores("model", "all", scores, labels, c->model.threshold);
    if (predictions_csv) {
      std::ostringstream os;
      os << "proba,predicted,label\n";
      for (std::size_t i = 0; i < scores.size(); ++i) {
        os << fmt_num(scores[i]) << ',' << (scores[i] > c->model.threshold ? 1 : 0) << ',' << labels[i] << '\n';
      }
      write_text_file(predictions_csv, os.str());
    }
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::ordered_json j;
    j["accuracy"] = row.accuracy;
    j["auc"] = num(row.auc);
    j["ap"] = num(row.ap);
    j["f1"] = row.f1;
    j["n_samples"] = row.n_samples;
    j["threshold"] = c->model.threshold;
    *metrics_json = dup_string(j.dump(2));
  });
}

void cuq_classifier_free(cuq_classifier* c) { delete c; }

cuq_status cuq_predictor_fit_csv(const char* features_csv, double ridge, const char* model_path, double* r_squared_out) {
  return guarded([&] {
    need(features_csv, "features_csv");
    need(model_path, "model_path");
    const auto rows = parse_features_csv(read_text_file(features_csv));
    std::vector<FeatureVector> fs;
    std::vector<double> eps0;
    for (const auto& r : rows) {
      if (!r.eps0) continue;
      fs.push_back(r.features);
      eps0.push_back(*r.eps0);
    }
    const LinearModel m = fit_linear(fs, eps0, ridge);
    if (r_squared_out) *r_squared_out = r_squared(predict(m, fs), eps0);
    write_text_file(model_path, linear_model_json(m) + "\n");
  });
}

cuq_status cuq_generate_dataset(const cuq_config* cfg, const char* dir, size_t* n_rows) {
  return guarded([&] {
    need(cfg, "config");
    need(dir, "dir");
    const auto rows = generate_dataset(cfg->cfg, dir);
    if (n_rows) *n_rows = rows.size();
  });
}

cuq_status cuq_fit_features(const cuq_config* cfg, const char* data_dir, double lambda, const char* out_csv) {
  return guarded([&] {
    need(cfg, "config");
    need(data_dir, "data_dir");
    need(out_csv, "out_csv");
    std::optional<double> l;
    if (lambda >= 0.0) l = lambda;
    write_text_file(out_csv, features_csv(fit_manifest_features(cfg->cfg, data_dir, l)));
  });
}

cuq_status cuq_run_deblur_experiment(const cuq_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "config");
    need(out_dir, "out_dir");
    const DeblurReport r = run_deblur_experiment(cfg->cfg);
    write_deblur_report(r, out_dir);
    emit_plotdata(out_dir, std::filesystem::path(out_dir) / "plotdata", cfg->cfg.data.n_curves);
  });
}

cuq_status cuq_run_sr_experiment(const cuq_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "config");
    need(out_dir, "out_dir");
    const SrReport r = run_sr_experiment(cfg->cfg);
    write_sr_report(r, out_dir);
    emit_plotdata(out_dir, std::filesystem::path(out_dir) / "plotdata", cfg->cfg.data.n_curves);
  });
}

cuq_status cuq_run_bounds_suite(const cuq_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(cfg, "config");
    need(out_dir, "out_dir");
    write_bounds_report(run_bounds_suite(cfg->cfg), out_dir);
  });
}

cuq_status cuq_emit_plotdata(const char* report_dir, const char* out_dir, int n_curves) {
  return guarded([&] {
    need(report_dir, "report_dir");
    need(out_dir, "out_dir");
    emit_plotdata(report_dir, out_dir, n_curves);
  });
}

}  // extern "C"
