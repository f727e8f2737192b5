#include "core/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/format.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"

namespace cycleuq {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void rethrow_in_stage(const std::string& stage, const Error& e) {
  const std::string msg = stage + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::Usage:
      throw UsageError(msg);
    case ErrorKind::Data:
      throw DataError(msg);
    case ErrorKind::Numerical:
      throw NumericalError(msg);
    case ErrorKind::Io:
      throw IoError(msg);
  }
  throw DataError(msg);
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_in_stage(name, e);
  }
}

struct NoiseDraw {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;
};

using ForwardChooser = std::function<ForwardSpec(CounterRng&)>;
using NoiseChooser = std::function<NoiseDraw(CounterRng&)>;

std::string padded(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

std::vector<SampleRecipe> make_recipes(const std::string& tag, int count, std::uint64_t master, Testbed testbed,
                                       SceneClass cls, std::size_t size, const ForwardChooser& forward,
                                       const NoiseChooser& noise) {
  std::vector<SampleRecipe> out;
  const std::uint64_t base = derive_seed(master, "recipe/" + tag);
  for (int i = 0; i < count; ++i) {
    CounterRng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
    SceneSpec scene{cls, size, rng.next_u64()};
    ForwardSpec fwd = forward(rng);
    const NoiseDraw nd = noise(rng);
    NoiseSpec ns{nd.kind, nd.sigma, rng.next_u64()};
    const int label = label_for(testbed, nd.kind, nd.sigma);
    out.push_back(SampleRecipe{tag + "_" + padded(static_cast<std::size_t>(i)), scene, std::move(fwd), ns, label});
  }
  return out;
}

std::vector<BlurKernel> kernel_pool(const ForwardConfig& f, std::uint64_t master, const std::string& tag, int count) {
  std::vector<BlurKernel> pool;
  const std::uint64_t base = derive_seed(master, "kernels/" + tag);
  for (int i = 0; i < count; ++i) {
    CounterRng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
    const int steps =
        f.min_steps + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.max_steps - f.min_steps + 1)));
    pool.push_back(generate_motion_kernel(rng.next_u64(), f.kernel_size, steps));
  }
  return pool;
}

ForwardChooser pick_kernel(const std::vector<BlurKernel>& pool) {
  return [&pool](CounterRng& rng) { return ForwardSpec::blur(pool[rng.below(pool.size())]); };
}

NoiseChooser uniform_sigma(NoiseKind kind, double lo, double hi) {
  return [=](CounterRng& rng) { return NoiseDraw{kind, rng.uniform(lo, hi)}; };
}

// Closed range [lo, hi]: the top is reachable so that sigma = hi is sampled.
NoiseChooser closed_sigma(NoiseKind kind, double lo, double hi) {
  return [=](CounterRng& rng) {
    const double u = static_cast<double>(rng.below((1ULL << 53) + 1)) * 0x1.0p-53;
    return NoiseDraw{kind, lo + (hi - lo) * u};
  };
}

NoiseChooser fixed_sigma(NoiseKind kind, double sigma) {
  return [=](CounterRng&) { return NoiseDraw{kind, sigma}; };
}

NoiseKind coin_kind(CounterRng& rng) { return rng.uniform() < 0.5 ? NoiseKind::Gaussian : NoiseKind::Snp; }

std::vector<FeatureVector> features_of(const std::vector<SampleResult>& rs) {
  std::vector<FeatureVector> out;
  out.reserve(rs.size());
  for (const auto& r : rs) out.push_back(r.features.features);
  return out;
}

std::vector<int> labels_of(const std::vector<SampleResult>& rs) {
  std::vector<int> out;
  out.reserve(rs.size());
  for (const auto& r : rs) out.push_back(r.label);
  return out;
}

template <typename... Sets>
std::vector<SampleResult> concat(const Sets&... sets) {
  std::vector<SampleResult> out;
  (out.insert(out.end(), sets.begin(), sets.end()), ...);
  return out;
}

const std::vector<int> kAllFeatures{0, 1, 2, 3, 4};
const std::vector<int> kDx1Only{4};

struct TrainedPair {
  TuneResult cycle;
  TuneResult dx1;
};

// The baseline is the same tuner restricted to the dx1 column.
TrainedPair train_pair(const std::vector<SampleResult>& train, const ClassifierConfig& cc, std::uint64_t seed) {
  const auto fs = features_of(train);
  const auto labels = labels_of(train);
  TrainedPair p;
  p.cycle = tune_hyperparams(LabeledData::from_features(fs, labels, kAllFeatures), cc.grid, cc.tune_budget, seed,
                             kAllFeatures);
  p.dx1 = tune_hyperparams(LabeledData::from_features(fs, labels, kDx1Only), cc.grid, cc.tune_budget, seed,
                           kDx1Only);
  return p;
}

void score(std::vector<SampleResult>& rs, const TrainedPair& p) {
  for (auto& r : rs) {
    r.score_cycle = predict_proba(p.cycle.model, r.features.features);
    r.score_dx1 = predict_proba(p.dx1.model, r.features.features);
  }
}

void check_leakage(const std::vector<const std::vector<SampleResult>*>& fit_sets,
                   const std::vector<const std::vector<SampleResult>*>& test_sets) {
  std::set<std::uint64_t> seen;
  for (const auto* s : fit_sets) {
    for (const auto& r : *s) seen.insert(r.hash);
  }
  for (const auto* s : test_sets) {
    for (const auto& r : *s) {
      if (seen.count(r.hash)) throw DataError("test leakage: " + r.id + " duplicates a training image");
    }
  }
}

double fraction_predicted(const std::vector<SampleResult>& rs, bool cycle, double threshold, int want) {
  if (rs.empty()) throw DataError("empty evaluation set");
  std::size_t hits = 0;
  for (const auto& r : rs) {
    const int pred = (cycle ? r.score_cycle : r.score_dx1) > threshold ? 1 : 0;
    hits += pred == want;
  }
  return static_cast<double>(hits) / static_cast<double>(rs.size());
}

std::vector<EvalRow> eval_both(const std::string& subset, const std::vector<SampleResult>& rs,
                               const std::vector<int>& labels, const TrainedPair& p) {
  std::vector<double> sc;
  std::vector<double> sd;
  for (const auto& r : rs) {
    sc.push_back(r.score_cycle);
    sd.push_back(r.score_dx1);
  }
  return {evaluate_scores("cycle", subset, sc, labels, p.cycle.model.threshold),
          evaluate_scores("dx1_only", subset, sd, labels, p.dx1.model.threshold)};
}

std::string range_name(const std::string& kind, double lo, double hi) {
  return kind + ":" + fmt_num(lo) + ".." + fmt_num(hi);
}

}  // namespace

EvalRow evaluate_scores(const std::string& experiment_id, const std::string& subset,
                        const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  EvalRow row;
  row.experiment_id = experiment_id;
  row.subset = subset;
  row.n_samples = scores.size();
  const auto pred = threshold_scores(scores, threshold);
  row.accuracy = accuracy(pred, labels);
  row.f1 = f1(pred, labels);
  const bool has_pos = std::count(labels.begin(), labels.end(), 1) > 0;
  const bool has_neg = std::count(labels.begin(), labels.end(), 0) > 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.auc = has_pos && has_neg ? roc_auc(ScoredLabels{scores, labels}) : nan;
  row.ap = has_pos ? average_precision(ScoredLabels{scores, labels}) : nan;
  return row;
}

DeblurReport run_deblur_experiment(const ExperimentConfig& cfg) {
  if (cfg.testbed != Testbed::Deblur) throw UsageError("deblur experiment needs testbed = deblur");
  validate(cfg);
  DeblurReport rep;
  rep.config = cfg;
  const std::uint64_t seed = cfg.master_seed;
  const SceneClass cls = parse_scene_class(cfg.scene.classes.front());
  const std::size_t size = cfg.scene.size;
  const auto& nz = cfg.noise;
  const int n = cfg.n_cycles;
  const int jobs = cfg.jobs;

  const auto train_kernels = stage("kernels", [&] {
    return kernel_pool(cfg.forward, seed, "train", cfg.forward.n_train_kernels);
  });
  const auto test_kernels = stage("kernels", [&] {
    return kernel_pool(cfg.forward, seed, "test", cfg.forward.n_test_kernels);
  });
  const ForwardChooser train_fwd = pick_kernel(train_kernels);
  const ForwardChooser test_fwd = pick_kernel(test_kernels);
  auto recipes = [&](const std::string& tag, int count, const ForwardChooser& f, const NoiseChooser& nc) {
    return make_recipes(tag, count, seed, Testbed::Deblur, cls, size, f, nc);
  };
  const NoiseChooser id_noise = uniform_sigma(NoiseKind::Gaussian, 0.0, nz.id_max);

  rep.calibration = stage("calibrate", [&] {
    const auto rc = recipes("calib", cfg.solver.n_calibration, train_fwd, id_noise);
    std::vector<CalibrationPair> pairs(rc.size(), CalibrationPair{Image(1, 1), Image(1, 1), std::nullopt});
    parallel_for(rc.size(), jobs, [&](std::size_t i) {
      Sample s = synthesize(rc[i]);
      pairs[i] = CalibrationPair{std::move(s.measurement), std::move(s.ground_truth), rc[i].forward.kernel()};
    });
    return calibrate_solver(SolverSpec::wiener(BlurKernel::delta(), cfg.solver.lambda_grid.front()), pairs,
                            cfg.solver.lambda_grid);
  });
  const SolverSpec proto = rep.calibration.spec;
  auto solver_for = [&proto](const SampleRecipe& rc) { return proto.with_kernel(rc.forward.kernel()); };
  auto process = [&](const std::string& tag, int count, const ForwardChooser& f, const NoiseChooser& nc) {
    return stage("cycles/" + tag, [&] { return process_samples(tag, recipes(tag, count, f, nc), solver_for, n, jobs); });
  };

  auto train_id = process("train_id", cfg.data.n_train_id, train_fwd, id_noise);
  auto train_ood = process("train_ood", cfg.data.n_train_ood, train_fwd,
                           closed_sigma(NoiseKind::Gaussian, nz.ood_min, nz.ood_max));
  auto train = concat(train_id, train_ood);

  const TrainedPair models = stage("train", [&] { return train_pair(train, cfg.classifier, derive_seed(seed, "classifier")); });
  rep.classifier = models.cycle;
  rep.baseline = models.dx1;
  rep.importance = stage("importance", [&] { return feature_importance(models.cycle.model); });

  auto pred_gauss = process("pred_gauss", cfg.data.n_predictor, train_fwd,
                            closed_sigma(NoiseKind::Gaussian, 0.0, cfg.data.predictor_sigma_max));
  auto pred_snp = process("pred_snp", cfg.data.n_predictor_snp, train_fwd,
                          closed_sigma(NoiseKind::Snp, 0.0, cfg.data.predictor_sigma_max));
  stage("predictor", [&] {
    std::vector<double> eps0;
    for (const auto& r : pred_gauss) eps0.push_back(r.eps0);
    rep.predictor = fit_linear(features_of(pred_gauss), eps0, cfg.predictor.ridge);
    rep.predictor_r2_train = r_squared(predict(rep.predictor, features_of(pred_gauss)), eps0);
    std::vector<double> snp_eps0;
    for (const auto& r : pred_snp) snp_eps0.push_back(r.eps0);
    rep.predictor_r2_snp = r_squared(predict(rep.predictor, features_of(pred_snp)), snp_eps0);
  });

  auto test_id = process("test_id", cfg.data.n_test, test_fwd, id_noise);
  struct Condition {
    std::string subset;
    std::string kind;
    double sigma;  // NaN for ranges
    std::vector<SampleResult> results;
  };
  std::vector<Condition> conditions;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [kind_name, kind, grid] :
       {std::tuple{std::string("gaussian"), NoiseKind::Gaussian, nz.sigma_grid},
        std::tuple{std::string("snp"), NoiseKind::Snp, nz.snp_grid}}) {
    for (double s : grid) {
      const std::string tag = "test_" + kind_name + "_" + fmt_num(s);
      conditions.push_back({kind_name + ":" + fmt_num(s), kind_name, s,
                            process(tag, cfg.data.n_test, test_fwd, fixed_sigma(kind, s))});
    }
    const std::string tag = "test_" + kind_name + "_range";
    conditions.push_back({range_name(kind_name, nz.ood_min, nz.ood_max), kind_name, nan,
                          process(tag, cfg.data.n_test, test_fwd, closed_sigma(kind, nz.ood_min, nz.ood_max))});
  }

  std::vector<const std::vector<SampleResult>*> tests{&test_id};
  for (const auto& c : conditions) tests.push_back(&c.results);
  stage("leakage", [&] { check_leakage({&train, &pred_gauss, &pred_snp}, tests); });

  score(train, models);
  score(pred_gauss, models);
  score(pred_snp, models);
  score(test_id, models);
  for (auto& c : conditions) score(c.results, models);

  stage("evaluate", [&] {
    auto add_rows = [&rep](std::vector<EvalRow> rows) { rep.table.insert(rep.table.end(), rows.begin(), rows.end()); };
    add_rows(eval_both("id", test_id, labels_of(test_id), models));
    for (const auto& c : conditions) {
      const auto pooled = concat(test_id, c.results);
      add_rows(eval_both(c.subset, pooled, labels_of(pooled), models));
      if (!std::isnan(c.sigma)) {
        const int want = label_for(Testbed::Deblur, parse_noise_kind(c.kind), c.sigma);
        rep.accuracy_vs_sigma.push_back(
            SigmaPoint{c.kind, c.sigma, fraction_predicted(c.results, true, models.cycle.model.threshold, want),
                       fraction_predicted(c.results, false, models.dx1.model.threshold, want), c.results.size()});
      }
    }
  });

  rep.samples = concat(train, pred_gauss, pred_snp, test_id);
  for (const auto& c : conditions) rep.samples.insert(rep.samples.end(), c.results.begin(), c.results.end());
  return rep;
}

SrReport run_sr_experiment(const ExperimentConfig& cfg) {
  if (cfg.testbed != Testbed::Sr) throw UsageError("sr experiment needs testbed = sr");
  validate(cfg);
  SrReport rep;
  rep.config = cfg;
  const std::uint64_t seed = cfg.master_seed;
  const std::size_t size = cfg.scene.size;
  const auto& nz = cfg.noise;
  const int n = cfg.n_cycles;
  const int jobs = cfg.jobs;
  const ForwardSpec pool = ForwardSpec::pool(cfg.forward.pool_factor);
  const ForwardChooser pool_fwd = [&pool](CounterRng&) { return pool; };

  std::vector<SceneClass> classes;
  for (const auto& c : cfg.scene.classes) classes.push_back(parse_scene_class(c));
  const std::size_t k = classes.size();

  // ID: pristine or lightly corrupted at one of the ID levels.
  std::vector<double> id_levels{0.0};
  id_levels.insert(id_levels.end(), nz.sr_id_levels.begin(), nz.sr_id_levels.end());
  const NoiseChooser id_noise = [id_levels](CounterRng& rng) {
    const double s = id_levels[rng.below(id_levels.size())];
    const NoiseKind kind = coin_kind(rng);
    return NoiseDraw{s == 0.0 ? NoiseKind::None : kind, s};
  };
  const NoiseChooser ood_noise = [lo = nz.sr_ood_min, hi = nz.sr_ood_max](CounterRng& rng) {
    const NoiseKind kind = coin_kind(rng);
    return NoiseDraw{kind, rng.uniform(lo, hi)};
  };
  const NoiseChooser pristine = [](CounterRng&) { return NoiseDraw{}; };

  auto recipes = [&](const std::string& tag, int count, SceneClass cls, const NoiseChooser& nc) {
    return make_recipes(tag, count, seed, Testbed::Sr, cls, size, pool_fwd, nc);
  };

  // Test images of every class, shared by all classifiers.
  std::vector<std::vector<SampleRecipe>> test_recipes(k);
  for (std::size_t j = 0; j < k; ++j) {
    test_recipes[j] = recipes("sr_test_" + to_string(classes[j]), cfg.data.n_test, classes[j], id_noise);
  }

  std::vector<TrainedPair> models(k);
  // cross[i][j]: class-j test images through class-i's solver.
  std::vector<std::vector<std::vector<SampleResult>>> cross(k, std::vector<std::vector<SampleResult>>(k));
  std::vector<std::vector<SampleResult>> noisy_ood(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::string name = to_string(classes[i]);
    SrClassReport cr;
    cr.scene_class = name;
    cr.calibration = stage("calibrate/" + name, [&] {
      const auto rc = recipes("sr_calib_" + name, cfg.solver.n_calibration, classes[i], pristine);
      std::vector<CalibrationPair> pairs(rc.size(), CalibrationPair{Image(1, 1), Image(1, 1), std::nullopt});
      parallel_for(rc.size(), jobs, [&](std::size_t t) {
        Sample s = synthesize(rc[t]);
        pairs[t] = CalibrationPair{std::move(s.measurement), std::move(s.ground_truth), std::nullopt};
      });
      const SolverSpec proto = SolverSpec::landweber(cfg.forward.pool_factor, cfg.solver.lambda_grid.front(),
                                                     cfg.solver.landweber_steps, 0.0, cfg.solver.landweber_clamp);
      return calibrate_solver(proto, pairs, cfg.solver.lambda_grid);
    });
    const SolverSpec solver = cr.calibration.spec;
    auto solver_for = [&solver](const SampleRecipe&) { return solver; };
    auto process = [&](const std::string& tag, const std::vector<SampleRecipe>& rc) {
      return stage("cycles/" + tag, [&] { return process_samples(tag, rc, solver_for, n, jobs); });
    };

    auto train = concat(
        process("sr_train_id_" + name, recipes("sr_train_id_" + name, cfg.data.n_train_id, classes[i], id_noise)),
        process("sr_train_ood_" + name,
                recipes("sr_train_ood_" + name, cfg.data.n_train_ood, classes[i], ood_noise)));
    models[i] = stage("train/" + name, [&] {
      return train_pair(train, cfg.classifier, derive_seed(seed, "classifier/" + name));
    });
    cr.classifier = models[i].cycle;
    cr.baseline = models[i].dx1;

    for (std::size_t j = 0; j < k; ++j) {
      cross[i][j] = process("sr_test_" + to_string(classes[j]) + "@" + name, test_recipes[j]);
    }
    noisy_ood[i] = process("sr_test_ood_" + name, recipes("sr_test_ood_" + name, cfg.data.n_test, classes[i], ood_noise));

    std::vector<const std::vector<SampleResult>*> tests{&noisy_ood[i]};
    for (std::size_t j = 0; j < k; ++j) tests.push_back(&cross[i][j]);
    stage("leakage/" + name, [&] { check_leakage({&train}, tests); });

    score(train, models[i]);
    score(noisy_ood[i], models[i]);
    for (std::size_t j = 0; j < k; ++j) score(cross[i][j], models[i]);
    rep.samples.insert(rep.samples.end(), train.begin(), train.end());
    rep.classes.push_back(std::move(cr));
  }

  rep.matrix_cycle.assign(k, std::vector<double>(k, 0.0));
  rep.matrix_dx1.assign(k, std::vector<double>(k, 0.0));
  stage("evaluate", [&] {
    for (std::size_t i = 0; i < k; ++i) {
      const std::string name = to_string(classes[i]);
      std::vector<SampleResult> all;
      std::vector<int> all_labels;
      for (std::size_t j = 0; j < k; ++j) {
        const int want = i == j ? 0 : 1;
        rep.matrix_cycle[i][j] = fraction_predicted(cross[i][j], true, models[i].cycle.model.threshold, want);
        rep.matrix_dx1[i][j] = fraction_predicted(cross[i][j], false, models[i].dx1.model.threshold, want);
        const std::vector<int> labels(cross[i][j].size(), want);
        const auto rows = eval_both("train=" + name + " test=" + to_string(classes[j]), cross[i][j], labels, models[i]);
        rep.table.insert(rep.table.end(), rows.begin(), rows.end());
        all.insert(all.end(), cross[i][j].begin(), cross[i][j].end());
        all_labels.insert(all_labels.end(), labels.begin(), labels.end());
      }
      auto rows = eval_both("train=" + name + " test=all_classes", all, all_labels, models[i]);
      rep.table.insert(rep.table.end(), rows.begin(), rows.end());
      const auto noisy = concat(cross[i][i], noisy_ood[i]);
      rows = eval_both("train=" + name + " test=same_class_noisy", noisy, labels_of(noisy), models[i]);
      rep.table.insert(rep.table.end(), rows.begin(), rows.end());
    }
  });
  for (std::size_t i = 0; i < k; ++i) {
    rep.samples.insert(rep.samples.end(), noisy_ood[i].begin(), noisy_ood[i].end());
    for (std::size_t j = 0; j < k; ++j) rep.samples.insert(rep.samples.end(), cross[i][j].begin(), cross[i][j].end());
  }
  return rep;
}

BoundsSuiteReport run_bounds_suite(const ExperimentConfig& cfg) {
  validate(cfg);
  BoundsSuiteReport rep;
  const std::uint64_t seed = cfg.master_seed;
  const SceneClass cls = parse_scene_class(cfg.scene.classes.front());
  const auto kernels = kernel_pool(cfg.forward, seed, "bounds", cfg.forward.n_train_kernels);
  const ForwardChooser fwd = pick_kernel(kernels);

  double lambda = cfg.bounds.lambda;
  if (cfg.bounds.calibrate) {
    lambda = stage("calibrate", [&] {
      const auto rc = make_recipes("bounds_calib", cfg.solver.n_calibration, seed, Testbed::Deblur, cls,
                                   cfg.scene.size, fwd, [](CounterRng&) { return NoiseDraw{}; });
      std::vector<CalibrationPair> pairs;
      for (const auto& r : rc) {
        Sample s = synthesize(r);
        pairs.push_back(CalibrationPair{std::move(s.measurement), std::move(s.ground_truth), r.forward.kernel()});
      }
      return calibrate_solver(SolverSpec::wiener(BlurKernel::delta(), 0.0), pairs, cfg.solver.lambda_grid)
          .spec.lambda();
    });
  }
  rep.lambda = lambda;

  const auto rc = make_recipes("bounds", cfg.bounds.n_images, seed, Testbed::Deblur, cls, cfg.scene.size, fwd,
                               fixed_sigma(NoiseKind::Gaussian, cfg.bounds.sigma));
  rep.images.resize(rc.size());
  stage("bounds", [&] {
    parallel_for(rc.size(), cfg.jobs, [&](std::size_t i) {
      const Sample s = synthesize(rc[i]);
      const SolverSpec solver = SolverSpec::wiener(rc[i].forward.kernel(), lambda);
      const CycleTrace trace = run_cycles(s.measurement, solver, rc[i].forward, cfg.n_cycles);
      const LipschitzEstimate est = estimate_lipschitz(solver, rc[i].forward, s.ground_truth, cfg.bounds.probes,
                                                       derive_seed(seed, static_cast<std::uint64_t>(i)));
      const double residual = unbiasedness_residual(solver, rc[i].forward, s.ground_truth);
      rep.images[i] = verify_bounds(trace, est, actual_uncertainty(trace, s.ground_truth), residual);
    });
  });

  rep.n_images = rep.images.size();
  std::size_t eq6 = 0;
  std::size_t eq7 = 0;
  std::size_t lower = 0;
  for (const auto& b : rep.images) {
    eq6 += b.recursive.pass;
    eq7 += b.upper.pass;
    switch (b.lower.regime) {
      case LowerRegime::Divergent:
        ++rep.n_eq9;
        lower += b.lower.pass;
        break;
      case LowerRegime::Convergent:
        ++rep.n_eq10;
        lower += b.lower.pass;
        break;
      case LowerRegime::Inconclusive:
        ++rep.n_inconclusive;
        break;
    }
  }
  const auto total = static_cast<double>(rep.n_images);
  rep.eq6_pass_rate = static_cast<double>(eq6) / total;
  rep.eq7_pass_rate = static_cast<double>(eq7) / total;
  const std::size_t conclusive = rep.n_eq9 + rep.n_eq10;
  rep.eq9or10_pass_rate =
      conclusive ? static_cast<double>(lower) / static_cast<double>(conclusive) : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

std::vector<SampleRecipe> dataset_recipes(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::uint64_t seed = cfg.master_seed;
  const auto& nz = cfg.noise;
  std::vector<SampleRecipe> out;
  auto append = [&out](std::vector<SampleRecipe> rs) { out.insert(out.end(), rs.begin(), rs.end()); };
  if (cfg.testbed == Testbed::Deblur) {
    const SceneClass cls = parse_scene_class(cfg.scene.classes.front());
    const auto train_kernels = kernel_pool(cfg.forward, seed, "train", cfg.forward.n_train_kernels);
    const auto test_kernels = kernel_pool(cfg.forward, seed, "test", cfg.forward.n_test_kernels);
    auto recipes = [&](const std::string& tag, int count, const std::vector<BlurKernel>& pool,
                       const NoiseChooser& nc) {
      return make_recipes(tag, count, seed, Testbed::Deblur, cls, cfg.scene.size, pick_kernel(pool), nc);
    };
    const NoiseChooser id_noise = uniform_sigma(NoiseKind::Gaussian, 0.0, nz.id_max);
    append(recipes("train_id", cfg.data.n_train_id, train_kernels, id_noise));
    append(recipes("train_ood", cfg.data.n_train_ood, train_kernels,
                   closed_sigma(NoiseKind::Gaussian, nz.ood_min, nz.ood_max)));
    append(recipes("test_id", cfg.data.n_test, test_kernels, id_noise));
    append(recipes("test_gaussian_range", cfg.data.n_test, test_kernels,
                   closed_sigma(NoiseKind::Gaussian, nz.ood_min, nz.ood_max)));
    append(recipes("test_snp_range", cfg.data.n_test, test_kernels,
                   closed_sigma(NoiseKind::Snp, nz.ood_min, nz.ood_max)));
    return out;
  }
  const ForwardSpec pool = ForwardSpec::pool(cfg.forward.pool_factor);
  const ForwardChooser pool_fwd = [&pool](CounterRng&) { return pool; };
  std::vector<double> id_levels{0.0};
  id_levels.insert(id_levels.end(), nz.sr_id_levels.begin(), nz.sr_id_levels.end());
  const NoiseChooser id_noise = [id_levels](CounterRng& rng) {
    const double s = id_levels[rng.below(id_levels.size())];
    const NoiseKind kind = coin_kind(rng);
    return NoiseDraw{s == 0.0 ? NoiseKind::None : kind, s};
  };
  const NoiseChooser ood_noise = [lo = nz.sr_ood_min, hi = nz.sr_ood_max](CounterRng& rng) {
    const NoiseKind kind = coin_kind(rng);
    return NoiseDraw{kind, rng.uniform(lo, hi)};
  };
  for (const auto& name : cfg.scene.classes) {
    const SceneClass cls = parse_scene_class(name);
    auto recipes = [&](const std::string& tag, int count, const NoiseChooser& nc) {
      return make_recipes(tag, count, seed, Testbed::Sr, cls, cfg.scene.size, pool_fwd, nc);
    };
    append(recipes("sr_train_id_" + name, cfg.data.n_train_id, id_noise));
    append(recipes("sr_train_ood_" + name, cfg.data.n_train_ood, ood_noise));
    append(recipes("sr_test_" + name, cfg.data.n_test, id_noise));
  }
  return out;
}

std::vector<ManifestRow> generate_dataset(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const auto recipes = dataset_recipes(cfg);
  std::vector<Sample> samples(recipes.size(), Sample{recipes.front(), Image(1, 1), Image(1, 1)});
  parallel_for(recipes.size(), cfg.jobs, [&](std::size_t i) { samples[i] = synthesize(recipes[i]); });
  return write_dataset(samples, dir);
}

std::vector<FeatureRow> fit_manifest_features(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                              std::optional<double> lambda) {
  validate(cfg);
  const auto rows = read_manifest(dir);
  if (rows.empty()) throw DataError("manifest is empty: " + dir.string());
  const auto bad = verify_manifest(rows, dir);
  if (!bad.empty()) throw DataError("manifest hash mismatch: " + bad.front());

  struct Loaded {
    Image x;
    Image gt;
    ForwardSpec forward;
  };
  std::vector<Loaded> data;
  data.reserve(rows.size());
  for (const auto& r : rows) {
    ForwardSpec fwd = r.kernel_path.empty() ? ForwardSpec::pool(cfg.forward.pool_factor)
                                            : ForwardSpec::blur(io::read_kernel(dir / r.kernel_path));
    data.push_back(Loaded{io::read_image(dir / r.path), io::read_image(dir / r.ground_truth_path), std::move(fwd)});
  }

  auto proto_for = [&](const ForwardSpec& f, double l) {
    return f.is_blur() ? SolverSpec::wiener(f.kernel(), l)
                       : SolverSpec::landweber(f.pool_factor(), l, cfg.solver.landweber_steps, 0.0,
                                               cfg.solver.landweber_clamp);
  };
  std::map<std::string, double> lambda_of;
  for (const auto& r : rows) {
    if (lambda_of.count(r.scene_class)) continue;
    if (lambda) {
      lambda_of[r.scene_class] = *lambda;
      continue;
    }
    std::vector<CalibrationPair> pairs;
    std::optional<SolverSpec> proto;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].scene_class != r.scene_class || rows[i].label != 0) continue;
      if (!proto) proto = proto_for(data[i].forward, cfg.solver.lambda_grid.front());
      std::optional<BlurKernel> k;
      if (data[i].forward.is_blur()) k = data[i].forward.kernel();
      pairs.push_back(CalibrationPair{data[i].x, data[i].gt, k});
    }
    if (pairs.empty()) throw DataError("no label-0 rows to calibrate class " + r.scene_class);
    lambda_of[r.scene_class] = stage("calibrate/" + r.scene_class, [&] {
      return calibrate_solver(*proto, pairs, cfg.solver.lambda_grid).spec.lambda();
    });
  }

  std::vector<FeatureRow> out(rows.size());
  stage("cycles", [&] {
    parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
      const SolverSpec solver = proto_for(data[i].forward, lambda_of.at(rows[i].scene_class));
      const CycleTrace trace = run_cycles(data[i].x, solver, data[i].forward, cfg.n_cycles);
      out[i] = FeatureRow{extract_features(trace).features, rows[i].label,
                          actual_uncertainty(trace, data[i].gt).eps0_norm};
    });
  });
  return out;
}

// ---------------------------------------------------------------- reports

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string table_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream os;
  os << "experiment_id,subset,accuracy,auc,ap,f1,n_samples\n";
  for (const auto& r : rows) {
    os << r.experiment_id << ',' << r.subset << ',' << fmt_num(r.accuracy) << ',' << fmt_num(r.auc) << ','
       << fmt_num(r.ap) << ',' << fmt_num(r.f1) << ',' << r.n_samples << '\n';
  }
  return os.str();
}

std::string tuning_csv(const std::vector<std::pair<std::string, const TuneResult*>>& runs) {
  std::ostringstream os;
  os << "model,phase,n_trees,max_depth,min_child_weight,learning_rate,reg_lambda,subsample,valid_auc\n";
  for (const auto& [name, tr] : runs) {
    for (const auto& t : tr->trials) {
      os << name << ',' << t.phase << ',' << t.hp.n_trees << ',' << t.hp.max_depth << ','
         << fmt_num(t.hp.min_child_weight) << ',' << fmt_num(t.hp.learning_rate) << ',' << fmt_num(t.hp.reg_lambda)
         << ',' << fmt_num(t.hp.subsample) << ',' << fmt_num(t.valid_auc) << '\n';
    }
  }
  return os.str();
}

std::string matrix_csv(const std::vector<std::string>& names, const std::vector<std::vector<double>>& m) {
  std::ostringstream os;
  os << "train_class";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << names[i];
    for (double v : m[i]) os << ',' << fmt_num(v);
    os << '\n';
  }
  return os.str();
}

ordered_json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

ordered_json model_summary(const TuneResult& t) {
  return {{"valid_auc", t.valid_auc},
          {"threshold", t.model.threshold},
          {"hp",
           {{"n_trees", t.hp.n_trees},
            {"max_depth", t.hp.max_depth},
            {"min_child_weight", t.hp.min_child_weight},
            {"learning_rate", t.hp.learning_rate},
            {"reg_lambda", t.hp.reg_lambda},
            {"subsample", t.hp.subsample}}}};
}

ordered_json table_json(const std::vector<EvalRow>& rows) {
  ordered_json a = ordered_json::array();
  for (const auto& r : rows) {
    a.push_back({{"experiment_id", r.experiment_id},
                 {"subset", r.subset},
                 {"accuracy", num(r.accuracy)},
                 {"auc", num(r.auc)},
                 {"ap", num(r.ap)},
                 {"f1", num(r.f1)},
                 {"n_samples", r.n_samples}});
  }
  return a;
}

}  // namespace

std::string samples_csv(const std::vector<SampleResult>& samples, int n_cycles) {
  std::ostringstream os;
  os << "set,id,scene_class,label,noise_kind,sigma,hash,eps0,eps_x,eps_y,b_x,b_y,dx1,k_x,k_y,r2_x,r2_y,"
        "score_cycle,score_dx1";
  for (int i = 1; i <= n_cycles; ++i) os << ",dy_" << i;
  for (int i = 1; i <= n_cycles + 1; ++i) os << ",dx_" << i;
  os << '\n';
  for (const auto& s : samples) {
    const auto& f = s.features;
    os << s.set << ',' << s.id << ',' << s.scene_class << ',' << s.label << ',' << to_string(s.noise) << ','
       << fmt_num(s.sigma) << ',' << hex64(s.hash) << ',' << fmt_num(s.eps0);
    for (double v : f.features.values()) os << ',' << fmt_num(v);
    os << ',' << fmt_num(f.fit_x.k_hat) << ',' << fmt_num(f.fit_y.k_hat) << ',' << fmt_num(f.fit_x.r_squared) << ','
       << fmt_num(f.fit_y.r_squared) << ',' << fmt_num(s.score_cycle) << ',' << fmt_num(s.score_dx1);
    for (double v : s.dy) os << ',' << fmt_num(v);
    for (double v : s.dx) os << ',' << fmt_num(v);
    os << '\n';
  }
  return os.str();
}

void write_deblur_report(const DeblurReport& r, const std::filesystem::path& dir) {
  write_text_file(dir / "config.json", config_json(r.config));
  write_text_file(dir / "calibration.json", calibration_json(r.calibration) + "\n");
  write_text_file(dir / "classifier.json", ensemble_json(r.classifier.model) + "\n");
  write_text_file(dir / "baseline.json", ensemble_json(r.baseline.model) + "\n");
  write_text_file(dir / "predictor.json", linear_model_json(r.predictor) + "\n");
  write_text_file(dir / "table.csv", table_csv(r.table));
  write_text_file(dir / "tuning.csv", tuning_csv({{"cycle", &r.classifier}, {"dx1_only", &r.baseline}}));
  write_text_file(dir / "samples.csv", samples_csv(r.samples, r.config.n_cycles));

  std::ostringstream acc;
  acc << "noise_kind,sigma,accuracy_cycle,accuracy_dx1,n_samples\n";
  for (const auto& p : r.accuracy_vs_sigma) {
    acc << p.noise_kind << ',' << fmt_num(p.sigma) << ',' << fmt_num(p.accuracy_cycle) << ','
        << fmt_num(p.accuracy_dx1) << ',' << p.n_samples << '\n';
  }
  write_text_file(dir / "accuracy_vs_sigma.csv", acc.str());

  std::ostringstream imp;
  imp << "feature,importance\n";
  for (std::size_t i = 0; i < r.importance.size(); ++i) {
    imp << kFeatureNames[static_cast<std::size_t>(r.classifier.model.feature_indices[i])] << ','
        << fmt_num(r.importance[i]) << '\n';
  }
  write_text_file(dir / "importance.csv", imp.str());

  ordered_json j;
  j["testbed"] = "deblur";
  j["lambda"] = r.calibration.spec.lambda();
  j["classifier"] = model_summary(r.classifier);
  j["baseline"] = model_summary(r.baseline);
  j["predictor"] = {{"r2_train", num(r.predictor_r2_train)}, {"r2_snp", num(r.predictor_r2_snp)}};
  ordered_json importance;
  for (std::size_t i = 0; i < r.importance.size(); ++i) importance[kFeatureNames[i]] = r.importance[i];
  j["importance"] = importance;
  j["table"] = table_json(r.table);
  write_text_file(dir / "report.json", j.dump(2) + "\n");
}

void write_sr_report(const SrReport& r, const std::filesystem::path& dir) {
  write_text_file(dir / "config.json", config_json(r.config));
  std::vector<std::string> names;
  ordered_json j;
  j["testbed"] = "sr";
  ordered_json classes = ordered_json::array();
  std::vector<std::pair<std::string, const TuneResult*>> runs;
  for (const auto& c : r.classes) {
    names.push_back(c.scene_class);
    write_text_file(dir / ("classifier_" + c.scene_class + ".json"), ensemble_json(c.classifier.model) + "\n");
    write_text_file(dir / ("baseline_" + c.scene_class + ".json"), ensemble_json(c.baseline.model) + "\n");
    runs.emplace_back("cycle/" + c.scene_class, &c.classifier);
    runs.emplace_back("dx1_only/" + c.scene_class, &c.baseline);
    classes.push_back({{"scene_class", c.scene_class},
                       {"lambda", c.calibration.spec.lambda()},
                       {"calibration_error", c.calibration.mean_error},
                       {"classifier", model_summary(c.classifier)},
                       {"baseline", model_summary(c.baseline)}});
  }
  j["classes"] = classes;
  j["matrix_cycle"] = r.matrix_cycle;
  j["matrix_dx1"] = r.matrix_dx1;
  j["table"] = table_json(r.table);
  write_text_file(dir / "matrix_cycle.csv", matrix_csv(names, r.matrix_cycle));
  write_text_file(dir / "matrix_dx1.csv", matrix_csv(names, r.matrix_dx1));
  write_text_file(dir / "table.csv", table_csv(r.table));
  write_text_file(dir / "tuning.csv", tuning_csv(runs));
  write_text_file(dir / "samples.csv", samples_csv(r.samples, r.config.n_cycles));
  write_text_file(dir / "report.json", j.dump(2) + "\n");
}

std::string bounds_suite_json(const BoundsSuiteReport& r) {
  ordered_json j;
  j["lambda"] = r.lambda;
  j["n_images"] = r.n_images;
  j["eq6_pass_rate"] = r.eq6_pass_rate;
  j["eq7_pass_rate"] = r.eq7_pass_rate;
  j["eq9or10_pass_rate"] = num(r.eq9or10_pass_rate);
  j["regimes"] = {{"eq9", r.n_eq9}, {"eq10", r.n_eq10}, {"inconclusive", r.n_inconclusive}};
  ordered_json images = ordered_json::array();
  for (const auto& b : r.images) images.push_back(ordered_json::parse(bounds_report_json(b)));
  j["images"] = images;
  return j.dump(2) + "\n";
}

void write_bounds_report(const BoundsSuiteReport& r, const std::filesystem::path& dir) {
  write_text_file(dir / "bounds.json", bounds_suite_json(r));
}

// ---------------------------------------------------------------- plot data

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  CsvTable t;
  std::istringstream is(read_text_file(path));
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty CSV: " + path.string());
  t.header = split_csv_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) throw DataError("ragged CSV row in " + path.string());
    t.rows.push_back(std::move(cells));
  }
  return t;
}

double to_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw DataError("bad number: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw DataError("bad number: " + s);
  }
}

}  // namespace

void emit_plotdata(const std::filesystem::path& report_dir, const std::filesystem::path& out, int n_curves) {
  const CsvTable samples = read_csv(report_dir / "samples.csv");
  auto col = [&](const std::string& name) {
    const int c = samples.column(name);
    if (c < 0) throw DataError("samples.csv lacks column " + name);
    return static_cast<std::size_t>(c);
  };
  int n_cycles = 0;
  while (samples.column("dy_" + std::to_string(n_cycles + 1)) >= 0) ++n_cycles;
  if (n_cycles < 1) throw DataError("samples.csv has no cycle columns");

  std::ostringstream curves;
  curves << "id,n,dy,dx,dy_fit,dx_fit\n";
  const std::size_t n_rows = std::min(samples.rows.size(), static_cast<std::size_t>(std::max(0, n_curves)));
  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto& row = samples.rows[r];
    const double ey = to_double(row[col("eps_y")]);
    const double ky = to_double(row[col("k_y")]);
    const double by = to_double(row[col("b_y")]);
    const double ex = to_double(row[col("eps_x")]);
    const double kx = to_double(row[col("k_x")]);
    const double bx = to_double(row[col("b_x")]);
    for (int n = 1; n <= n_cycles + 1; ++n) {
      curves << row[col("id")] << ',' << n << ',';
      if (n <= n_cycles) curves << row[col("dy_" + std::to_string(n))];
      curves << ',' << row[col("dx_" + std::to_string(n))] << ',';
      if (n <= n_cycles) curves << fmt_num(ey * std::pow(ky, n) + by);
      curves << ',';
      if (n >= 2) curves << fmt_num(ex * std::pow(kx, n) + bx);
      curves << '\n';
    }
  }
  write_text_file(out / "cycle_curves.csv", curves.str());

  std::ostringstream scatter;
  scatter << "set,id,eps_y,eps0\n";
  for (const auto& row : samples.rows) {
    scatter << row[col("set")] << ',' << row[col("id")] << ',' << row[col("eps_y")] << ',' << row[col("eps0")] << '\n';
  }
  write_text_file(out / "scatter_eps.csv", scatter.str());

  if (std::filesystem::exists(report_dir / "predictor.json")) {
    const LinearModel model = parse_linear_model_json(read_text_file(report_dir / "predictor.json"));
    std::ostringstream pva;
    pva << "set,id,predicted,actual\n";
    for (const auto& row : samples.rows) {
      const std::string& set = row[col("set")];
      if (set != "pred_gauss" && set != "pred_snp") continue;
      FeatureVector f;
      f.eps_x = to_double(row[col("eps_x")]);
      f.eps_y = to_double(row[col("eps_y")]);
      f.b_x = to_double(row[col("b_x")]);
      f.b_y = to_double(row[col("b_y")]);
      f.dx1 = to_double(row[col("dx1")]);
      pva << set << ',' << row[col("id")] << ',' << fmt_num(predict(model, f)) << ',' << row[col("eps0")] << '\n';
    }
    write_text_file(out / "predicted_vs_actual.csv", pva.str());
  }
  for (const char* name : {"accuracy_vs_sigma.csv", "importance.csv", "matrix_cycle.csv", "matrix_dx1.csv"}) {
    if (std::filesystem::exists(report_dir / name)) {
      write_text_file(out / name, read_text_file(report_dir / name));
    }
  }
}

}  // namespace cycleuq
