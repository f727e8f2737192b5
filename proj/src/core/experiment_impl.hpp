#pragma once

#include "core/cycle.hpp"
#include "core/parallel.hpp"

namespace cycleuq {

template <typename SolverFor>
std::vector<SampleResult> process_samples(const std::string& set, const std::vector<SampleRecipe>& recipes,
                                          SolverFor&& solver_for, int n_cycles, int jobs) {
  std::vector<SampleResult> out(recipes.size());
  parallel_for(recipes.size(), jobs, [&](std::size_t i) {
    const SampleRecipe& rc = recipes[i];
    const Sample s = synthesize(rc);
    const SolverSpec solver = solver_for(rc);
    const CycleTrace trace = run_cycles(s.measurement, solver, rc.forward, n_cycles);
    SampleResult& r = out[i];
    r.set = set;
    r.id = rc.id;
    r.scene_class = to_string(rc.scene.class_id);
    r.label = rc.label;
    r.noise = rc.noise.kind;
    r.sigma = rc.noise.sigma;
    r.hash = content_hash(s.measurement);
    r.eps0 = actual_uncertainty(trace, s.ground_truth).eps0_norm;
    r.features = extract_features(trace);
    r.dy = trace.dy;
    r.dx = trace.dx;
  });
  return out;
}

}  // namespace cycleuq
