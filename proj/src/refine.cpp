// SPDX-License-Identifier: Apache-2.0

#include "voxprior/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace voxprior {

void RefineParams::validate() const {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "refine step must be positive");
  if (iterations < 0) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 0");
  if (!(w_stability >= 0.0) || !(w_connectivity >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "objective weights must be >= 0");
  }
  if (!(clamp_lo >= 0.0 && clamp_lo < clamp_hi && clamp_hi <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid refine clamp range");
  }
  if (!(stop_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "stop tolerance must be >= 0");
  if (max_halvings < 0) throw Error(ErrorCode::InvalidArgument, "max halvings must be >= 0");
  stability.validate();
  connectivity.validate();
}

namespace {

struct Objective {
  double stability = 0.0;
  double connectivity = 0.0;
  double combined = 0.0;
};

bool has_anchor(const ProbGrid& g, const ConnectivityParams& p) {
  return !connectivity_anchors(coarsen(g, p.coarsen_factor), p).empty();
}

Objective evaluate(const ProbGrid& v, const ProbGrid& others, const RefineParams& p) {
  Objective o;
  o.stability = stability_log_prob(v, others, p.stability);
  o.connectivity = has_anchor(v, p.connectivity) ? connectivity_log_prob(v, p.connectivity) : 0.0;
  o.combined = p.w_stability * o.stability + p.w_connectivity * o.connectivity;
  return o;
}

ScalarField ascent_direction(const ProbGrid& v, const BinaryGrid& occluded, const ProbGrid& others,
                             const RefineParams& p) {
  ScalarField g(v.frame(), 0.0);
  if (p.w_stability > 0.0) {
    const ScalarField s = stability_gradient(v, others, p.stability);
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (occluded[n]) g[n] += p.w_stability * s[n];
    }
  }
  if (p.w_connectivity > 0.0 && has_anchor(v, p.connectivity)) {
    const ScalarField c = connectivity_gradient(v, occluded, p.connectivity);
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (occluded[n]) g[n] += p.w_connectivity * c[n];
    }
  }
  return g;
}

void finish_report(RefineReport& report, const ProbGrid& v, const ProbGrid& others,
                   const StabilityParams& sp) {
  const BinaryGrid shape = binarize(v, 0.5);
  report.components = connected_components(shape, Neighborhood::TwentySix).count;
  if (report.components == 0) {
    report.equilibrium = EquilibriumReport{};
    return;
  }
  report.equilibrium = check_static_equilibrium(shape, binarize(others, 0.5), sp);
}

}  // namespace

RefineResult refine(const ProbGrid& object, const BinaryGrid& occluded, const ProbGrid& others,
                    const RefineParams& params) {
  params.validate();
  require_same_frame(object.frame(), occluded.frame());
  require_same_frame(object.frame(), others.frame());
  require_probabilities(object);
  require_probabilities(others);

  RefineResult result{object, {}};
  RefineReport& report = result.report;
  ProbGrid& cur = result.grid;

  const bool writable = std::any_of(occluded.values().begin(), occluded.values().end(),
                                    [](std::uint8_t b) { return b != 0; });
  if (params.iterations == 0 || !writable) {
    const Objective o = evaluate(cur, others, params);
    report.initial_stability = o.stability;
    report.initial_connectivity = o.connectivity;
    report.initial_objective = o.combined;
    report.stop_reason = params.iterations == 0 ? "no iterations requested" : "no writable voxels";
    finish_report(report, cur, others, params.stability);
    return result;
  }

  const auto clamp = [&](double v) { return std::clamp(v, params.clamp_lo, params.clamp_hi); };
  // Project the starting point onto the feasible box.
  for (std::size_t n = 0; n < cur.size(); ++n) {
    if (occluded[n]) cur[n] = clamp(cur[n]);
  }
  Objective current = evaluate(cur, others, params);
  report.initial_stability = current.stability;
  report.initial_connectivity = current.connectivity;
  report.initial_objective = current.combined;

  report.stop_reason = "iteration limit";
  for (int it = 0; it < params.iterations; ++it) {
    const ScalarField g = ascent_direction(cur, occluded, others, params);

    bool accepted = false;
    bool moved = false;
    double eta = params.step;
    ProbGrid trial = cur;
    Objective next;
    for (int h = 0; h <= params.max_halvings; ++h, eta *= 0.5) {
      moved = false;
      for (std::size_t n = 0; n < cur.size(); ++n) {
        if (!occluded[n]) continue;
        trial[n] = clamp(cur[n] + eta * g[n]);
        moved = moved || trial[n] != cur[n];
      }
      if (!moved) break;
      next = evaluate(trial, others, params);
      if (next.combined >= current.combined) {
        accepted = true;
        break;
      }
    }
    if (!moved) {
      report.stop_reason = "stationary";
      break;
    }
    if (!accepted) {
      report.stop_reason = "line search failed";
      break;
    }

    const double change = next.combined - current.combined;
    cur = std::move(trial);
    current = next;
    report.stability_logp.push_back(current.stability);
    report.connectivity_logp.push_back(current.connectivity);
    report.objective.push_back(current.combined);
    report.accepted_step.push_back(eta);
    ++report.iterations_run;
    if (std::abs(change) < params.stop_tol) {
      report.stop_reason = "converged";
      break;
    }
  }
  finish_report(report, cur, others, params.stability);
  return result;
}

ProbGrid assemble_others(const std::vector<ProbGrid>& grids, std::size_t skip) {
  if (grids.empty()) throw Error(ErrorCode::InvalidArgument, "no grids to assemble");
  ProbGrid none(grids.front().frame(), 1.0);
  for (std::size_t k = 0; k < grids.size(); ++k) {
    require_same_frame(grids[k].frame(), none.frame());
    if (k == skip) continue;
    for (std::size_t n = 0; n < none.size(); ++n) none[n] *= 1.0 - grids[k][n];
  }
  for (std::size_t n = 0; n < none.size(); ++n) none[n] = 1.0 - none[n];
  return none;
}

std::vector<ProbGrid> refine_scene(const std::vector<SceneObject>& objects,
                                   const RefineParams& params, int sweeps) {
  if (sweeps < 0) throw Error(ErrorCode::InvalidArgument, "sweep count must be >= 0");
  std::vector<ProbGrid> current;
  current.reserve(objects.size());
  for (const SceneObject& o : objects) {
    if (!objects.empty()) require_same_frame(o.grid.frame(), objects.front().grid.frame());
    require_same_frame(o.grid.frame(), o.occluded.frame());
    current.push_back(o.grid);
  }
  for (int sweep = 0; sweep < sweeps && !current.empty(); ++sweep) {
    const std::vector<ProbGrid> snapshot = current;
    std::vector<std::size_t> order(snapshot.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> volume(snapshot.size());
    for (std::size_t k = 0; k < snapshot.size(); ++k) volume[k] = total_mass(snapshot[k]);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return volume[a] < volume[b]; });
    for (std::size_t k : order) {
      current[k] = refine(snapshot[k], objects[k].occluded, assemble_others(snapshot, k), params).grid;
    }
  }
  return current;
}

}  // namespace voxprior
