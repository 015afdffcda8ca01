// SPDX-License-Identifier: Apache-2.0

#include "voxprior/voxprior.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "voxprior/connectivity.hpp"
#include "voxprior/error.hpp"
#include "voxprior/frustum.hpp"
#include "voxprior/io.hpp"
#include "voxprior/meshing.hpp"
#include "voxprior/refine.hpp"
#include "voxprior/stability.hpp"

struct vp_grid {
  voxprior::VoxelGridFile file;
  std::string scratch;  // backing store for vp_grid_meta_string
};

struct vp_scene {
  voxprior::Scene scene;
};

struct vp_mesh {
  voxprior::TriMesh mesh;
};

struct vp_equilibrium {
  voxprior::EquilibriumReport report;
};

struct vp_refine_report {
  voxprior::RefineReport report;
  std::string json;
};

namespace {

using voxprior::Error;
using voxprior::ErrorCode;

thread_local std::string g_last_error;

vp_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return VP_ERROR_INVALID_ARGUMENT;
    case ErrorCode::MalformedInput: return VP_ERROR_MALFORMED_INPUT;
    case ErrorCode::Io: return VP_ERROR_IO;
    case ErrorCode::FrameMismatch: return VP_ERROR_FRAME_MISMATCH;
    case ErrorCode::ZeroMass: return VP_ERROR_ZERO_MASS;
    case ErrorCode::EmptyObject: return VP_ERROR_EMPTY_OBJECT;
    case ErrorCode::UnknownObject: return VP_ERROR_UNKNOWN_OBJECT;
    case ErrorCode::NoBackground: return VP_ERROR_NO_BACKGROUND;
    case ErrorCode::NoAnchors: return VP_ERROR_NO_ANCHORS;
    case ErrorCode::Unreachable: return VP_ERROR_UNREACHABLE;
    case ErrorCode::EmptyShape: return VP_ERROR_EMPTY_SHAPE;
    case ErrorCode::EmptyMesh: return VP_ERROR_EMPTY_MESH;
    case ErrorCode::EmptySet: return VP_ERROR_EMPTY_SET;
  }
  return VP_ERROR_INTERNAL;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
vp_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    g_last_error.clear();
    return VP_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return VP_ERROR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return VP_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return VP_ERROR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

// Channel 0 of a single-channel grid, validated as probabilities.
voxprior::ProbGrid single(const vp_grid* g, const char* name) {
  require(g != nullptr, (std::string(name) + " is null").c_str());
  if (g->file.channels != 1) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(name) + " must have exactly one channel, has " +
                    std::to_string(g->file.channels));
  }
  voxprior::ProbGrid p = g->file.channel(0);
  voxprior::require_probabilities(p);
  return p;
}

voxprior::ProbGrid others_or_empty(const vp_grid* others, const voxprior::ProbGrid& object) {
  if (others == nullptr) return voxprior::ProbGrid(object.frame(), 0.0);
  voxprior::ProbGrid o = single(others, "others");
  voxprior::require_same_frame(object.frame(), o.frame());
  return o;
}

voxprior::StabilityParams to_cpp(const vp_stability_params* p) {
  voxprior::StabilityParams s;
  if (p != nullptr) {
    s.n_directions = p->n_directions;
    s.prob_clamp = p->prob_clamp;
    s.cdf_mode = p->step_cdf != 0 ? voxprior::CdfMode::Step : voxprior::CdfMode::Normal;
    s.opposite_lateral = p->opposite_lateral != 0;
  }
  s.validate();
  return s;
}

voxprior::ConnectivityParams to_cpp(const vp_connectivity_params* p) {
  voxprior::ConnectivityParams c;
  if (p != nullptr) {
    c.coarsen_factor = p->coarsen_factor;
    c.anchor_threshold = p->anchor_threshold;
    c.prob_clamp = p->prob_clamp;
    c.all_pairs = p->all_pairs != 0;
  }
  c.validate();
  return c;
}

void copy_out(const voxprior::ScalarField& field, double* out, std::size_t count) {
  require(out != nullptr, "output buffer is null");
  if (count != field.size()) {
    throw Error(ErrorCode::InvalidArgument, "output buffer holds " + std::to_string(count) +
                                                " values, grid has " +
                                                std::to_string(field.size()));
  }
  std::memcpy(out, field.values().data(), count * sizeof(double));
}

std::vector<voxprior::Vec3> unpack(const double* xyz, std::size_t n) {
  require(xyz != nullptr || n == 0, "point buffer is null");
  std::vector<voxprior::Vec3> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
  return pts;
}

nlohmann::json report_json(const voxprior::RefineReport& r) {
  nlohmann::json failing = nlohmann::json::array();
  for (std::size_t i = 0; i < r.equilibrium.failing_directions.size(); ++i) {
    const auto& v = r.equilibrium.failing_vectors[i];
    failing.push_back({{"index", r.equilibrium.failing_directions[i]},
                       {"direction", {v.x(), v.y(), v.z()}}});
  }
  return {
      {"initial",
       {{"stability_logp", r.initial_stability},
        {"connectivity_logp", r.initial_connectivity},
        {"objective", r.initial_objective}}},
      {"stability_logp", r.stability_logp},
      {"connectivity_logp", r.connectivity_logp},
      {"objective", r.objective},
      {"step", r.accepted_step},
      {"iterations_run", r.iterations_run},
      {"stop_reason", r.stop_reason},
      {"components", r.components},
      {"stable", r.equilibrium.stable},
      {"failing_directions", failing},
  };
}

}  // namespace

extern "C" {

const char* vp_version(void) { return "0.1.0"; }

const char* vp_status_name(vp_status status) {
  switch (status) {
    case VP_OK: return "ok";
    case VP_ERROR_INVALID_ARGUMENT: return "invalid_argument";
    case VP_ERROR_MALFORMED_INPUT: return "malformed_input";
    case VP_ERROR_IO: return "io";
    case VP_ERROR_FRAME_MISMATCH: return "frame_mismatch";
    case VP_ERROR_ZERO_MASS: return "zero_mass";
    case VP_ERROR_EMPTY_OBJECT: return "empty_object";
    case VP_ERROR_UNKNOWN_OBJECT: return "unknown_object";
    case VP_ERROR_NO_BACKGROUND: return "no_background";
    case VP_ERROR_NO_ANCHORS: return "no_anchors";
    case VP_ERROR_UNREACHABLE: return "unreachable";
    case VP_ERROR_EMPTY_SHAPE: return "empty_shape";
    case VP_ERROR_EMPTY_MESH: return "empty_mesh";
    case VP_ERROR_EMPTY_SET: return "empty_set";
    case VP_ERROR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* vp_last_error(void) { return g_last_error.c_str(); }

// ---- grids ---------------------------------------------------------------

vp_status vp_grid_create(const int32_t dims[3], int32_t channels, double voxel_size,
                         const double origin[3], vp_grid** out) {
  return guarded([&] {
    require(dims != nullptr && origin != nullptr && out != nullptr, "null argument");
    require(channels >= 1, "channel count must be positive");
    auto g = std::make_unique<vp_grid>();
    g->file.frame = voxprior::GridFrame({dims[0], dims[1], dims[2]}, voxel_size,
                                        {origin[0], origin[1], origin[2]});
    g->file.channels = channels;
    g->file.payload.assign(g->file.frame.size() * static_cast<std::size_t>(channels), 0.0f);
    *out = g.release();
  });
}

vp_status vp_grid_read(const char* path, vp_grid** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    auto g = std::make_unique<vp_grid>();
    g->file = voxprior::read_voxel_grid(std::string(path));
    *out = g.release();
  });
}

vp_status vp_grid_write(const vp_grid* grid, const char* path) {
  return guarded([&] {
    require(grid != nullptr && path != nullptr, "null argument");
    voxprior::write_voxel_grid(std::string(path), grid->file);
  });
}

vp_status vp_grid_clone(const vp_grid* grid, vp_grid** out) {
  return guarded([&] {
    require(grid != nullptr && out != nullptr, "null argument");
    auto g = std::make_unique<vp_grid>();
    g->file = grid->file;
    *out = g.release();
  });
}

void vp_grid_destroy(vp_grid* grid) { delete grid; }

vp_status vp_grid_info(const vp_grid* grid, int32_t dims[3], int32_t* channels,
                       double* voxel_size, double origin[3]) {
  return guarded([&] {
    require(grid != nullptr, "grid is null");
    const auto& f = grid->file.frame;
    if (dims != nullptr) {
      dims[0] = f.dims().x;
      dims[1] = f.dims().y;
      dims[2] = f.dims().z;
    }
    if (channels != nullptr) *channels = grid->file.channels;
    if (voxel_size != nullptr) *voxel_size = f.voxel_size();
    if (origin != nullptr) {
      origin[0] = f.origin().x();
      origin[1] = f.origin().y();
      origin[2] = f.origin().z();
    }
  });
}

float* vp_grid_data(vp_grid* grid) { return grid != nullptr ? grid->file.payload.data() : nullptr; }

const float* vp_grid_data_const(const vp_grid* grid) {
  return grid != nullptr ? grid->file.payload.data() : nullptr;
}

size_t vp_grid_value_count(const vp_grid* grid) {
  return grid != nullptr ? grid->file.payload.size() : 0;
}

vp_status vp_grid_extract_channel(const vp_grid* grid, int32_t channel, vp_grid** out) {
  return guarded([&] {
    require(grid != nullptr && out != nullptr, "null argument");
    if (channel < 0 || channel >= grid->file.channels) {
      throw Error(ErrorCode::InvalidArgument,
                  "channel " + std::to_string(channel) + " out of range (grid has " +
                      std::to_string(grid->file.channels) + ")");
    }
    auto g = std::make_unique<vp_grid>();
    g->file.frame = grid->file.frame;
    g->file.channels = 1;
    const auto v = grid->file.channel_values(channel);
    g->file.payload.assign(v.begin(), v.end());
    g->file.meta = grid->file.meta;
    *out = g.release();
  });
}

vp_status vp_grid_meta_number(const vp_grid* grid, const char* key, double* out) {
  return guarded([&] {
    require(grid != nullptr && key != nullptr && out != nullptr, "null argument");
    const auto it = grid->file.meta.find(key);
    if (it == grid->file.meta.end() || !std::holds_alternative<double>(it->second)) {
      throw Error(ErrorCode::InvalidArgument, std::string("no numeric meta key '") + key + "'");
    }
    *out = std::get<double>(it->second);
  });
}

vp_status vp_grid_meta_string(const vp_grid* grid, const char* key, const char** out) {
  return guarded([&] {
    require(grid != nullptr && key != nullptr && out != nullptr, "null argument");
    const auto it = grid->file.meta.find(key);
    if (it == grid->file.meta.end() || !std::holds_alternative<std::string>(it->second)) {
      throw Error(ErrorCode::InvalidArgument, std::string("no string meta key '") + key + "'");
    }
    *out = std::get<std::string>(it->second).c_str();
  });
}

vp_status vp_grid_set_meta_number(vp_grid* grid, const char* key, double value) {
  return guarded([&] {
    require(grid != nullptr && key != nullptr, "null argument");
    grid->file.meta[key] = value;
  });
}

// ---- scenes --------------------------------------------------------------

vp_status vp_scene_load(const char* manifest_path, vp_scene** out) {
  return guarded([&] {
    require(manifest_path != nullptr && out != nullptr, "null argument");
    auto s = std::make_unique<vp_scene>();
    s->scene = voxprior::load_scene(manifest_path);
    *out = s.release();
  });
}

void vp_scene_destroy(vp_scene* scene) { delete scene; }

vp_status vp_build_representation(const vp_scene* scene, uint16_t object_id, int32_t dim,
                                  double k, vp_grid** out) {
  return guarded([&] {
    require(scene != nullptr && out != nullptr, "null argument");
    voxprior::RepresentationOptions opts;
    opts.frame.d = dim;
    opts.frame.k = k;
    opts.z_table = scene->scene.z_table;
    const auto rep = voxprior::build_representation(scene->scene.observation,
                                                    scene->scene.camera, object_id, opts);
    auto g = std::make_unique<vp_grid>();
    g->file = voxprior::pack_representation(rep, k);
    *out = g.release();
  });
}

// ---- objectives ----------------------------------------------------------

void vp_stability_params_default(vp_stability_params* params) {
  if (params == nullptr) return;
  const voxprior::StabilityParams d;
  params->n_directions = d.n_directions;
  params->prob_clamp = d.prob_clamp;
  params->step_cdf = d.cdf_mode == voxprior::CdfMode::Step ? 1 : 0;
  params->opposite_lateral = d.opposite_lateral ? 1 : 0;
}

void vp_connectivity_params_default(vp_connectivity_params* params) {
  if (params == nullptr) return;
  const voxprior::ConnectivityParams d;
  params->coarsen_factor = d.coarsen_factor;
  params->anchor_threshold = d.anchor_threshold;
  params->prob_clamp = d.prob_clamp;
  params->all_pairs = d.all_pairs ? 1 : 0;
}

vp_status vp_stability_log_prob(const vp_grid* object, const vp_grid* others,
                                const vp_stability_params* params, double* out) {
  return guarded([&] {
    require(out != nullptr, "output is null");
    const auto v = single(object, "object");
    const auto o = others_or_empty(others, v);
    *out = voxprior::stability_log_prob(v, o, to_cpp(params));
  });
}

vp_status vp_stability_gradient(const vp_grid* object, const vp_grid* others,
                                const vp_stability_params* params, double* out, size_t count) {
  return guarded([&] {
    const auto v = single(object, "object");
    const auto o = others_or_empty(others, v);
    copy_out(voxprior::stability_gradient(v, o, to_cpp(params)), out, count);
  });
}

vp_status vp_connectivity_log_prob(const vp_grid* grid, const vp_connectivity_params* params,
                                   double* out) {
  return guarded([&] {
    require(out != nullptr, "output is null");
    *out = voxprior::connectivity_log_prob(single(grid, "grid"), to_cpp(params));
  });
}

vp_status vp_connectivity_gradient(const vp_grid* grid, const vp_grid* occluded,
                                   const vp_connectivity_params* params, double* out,
                                   size_t count) {
  return guarded([&] {
    const auto v = single(grid, "grid");
    const auto occ = voxprior::binarize(single(occluded, "occluded"));
    voxprior::require_same_frame(v.frame(), occ.frame());
    copy_out(voxprior::connectivity_gradient(v, occ, to_cpp(params)), out, count);
  });
}

vp_status vp_check_equilibrium(const vp_grid* object, const vp_grid* others,
                               const vp_stability_params* params, vp_equilibrium** out) {
  return guarded([&] {
    require(out != nullptr, "output is null");
    const auto v = single(object, "object");
    const auto o = others_or_empty(others, v);
    auto e = std::make_unique<vp_equilibrium>();
    e->report = voxprior::check_static_equilibrium(voxprior::binarize(v), voxprior::binarize(o),
                                                   to_cpp(params));
    *out = e.release();
  });
}

int32_t vp_equilibrium_stable(const vp_equilibrium* eq) {
  return eq != nullptr && eq->report.stable ? 1 : 0;
}

size_t vp_equilibrium_failing_count(const vp_equilibrium* eq) {
  return eq != nullptr ? eq->report.failing_directions.size() : 0;
}

vp_status vp_equilibrium_failing(const vp_equilibrium* eq, size_t i, int32_t* index,
                                 double direction[3]) {
  return guarded([&] {
    require(eq != nullptr, "report is null");
    require(i < eq->report.failing_directions.size(), "failing direction index out of range");
    if (index != nullptr) *index = eq->report.failing_directions[i];
    if (direction != nullptr) {
      const auto& v = eq->report.failing_vectors[i];
      direction[0] = v.x();
      direction[1] = v.y();
      direction[2] = v.z();
    }
  });
}

void vp_equilibrium_destroy(vp_equilibrium* eq) { delete eq; }

// ---- refinement ----------------------------------------------------------

void vp_refine_params_default(vp_refine_params* params) {
  if (params == nullptr) return;
  const voxprior::RefineParams d;
  params->step = d.step;
  params->iterations = d.iterations;
  params->w_stability = d.w_stability;
  params->w_connectivity = d.w_connectivity;
  params->clamp_lo = d.clamp_lo;
  params->clamp_hi = d.clamp_hi;
  params->stop_tol = d.stop_tol;
  params->max_halvings = d.max_halvings;
  vp_stability_params_default(&params->stability);
  vp_connectivity_params_default(&params->connectivity);
}

vp_status vp_refine(const vp_grid* object, const vp_grid* occluded, int32_t occluded_channel,
                    const vp_grid* others, const vp_refine_params* params, vp_grid** out,
                    vp_refine_report** report) {
  return guarded([&] {
    require(out != nullptr, "output is null");
    require(occluded != nullptr, "occluded is null");
    const auto v = single(object, "object");
    const auto o = others_or_empty(others, v);
    if (occluded_channel < 0 || occluded_channel >= occluded->file.channels) {
      throw Error(ErrorCode::InvalidArgument, "occluded channel out of range");
    }
    const auto occ = occluded->file.mask(occluded_channel);
    voxprior::require_same_frame(v.frame(), occ.frame());

    voxprior::RefineParams p;
    if (params != nullptr) {
      p.step = params->step;
      p.iterations = params->iterations;
      p.w_stability = params->w_stability;
      p.w_connectivity = params->w_connectivity;
      p.clamp_lo = params->clamp_lo;
      p.clamp_hi = params->clamp_hi;
      p.stop_tol = params->stop_tol;
      p.max_halvings = params->max_halvings;
      p.stability = to_cpp(&params->stability);
      p.connectivity = to_cpp(&params->connectivity);
    }
    p.validate();

    auto result = voxprior::refine(v, occ, o, p);
    auto g = std::make_unique<vp_grid>();
    g->file.frame = result.grid.frame();
    g->file.channels = 1;
    // float -> double -> float is exact, so untouched voxels keep their bits.
    const auto vals = result.grid.values();
    g->file.payload.assign(vals.begin(), vals.end());
    g->file.meta = object->file.meta;

    std::unique_ptr<vp_refine_report> r;
    if (report != nullptr) {
      r = std::make_unique<vp_refine_report>();
      r->json = report_json(result.report).dump();
      r->report = std::move(result.report);
    }
    *out = g.release();
    if (report != nullptr) *report = r.release();
  });
}

size_t vp_refine_report_iterations(const vp_refine_report* report) {
  return report != nullptr ? static_cast<size_t>(report->report.iterations_run) : 0;
}

int32_t vp_refine_report_stable(const vp_refine_report* report) {
  return report != nullptr && report->report.equilibrium.stable ? 1 : 0;
}

int32_t vp_refine_report_components(const vp_refine_report* report) {
  return report != nullptr ? report->report.components : 0;
}

const char* vp_refine_report_json(const vp_refine_report* report) {
  return report != nullptr ? report->json.c_str() : "";
}

void vp_refine_report_destroy(vp_refine_report* report) { delete report; }

// ---- meshing -------------------------------------------------------------

vp_status vp_marching_cubes(const vp_grid* grid, int32_t channel, double iso, vp_mesh** out) {
  return guarded([&] {
    require(grid != nullptr && out != nullptr, "null argument");
    if (channel < 0 || channel >= grid->file.channels) {
      throw Error(ErrorCode::InvalidArgument, "channel out of range");
    }
    auto m = std::make_unique<vp_mesh>();
    m->mesh = voxprior::marching_cubes(grid->file.channel(channel), iso);
    *out = m.release();
  });
}

vp_status vp_mesh_read_obj(const char* path, vp_mesh** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    auto m = std::make_unique<vp_mesh>();
    m->mesh = voxprior::read_obj(std::string(path));
    *out = m.release();
  });
}

vp_status vp_mesh_write_obj(const vp_mesh* mesh, const char* path) {
  return guarded([&] {
    require(mesh != nullptr && path != nullptr, "null argument");
    voxprior::write_obj(std::string(path), mesh->mesh);
  });
}

size_t vp_mesh_vertex_count(const vp_mesh* mesh) {
  return mesh != nullptr ? mesh->mesh.vertices.size() : 0;
}

size_t vp_mesh_triangle_count(const vp_mesh* mesh) {
  return mesh != nullptr ? mesh->mesh.triangles.size() : 0;
}

void vp_mesh_destroy(vp_mesh* mesh) { delete mesh; }

vp_status vp_mesh_sample(const vp_mesh* mesh, int32_t n, uint64_t seed, double* out) {
  return guarded([&] {
    require(mesh != nullptr && out != nullptr, "null argument");
    const auto pts = voxprior::surface_sample(mesh->mesh, n, seed);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out[3 * i] = pts[i].x();
      out[3 * i + 1] = pts[i].y();
      out[3 * i + 2] = pts[i].z();
    }
  });
}

vp_status vp_chamfer_points(const double* a, size_t na, const double* b, size_t nb,
                            double* out) {
  return guarded([&] {
    require(out != nullptr, "output is null");
    *out = voxprior::chamfer_distance(unpack(a, na), unpack(b, nb));
  });
}

vp_status vp_mesh_chamfer(const vp_mesh* a, const vp_mesh* b, int32_t samples, uint64_t seed,
                          double* out) {
  return guarded([&] {
    require(a != nullptr && b != nullptr && out != nullptr, "null argument");
    const auto pa = voxprior::surface_sample(a->mesh, samples, seed);
    const auto pb = voxprior::surface_sample(b->mesh, samples, seed);
    *out = voxprior::chamfer_distance(pa, pb);
  });
}

vp_status vp_resolve_overlaps(const vp_grid* const* grids, size_t count, vp_grid** out) {
  return guarded([&] {
    require(out != nullptr && (grids != nullptr || count == 0), "null argument");
    std::vector<voxprior::BinaryGrid> masks;
    masks.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      require(grids[i] != nullptr, "grid is null");
      masks.push_back(grids[i]->file.mask(0));
      if (i > 0) voxprior::require_same_frame(masks[0].frame(), masks[i].frame());
    }
    const auto resolved = voxprior::resolve_overlaps(masks);
    std::vector<std::unique_ptr<vp_grid>> made;
    for (const auto& m : resolved) {
      auto g = std::make_unique<vp_grid>();
      g->file = voxprior::VoxelGridFile::from_grid(voxprior::to_prob(m));
      made.push_back(std::move(g));
    }
    for (std::size_t i = 0; i < made.size(); ++i) out[i] = made[i].release();
  });
}

}  // extern "C"
