/* SPDX-License-Identifier: Apache-2.0 */

/*
 * C interface to libvoxprior.
 *
 * Every object is an opaque handle created by a vp_*_create/_read/_load or an
 * operation with an `out` parameter, and released with the matching
 * vp_*_destroy. Functions returning vp_status leave a human readable message
 * retrievable with vp_last_error() on the calling thread when they fail.
 * Outputs are written only on success.
 *
 * Grids hold one or more float32 channels, channel-major with x fastest
 * (index = x + dx * (y + dy * z)). Objective functions read channel 0 and
 * reject multi-channel grids; use vp_grid_extract_channel first.
 */

#ifndef VOXPRIOR_H
#define VOXPRIOR_H

#include <stddef.h>
#include <stdint.h>

#if defined(VOXPRIOR_BUILDING_LIBRARY)
#define VOXPRIOR_API __attribute__((visibility("default")))
#else
#define VOXPRIOR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vp_status {
  VP_OK = 0,
  VP_ERROR_INVALID_ARGUMENT = 1,
  VP_ERROR_MALFORMED_INPUT = 2,
  VP_ERROR_IO = 3,
  VP_ERROR_FRAME_MISMATCH = 4,
  VP_ERROR_ZERO_MASS = 5,
  VP_ERROR_EMPTY_OBJECT = 6,
  VP_ERROR_UNKNOWN_OBJECT = 7,
  VP_ERROR_NO_BACKGROUND = 8,
  VP_ERROR_NO_ANCHORS = 9,
  VP_ERROR_UNREACHABLE = 10,
  VP_ERROR_EMPTY_SHAPE = 11,
  VP_ERROR_EMPTY_MESH = 12,
  VP_ERROR_EMPTY_SET = 13,
  VP_ERROR_INTERNAL = 99
} vp_status;

typedef struct vp_grid vp_grid;
typedef struct vp_scene vp_scene;
typedef struct vp_mesh vp_mesh;
typedef struct vp_equilibrium vp_equilibrium;
typedef struct vp_refine_report vp_refine_report;

VOXPRIOR_API const char* vp_version(void);
VOXPRIOR_API const char* vp_status_name(vp_status status);
/* Message of the most recent failure on this thread; "" if none. */
VOXPRIOR_API const char* vp_last_error(void);

/* ---- grids ------------------------------------------------------------- */

VOXPRIOR_API vp_status vp_grid_create(const int32_t dims[3], int32_t channels, double voxel_size,
                                      const double origin[3], vp_grid** out);
VOXPRIOR_API vp_status vp_grid_read(const char* path, vp_grid** out);
VOXPRIOR_API vp_status vp_grid_write(const vp_grid* grid, const char* path);
VOXPRIOR_API vp_status vp_grid_clone(const vp_grid* grid, vp_grid** out);
VOXPRIOR_API void vp_grid_destroy(vp_grid* grid);

VOXPRIOR_API vp_status vp_grid_info(const vp_grid* grid, int32_t dims[3], int32_t* channels,
                                    double* voxel_size, double origin[3]);
/* channels * dx * dy * dz floats, valid until the grid is destroyed. */
VOXPRIOR_API float* vp_grid_data(vp_grid* grid);
VOXPRIOR_API const float* vp_grid_data_const(const vp_grid* grid);
VOXPRIOR_API size_t vp_grid_value_count(const vp_grid* grid);
VOXPRIOR_API vp_status vp_grid_extract_channel(const vp_grid* grid, int32_t channel, vp_grid** out);

/* Header metadata ("meta" object of the file). Strings stay valid until the
 * grid is modified or destroyed. */
VOXPRIOR_API vp_status vp_grid_meta_number(const vp_grid* grid, const char* key, double* out);
VOXPRIOR_API vp_status vp_grid_meta_string(const vp_grid* grid, const char* key, const char** out);
VOXPRIOR_API vp_status vp_grid_set_meta_number(vp_grid* grid, const char* key, double value);

/* ---- scenes ------------------------------------------------------------ */

VOXPRIOR_API vp_status vp_scene_load(const char* manifest_path, vp_scene** out);
VOXPRIOR_API void vp_scene_destroy(vp_scene* scene);

/* Four-channel grid (object, other objects, observed empty, unobserved) of
 * side k times the object's extent with `dim` voxels per axis. */
VOXPRIOR_API vp_status vp_build_representation(const vp_scene* scene, uint16_t object_id,
                                               int32_t dim, double k, vp_grid** out);

/* ---- objectives -------------------------------------------------------- */

typedef struct vp_stability_params {
  int32_t n_directions;     /* 25 */
  double prob_clamp;        /* 1e-6 */
  int32_t step_cdf;         /* 0: normal approximation, 1: sign of the mean */
  int32_t opposite_lateral; /* 0 */
} vp_stability_params;

typedef struct vp_connectivity_params {
  int32_t coarsen_factor;  /* 8 */
  double anchor_threshold; /* 0.5 */
  double prob_clamp;       /* 1e-6 */
  int32_t all_pairs;       /* 0 */
} vp_connectivity_params;

VOXPRIOR_API void vp_stability_params_default(vp_stability_params* params);
VOXPRIOR_API void vp_connectivity_params_default(vp_connectivity_params* params);

/* `others` may be NULL for an empty scene. `params` may be NULL for defaults. */
VOXPRIOR_API vp_status vp_stability_log_prob(const vp_grid* object, const vp_grid* others,
                                             const vp_stability_params* params, double* out);
/* `out` receives one value per voxel; `count` must equal the voxel count. */
VOXPRIOR_API vp_status vp_stability_gradient(const vp_grid* object, const vp_grid* others,
                                             const vp_stability_params* params, double* out,
                                             size_t count);
VOXPRIOR_API vp_status vp_connectivity_log_prob(const vp_grid* grid,
                                                const vp_connectivity_params* params, double* out);
VOXPRIOR_API vp_status vp_connectivity_gradient(const vp_grid* grid, const vp_grid* occluded,
                                                const vp_connectivity_params* params, double* out,
                                                size_t count);

/* Binarizes both grids at 0.5 and runs the static-equilibrium test. */
VOXPRIOR_API vp_status vp_check_equilibrium(const vp_grid* object, const vp_grid* others,
                                            const vp_stability_params* params,
                                            vp_equilibrium** out);
VOXPRIOR_API int32_t vp_equilibrium_stable(const vp_equilibrium* eq);
VOXPRIOR_API size_t vp_equilibrium_failing_count(const vp_equilibrium* eq);
VOXPRIOR_API vp_status vp_equilibrium_failing(const vp_equilibrium* eq, size_t i, int32_t* index,
                                              double direction[3]);
VOXPRIOR_API void vp_equilibrium_destroy(vp_equilibrium* eq);

/* ---- refinement -------------------------------------------------------- */

typedef struct vp_refine_params {
  double step;           /* 0.1 */
  int32_t iterations;    /* 50 */
  double w_stability;    /* 1 */
  double w_connectivity; /* 1 */
  double clamp_lo;       /* 1e-4 */
  double clamp_hi;       /* 1 - 1e-4 */
  double stop_tol;       /* 1e-5 */
  int32_t max_halvings;  /* 5 */
  vp_stability_params stability;
  vp_connectivity_params connectivity;
} vp_refine_params;

VOXPRIOR_API void vp_refine_params_default(vp_refine_params* params);

/* Voxels with occluded[channel] >= 0.5 are writable. `others` may be NULL. */
VOXPRIOR_API vp_status vp_refine(const vp_grid* object, const vp_grid* occluded,
                                 int32_t occluded_channel, const vp_grid* others,
                                 const vp_refine_params* params, vp_grid** out,
                                 vp_refine_report** report);
VOXPRIOR_API size_t vp_refine_report_iterations(const vp_refine_report* report);
VOXPRIOR_API int32_t vp_refine_report_stable(const vp_refine_report* report);
VOXPRIOR_API int32_t vp_refine_report_components(const vp_refine_report* report);
/* JSON document, valid until the report is destroyed. */
VOXPRIOR_API const char* vp_refine_report_json(const vp_refine_report* report);
VOXPRIOR_API void vp_refine_report_destroy(vp_refine_report* report);

/* ---- meshing ----------------------------------------------------------- */

VOXPRIOR_API vp_status vp_marching_cubes(const vp_grid* grid, int32_t channel, double iso,
                                         vp_mesh** out);
VOXPRIOR_API vp_status vp_mesh_read_obj(const char* path, vp_mesh** out);
VOXPRIOR_API vp_status vp_mesh_write_obj(const vp_mesh* mesh, const char* path);
VOXPRIOR_API size_t vp_mesh_vertex_count(const vp_mesh* mesh);
VOXPRIOR_API size_t vp_mesh_triangle_count(const vp_mesh* mesh);
VOXPRIOR_API void vp_mesh_destroy(vp_mesh* mesh);

/* Writes 3 * n doubles (x, y, z per sample). */
VOXPRIOR_API vp_status vp_mesh_sample(const vp_mesh* mesh, int32_t n, uint64_t seed, double* out);
/* Points are packed xyz triples. */
VOXPRIOR_API vp_status vp_chamfer_points(const double* a, size_t na, const double* b, size_t nb,
                                         double* out);
/* Chamfer distance between `samples` area-uniform points of each mesh. */
VOXPRIOR_API vp_status vp_mesh_chamfer(const vp_mesh* a, const vp_mesh* b, int32_t samples,
                                       uint64_t seed, double* out);

/* Channel 0 of every input, binarized at 0.5, made pairwise disjoint. `out`
 * receives `count` new single-channel grids. */
VOXPRIOR_API vp_status vp_resolve_overlaps(const vp_grid* const* grids, size_t count,
                                           vp_grid** out);

#ifdef __cplusplus
}
#endif

#endif /* VOXPRIOR_H */
