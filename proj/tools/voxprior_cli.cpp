// SPDX-License-Identifier: Apache-2.0

// voxprior: command-line front end to libvoxprior.
//
// Exit codes: 0 success, 2 malformed input (bad flags, unreadable or
// inconsistent files), 3 semantic error (unknown/empty object, empty shape,
// ...). Diagnostics go to stderr as "error: <kind>: <message>".

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "voxprior/voxprior.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMalformed = 2;
constexpr int kExitSemantic = 3;

struct Failure {
  int exit_code;
  std::string kind;
  std::string message;
};

int exit_code_for(vp_status s) {
  switch (s) {
    case VP_OK: return kExitOk;
    case VP_ERROR_INVALID_ARGUMENT:
    case VP_ERROR_MALFORMED_INPUT:
    case VP_ERROR_IO:
    case VP_ERROR_FRAME_MISMATCH: return kExitMalformed;
    case VP_ERROR_INTERNAL: return 1;
    default: return kExitSemantic;
  }
}

void check(vp_status s) {
  if (s != VP_OK) throw Failure{exit_code_for(s), vp_status_name(s), vp_last_error()};
}

struct GridDeleter {
  void operator()(vp_grid* g) const { vp_grid_destroy(g); }
};
struct MeshDeleter {
  void operator()(vp_mesh* m) const { vp_mesh_destroy(m); }
};
using Grid = std::unique_ptr<vp_grid, GridDeleter>;
using Mesh = std::unique_ptr<vp_mesh, MeshDeleter>;

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Grid read_grid(const std::string& path) {
  vp_grid* g = nullptr;
  check(vp_grid_read(path.c_str(), &g));
  return Grid(g);
}

int32_t channel_count(const vp_grid* g) {
  int32_t c = 0;
  check(vp_grid_info(g, nullptr, &c, nullptr, nullptr));
  return c;
}

// Channel `c` of the file at `path` as a single-channel grid.
Grid read_channel(const std::string& path, int c) {
  Grid g = read_grid(path);
  if (channel_count(g.get()) == 1 && c == 0) return g;
  vp_grid* out = nullptr;
  check(vp_grid_extract_channel(g.get(), c, &out));
  return Grid(out);
}

Mesh read_mesh(const std::string& path) {
  vp_mesh* m = nullptr;
  check(vp_mesh_read_obj(path.c_str(), &m));
  return Mesh(m);
}

// ---- build-rep -------------------------------------------------------------

struct BuildRepArgs {
  std::string scene, out;
  int object = 0;
  int dim = 128;
  double k = 4.0;
};

void cmd_build_rep(const BuildRepArgs& a) {
  if (a.object < 0 || a.object > 65535) {
    throw Failure{kExitMalformed, "invalid_argument", "--object must be in [0, 65535]"};
  }
  vp_scene* raw = nullptr;
  check(vp_scene_load(a.scene.c_str(), &raw));
  std::unique_ptr<vp_scene, void (*)(vp_scene*)> scene(raw, vp_scene_destroy);
  vp_grid* g = nullptr;
  check(vp_build_representation(scene.get(), static_cast<uint16_t>(a.object), a.dim, a.k, &g));
  Grid grid(g);
  check(vp_grid_write(grid.get(), a.out.c_str()));
}

// ---- loss ------------------------------------------------------------------

struct LossArgs {
  std::string grid, others, which = "both";
  int channel = 0;
  int others_channel = 0;
  bool json = false;
  int directions = 25;
  int coarsen = 8;
};

void cmd_loss(const LossArgs& a) {
  const Grid grid = read_channel(a.grid, a.channel);
  Grid others;
  if (!a.others.empty()) others = read_channel(a.others, a.others_channel);

  vp_stability_params sp;
  vp_stability_params_default(&sp);
  sp.n_directions = a.directions;
  vp_connectivity_params cp;
  vp_connectivity_params_default(&cp);
  cp.coarsen_factor = a.coarsen;

  std::optional<double> stab, conn;
  if (a.which != "connectivity") {
    double v = 0.0;
    check(vp_stability_log_prob(grid.get(), others.get(), &sp, &v));
    stab = v;
  }
  if (a.which != "stability") {
    double v = 0.0;
    check(vp_connectivity_log_prob(grid.get(), &cp, &v));
    conn = v;
  }

  if (a.json) {
    nlohmann::json j = nlohmann::json::object();
    if (stab) j["stability_logp"] = *stab;
    if (conn) j["connectivity_logp"] = *conn;
    std::cout << j.dump() << '\n';
  } else {
    if (stab) std::cout << "stability_logp " << num(*stab) << '\n';
    if (conn) std::cout << "connectivity_logp " << num(*conn) << '\n';
  }
}

// ---- refine ----------------------------------------------------------------

struct RefineArgs {
  std::string grid, occluded, others, out, report;
  int channel = 0;
  int occluded_channel = -1;  // last channel
  int others_channel = 0;
  int steps = 50;
  double step_size = 0.1;
  double w_stability = 1.0;
  double w_connectivity = 1.0;
  int directions = 25;
  int coarsen = 8;
};

void cmd_refine(const RefineArgs& a) {
  const Grid grid = read_channel(a.grid, a.channel);
  const Grid occluded = read_grid(a.occluded);
  Grid others;
  if (!a.others.empty()) others = read_channel(a.others, a.others_channel);
  const int occ_channel =
      a.occluded_channel >= 0 ? a.occluded_channel : channel_count(occluded.get()) - 1;

  vp_refine_params p;
  vp_refine_params_default(&p);
  p.iterations = a.steps;
  p.step = a.step_size;
  p.w_stability = a.w_stability;
  p.w_connectivity = a.w_connectivity;
  p.stability.n_directions = a.directions;
  p.connectivity.coarsen_factor = a.coarsen;

  vp_grid* out = nullptr;
  vp_refine_report* raw_report = nullptr;
  check(vp_refine(grid.get(), occluded.get(), occ_channel, others.get(), &p, &out, &raw_report));
  const Grid refined(out);
  std::unique_ptr<vp_refine_report, void (*)(vp_refine_report*)> report(raw_report,
                                                                         vp_refine_report_destroy);
  check(vp_grid_write(refined.get(), a.out.c_str()));
  if (!a.report.empty()) {
    std::ofstream f(a.report, std::ios::binary);
    f << vp_refine_report_json(report.get()) << '\n';
    if (!f) throw Failure{kExitMalformed, "io", "cannot write report '" + a.report + "'"};
  }
}

// ---- mesh / chamfer / stability-check ------------------------------------

struct MeshArgs {
  std::string grid, out;
  int channel = 0;
  double iso = 0.5;
};

void cmd_mesh(const MeshArgs& a) {
  const Grid grid = read_grid(a.grid);
  vp_mesh* m = nullptr;
  check(vp_marching_cubes(grid.get(), a.channel, a.iso, &m));
  const Mesh mesh(m);
  check(vp_mesh_write_obj(mesh.get(), a.out.c_str()));
}

struct ChamferArgs {
  std::string mesh_a, mesh_b;
  int samples = 10000;
  uint64_t seed = 0;
};

void cmd_chamfer(const ChamferArgs& a) {
  const Mesh ma = read_mesh(a.mesh_a);
  const Mesh mb = read_mesh(a.mesh_b);
  double d = 0.0;
  check(vp_mesh_chamfer(ma.get(), mb.get(), a.samples, a.seed, &d));
  std::cout << num(d) << '\n';
}

struct CheckArgs {
  std::string grid, others;
  int channel = 0;
  int others_channel = 0;
  int directions = 25;
};

void cmd_stability_check(const CheckArgs& a) {
  const Grid grid = read_channel(a.grid, a.channel);
  Grid others;
  if (!a.others.empty()) others = read_channel(a.others, a.others_channel);
  vp_stability_params sp;
  vp_stability_params_default(&sp);
  sp.n_directions = a.directions;
  vp_equilibrium* raw = nullptr;
  check(vp_check_equilibrium(grid.get(), others.get(), &sp, &raw));
  std::unique_ptr<vp_equilibrium, void (*)(vp_equilibrium*)> eq(raw, vp_equilibrium_destroy);
  if (vp_equilibrium_stable(eq.get())) {
    std::cout << "stable\n";
    return;
  }
  std::cout << "unstable\n";
  for (size_t i = 0; i < vp_equilibrium_failing_count(eq.get()); ++i) {
    int32_t index = 0;
    double s[3];
    check(vp_equilibrium_failing(eq.get(), i, &index, s));
    std::cout << "failing_direction " << index << ' ' << num(s[0]) << ' ' << num(s[1]) << ' '
              << num(s[2]) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physical shape priors over voxel occupancy grids", "voxprior"};
  app.require_subcommand(1);

  BuildRepArgs br;
  auto* build = app.add_subcommand("build-rep", "Four-channel grid for one object of a scene");
  build->add_option("--scene", br.scene, "Scene manifest (JSON)")->required();
  build->add_option("--object", br.object, "Object label id")->required();
  build->add_option("--dim", br.dim, "Voxels per axis")->capture_default_str();
  build->add_option("--k", br.k, "Grid side over object extent")->capture_default_str();
  build->add_option("--out", br.out, "Output grid")->required();

  LossArgs la;
  auto* loss = app.add_subcommand("loss", "Stability and connectivity log-probabilities");
  loss->add_option("--grid", la.grid, "Object grid")->required();
  loss->add_option("--channel", la.channel, "Channel of --grid")->capture_default_str();
  loss->add_option("--others", la.others, "Union of the other objects");
  loss->add_option("--others-channel", la.others_channel)->capture_default_str();
  loss->add_option("--which", la.which)
      ->check(CLI::IsMember({"stability", "connectivity", "both"}))
      ->capture_default_str();
  loss->add_flag("--json", la.json, "Emit a JSON object");
  loss->add_option("--directions", la.directions, "Push directions")->capture_default_str();
  loss->add_option("--coarsen", la.coarsen, "Connectivity coarsening factor")
      ->capture_default_str();

  RefineArgs ra;
  auto* refine = app.add_subcommand("refine", "Refine occluded voxels under both priors");
  refine->add_option("--grid", ra.grid, "Object grid")->required();
  refine->add_option("--channel", ra.channel, "Channel of --grid")->capture_default_str();
  refine->add_option("--occluded", ra.occluded, "Grid whose channel marks writable voxels")
      ->required();
  refine->add_option("--occluded-channel", ra.occluded_channel, "Default: last channel");
  refine->add_option("--others", ra.others, "Union of the other objects");
  refine->add_option("--others-channel", ra.others_channel)->capture_default_str();
  refine->add_option("--steps", ra.steps, "Iterations")->capture_default_str();
  refine->add_option("--step-size", ra.step_size)->capture_default_str();
  refine->add_option("--w-stability", ra.w_stability)->capture_default_str();
  refine->add_option("--w-connectivity", ra.w_connectivity)->capture_default_str();
  refine->add_option("--directions", ra.directions)->capture_default_str();
  refine->add_option("--coarsen", ra.coarsen)->capture_default_str();
  refine->add_option("--out", ra.out, "Refined grid")->required();
  refine->add_option("--report", ra.report, "JSON report");

  MeshArgs ma;
  auto* mesh = app.add_subcommand("mesh", "Extract the iso-surface as OBJ");
  mesh->add_option("--grid", ma.grid)->required();
  mesh->add_option("--channel", ma.channel)->capture_default_str();
  mesh->add_option("--iso", ma.iso)->capture_default_str();
  mesh->add_option("--out", ma.out)->required();

  ChamferArgs ca;
  auto* chamfer = app.add_subcommand("chamfer", "Chamfer distance between two meshes (meters)");
  chamfer->add_option("--mesh-a", ca.mesh_a)->required();
  chamfer->add_option("--mesh-b", ca.mesh_b)->required();
  chamfer->add_option("--samples", ca.samples)->capture_default_str();
  chamfer->add_option("--seed", ca.seed)->capture_default_str();

  CheckArgs ka;
  auto* stab = app.add_subcommand("stability-check", "Binary static-equilibrium test");
  stab->add_option("--grid", ka.grid)->required();
  stab->add_option("--channel", ka.channel)->capture_default_str();
  stab->add_option("--others", ka.others);
  stab->add_option("--others-channel", ka.others_channel)->capture_default_str();
  stab->add_option("--directions", ka.directions)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return kExitMalformed;
  }

  try {
    if (*build) cmd_build_rep(br);
    else if (*loss) cmd_loss(la);
    else if (*refine) cmd_refine(ra);
    else if (*mesh) cmd_mesh(ma);
    else if (*chamfer) cmd_chamfer(ca);
    else if (*stab) cmd_stability_check(ka);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.kind << ": " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
