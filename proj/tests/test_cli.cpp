#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "octforest/cli.hpp"
#include "octforest/lnodes.hpp"
#include "oracles.hpp"

using namespace octforest;

namespace {

std::string run_cmd(int (*cmd)(const RunConfig&, std::ostream&, std::ostream&),
                    const RunConfig& cfg) {
  std::ostringstream out, timing;
  int rc = cmd(cfg, out, timing);
  REQUIRE(rc == 0);
  return out.str();
}

RunConfig base_config() {
  RunConfig cfg;
  cfg.dim = 2;
  cfg.initial_level = 2;
  cfg.recipe = "fractal";
  cfg.recipe_depth = 2;
  cfg.seed = 23;
  cfg.ranks = 3;
  return cfg;
}

}  // namespace

TEST_CASE("every subcommand is deterministic across runs and schedules") {
  for (auto cmd : {cmd_mesh, cmd_search, cmd_ghost, cmd_iterate, cmd_lnodes, cmd_stats}) {
    RunConfig cfg = base_config();
    std::string a = run_cmd(cmd, cfg);
    std::string b = run_cmd(cmd, cfg);
    cfg.schedule = Schedule::threads;
    std::string c = run_cmd(cmd, cfg);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(!a.empty());
  }
}

TEST_CASE("mesh reports the trivial uniform count") {
  RunConfig cfg;
  cfg.dim = 2;
  cfg.initial_level = 2;
  cfg.recipe = "uniform";
  cfg.ranks = 1;
  std::string out = run_cmd(cmd_mesh, cfg);
  CHECK(out.find("\"N\": 16") != std::string::npos);
}

TEST_CASE("lnodes subcommand reproduces the closed form") {
  RunConfig cfg;
  cfg.dim = 3;
  cfg.initial_level = 2;
  cfg.recipe = "uniform";
  cfg.order = 1;
  cfg.ranks = 1;
  std::string out = run_cmd(cmd_lnodes, cfg);
  CHECK(out.find("\"num_global_nodes\": 125") != std::string::npos);
}

TEST_CASE("ghost subcommand reports empty layers for one rank") {
  RunConfig cfg;
  cfg.dim = 2;
  cfg.initial_level = 2;
  cfg.recipe = "uniform";
  cfg.ranks = 1;
  cfg.do_balance = false;
  std::string out = run_cmd(cmd_ghost, cfg);
  // every per-rank ghost count is zero
  CHECK(out.find("\"per_rank_ghosts\": [\n        0\n      ]") != std::string::npos);
}

TEST_CASE("vtk export has the legacy unstructured-grid structure") {
  Dimension dm = Dimension::make(2, 3);
  auto conn = std::make_shared<const Connectivity>(build_unitcube(dm));
  Forest f = new_uniform(conn, 1, 0, 1);
  std::string vtk = vtk_unstructured({f}, identity_geometry());
  CHECK(vtk.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
  CHECK(vtk.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(vtk.find("POINTS 16 double") != std::string::npos);
  CHECK(vtk.find("CELLS 4 20") != std::string::npos);
  CHECK(vtk.find("CELL_TYPES 4") != std::string::npos);
  CHECK(vtk.find("\n8\n") != std::string::npos);  // VTK_PIXEL
  CHECK(vtk.find("SCALARS rank int 1") != std::string::npos);
  CHECK(vtk.find("SCALARS level int 1") != std::string::npos);

  Dimension dm3 = Dimension::make(3, 2);
  auto conn3 = std::make_shared<const Connectivity>(build_unitcube(dm3));
  Forest f3 = new_uniform(conn3, 1, 0, 1);
  std::string vtk3 = vtk_unstructured({f3}, identity_geometry());
  CHECK(vtk3.find("CELL_TYPES 8") != std::string::npos);
  CHECK(vtk3.find("\n11\n") != std::string::npos);  // VTK_VOXEL
}

TEST_CASE("warp geometry inverts exactly") {
  RunConfig cfg;
  cfg.dim = 2;
  cfg.connectivity = "brick";
  cfg.brick_m = 2;
  cfg.brick_n = 1;
  cfg.warp = 0.35;
  GeometryMap geom = warp_geometry(cfg);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    uint32_t tree = uint32_t(rng.below(2));
    std::array<double, 3> ref{rng.unit(), rng.unit(), 0.0};
    auto phys = geom(tree, ref);
    auto back = warp_inverse(cfg, phys);
    double gx = double(tree % 2) + ref[0];
    double gy = ref[1];
    CHECK(std::abs(back[0] - gx) < 1e-9);
    CHECK(std::abs(back[1] - gy) < 1e-9);
  }
}

TEST_CASE("search subcommand finds every point once in both modes") {
  RunConfig cfg = base_config();
  cfg.num_points = 300;
  cfg.warp = 0.25;
  std::string out = run_cmd(cmd_search, cfg);
  CHECK(out.find("\"found_batched\": 300") != std::string::npos);
  CHECK(out.find("\"found_single\": 300") != std::string::npos);
}
