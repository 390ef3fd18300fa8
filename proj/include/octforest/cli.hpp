#ifndef OCTFOREST_CLI_HPP
#define OCTFOREST_CLI_HPP

#include <iosfwd>
#include <string>

#include "octforest/forest.hpp"
#include "octforest/vtk.hpp"

namespace octforest {

/// Everything that determines a batch run; identical configs produce
/// byte-identical outputs.
struct RunConfig {
  int dim = 2;
  int lmax = -1;  // default per dimension
  // connectivity: unitcube or an m x n (x p) brick with periodic flags
  std::string connectivity = "unitcube";
  int brick_m = 1, brick_n = 1, brick_p = 1;
  std::array<bool, 3> periodic{false, false, false};
  // refinement recipe
  int initial_level = 1;
  std::string recipe = "uniform";  // uniform | fractal | corner
  int recipe_depth = 0;
  uint64_t seed = 1;
  bool do_balance = true;
  // harness
  int ranks = 1;
  Schedule schedule = Schedule::roundrobin;
  // subcommand options
  int ghost_codim = 0;  // 0 = every codimension 1..d
  int order = 1;        // lnodes order
  int num_points = 1024;
  double warp = 0.0;
  std::string iterate_mode = "open";
  bool dump = false;
  bool trace = false;  // dump the transport trace of the main collective
  std::string out_dir;
};

/// Per-axis smooth distortion of the brick domain with a closed-form
/// inverse; warp = 0 is the brick embedding itself.
GeometryMap warp_geometry(const RunConfig& cfg);

/// Exact inverse of warp_geometry (physical point to global reference
/// coordinates in tree units).
std::array<double, 3> warp_inverse(const RunConfig& cfg, const std::array<double, 3>& x);

/// Build the config's forest on one rank of the group (refine, partition,
/// optionally balance).
Forest build_config_forest(const RunConfig& cfg, std::shared_ptr<const Connectivity> conn,
                           Comm& comm);
std::shared_ptr<const Connectivity> build_config_connectivity(const RunConfig& cfg);

// Subcommands; each writes a deterministic JSON report to `out` (and files
// under cfg.out_dir when set) and returns a process exit code.  Wall times
// go to `timing` and never enter the hashed output.
int cmd_mesh(const RunConfig& cfg, std::ostream& out, std::ostream& timing);
int cmd_search(const RunConfig& cfg, std::ostream& out, std::ostream& timing);
int cmd_ghost(const RunConfig& cfg, std::ostream& out, std::ostream& timing);
int cmd_iterate(const RunConfig& cfg, std::ostream& out, std::ostream& timing);
int cmd_lnodes(const RunConfig& cfg, std::ostream& out, std::ostream& timing);
int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& timing);

}  // namespace octforest

#endif
