#include <iostream>

#include "CLI11.hpp"
#include "octforest/cli.hpp"

namespace {

void add_common(CLI::App* sub, octforest::RunConfig& cfg, std::string& conn_spec,
                std::string& schedule) {
  sub->add_option("--dim", cfg.dim, "dimension (2 or 3)")->check(CLI::IsMember({2, 3}));
  sub->add_option("--lmax", cfg.lmax, "maximum refinement level override");
  sub->add_option("--conn", conn_spec,
                  "connectivity: unitcube | brick:MxN[xP][:px][:py][:pz]");
  sub->add_option("--level", cfg.initial_level, "initial uniform level");
  sub->add_option("--recipe", cfg.recipe, "refinement recipe: uniform | fractal | corner")
      ->check(CLI::IsMember({"uniform", "fractal", "corner"}));
  sub->add_option("--depth", cfg.recipe_depth, "recipe refinement depth");
  sub->add_option("--seed", cfg.seed, "random seed");
  sub->add_option("--ranks", cfg.ranks, "number of simulated ranks")->check(CLI::PositiveNumber);
  sub->add_option("--schedule", schedule, "rank scheduling: roundrobin | threads")
      ->check(CLI::IsMember({"roundrobin", "threads"}));
  sub->add_option("--out", cfg.out_dir, "output directory for exported files");
  sub->add_flag_callback("--no-balance", [&cfg]() { cfg.do_balance = false; },
                         "skip the 2:1 balance step");
  sub->add_flag("--dump", cfg.dump, "write detailed dumps");
  sub->add_flag("--trace", cfg.trace, "dump the transport trace (ghost, lnodes)");
}

bool parse_conn(const std::string& spec, octforest::RunConfig& cfg) {
  if (spec == "unitcube") {
    cfg.connectivity = "unitcube";
    return true;
  }
  if (spec.rfind("brick:", 0) != 0) return false;
  cfg.connectivity = "brick";
  std::string rest = spec.substr(6);
  // MxN[xP], then optional :px :py :pz periodicity flags
  size_t colon = rest.find(':');
  std::string dims = colon == std::string::npos ? rest : rest.substr(0, colon);
  std::string flags = colon == std::string::npos ? "" : rest.substr(colon + 1);
  int vals[3] = {1, 1, 1};
  int nv = 0;
  size_t pos = 0;
  while (pos < dims.size() && nv < 3) {
    size_t x = dims.find('x', pos);
    std::string tok = dims.substr(pos, x == std::string::npos ? std::string::npos : x - pos);
    try {
      vals[nv++] = std::stoi(tok);
    } catch (...) {
      return false;
    }
    if (x == std::string::npos) break;
    pos = x + 1;
  }
  if (nv < 2) return false;
  cfg.brick_m = vals[0];
  cfg.brick_n = vals[1];
  cfg.brick_p = vals[2];
  for (char c : flags) {
    if (c == 'x') cfg.periodic[0] = true;
    if (c == 'y') cfg.periodic[1] = true;
    if (c == 'z') cfg.periodic[2] = true;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"batch driver for the octforest AMR library"};
  app.require_subcommand(1);

  octforest::RunConfig cfg;
  std::string conn_spec = "unitcube";
  std::string schedule = "roundrobin";

  CLI::App* mesh = app.add_subcommand("mesh", "build, balance and export a forest");
  CLI::App* search = app.add_subcommand("search", "point-location demo, batched vs single");
  search->add_option("--points", cfg.num_points, "number of query points");
  search->add_option("--warp", cfg.warp, "geometry distortion amplitude in [0,1)");
  CLI::App* ghost = app.add_subcommand("ghost", "ghost layers of a random-refined forest");
  ghost->add_option("--codim", cfg.ghost_codim, "single codimension (default: all)");
  CLI::App* iterate = app.add_subcommand("iterate", "visit counts of the topology iterator");
  iterate->add_option("--mode", cfg.iterate_mode, "relevance mode: open | closed")
      ->check(CLI::IsMember({"open", "closed"}));
  CLI::App* lnodes = app.add_subcommand("lnodes", "global node numbering");
  lnodes->add_option("--order,-n", cfg.order, "polynomial order")->check(CLI::PositiveNumber);
  CLI::App* stats = app.add_subcommand("stats", "mesh and ghost statistics");

  for (CLI::App* sub : {mesh, search, ghost, iterate, lnodes, stats}) {
    add_common(sub, cfg, conn_spec, schedule);
  }

  CLI11_PARSE(app, argc, argv);

  if (!parse_conn(conn_spec, cfg)) {
    std::cerr << "invalid connectivity spec: " << conn_spec << "\n";
    return 2;
  }
  cfg.schedule = schedule == "threads" ? octforest::Schedule::threads
                                       : octforest::Schedule::roundrobin;
  try {
    if (app.got_subcommand(mesh)) return octforest::cmd_mesh(cfg, std::cout, std::cerr);
    if (app.got_subcommand(search)) return octforest::cmd_search(cfg, std::cout, std::cerr);
    if (app.got_subcommand(ghost)) return octforest::cmd_ghost(cfg, std::cout, std::cerr);
    if (app.got_subcommand(iterate)) return octforest::cmd_iterate(cfg, std::cout, std::cerr);
    if (app.got_subcommand(lnodes)) return octforest::cmd_lnodes(cfg, std::cout, std::cerr);
    if (app.got_subcommand(stats)) return octforest::cmd_stats(cfg, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
