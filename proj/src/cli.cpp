#include "octforest/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "octforest/ghost.hpp"
#include "octforest/iterate.hpp"
#include "octforest/lnodes.hpp"
#include "octforest/search.hpp"

namespace octforest {

namespace {

using nlohmann::ordered_json;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

bool recipe_refine(const RunConfig& cfg, const Octant& o) {
  if (o.level >= cfg.initial_level + cfg.recipe_depth) return false;
  if (cfg.recipe == "corner") {
    if (o.tree != 0) return false;
    for (int j = 0; j < 3; ++j) {
      if (o.x[size_t(j)] != 0) return false;
    }
    return true;
  }
  if (cfg.recipe == "fractal") {
    uint64_t h = cfg.seed;
    h = hash_combine(h, o.tree);
    h = hash_combine(h, uint64_t(o.level));
    for (uint64_t c : o.x) h = hash_combine(h, c);
    return mix64(h) % 3 == 0;
  }
  return false;  // uniform
}

void write_file(const RunConfig& cfg, const std::string& name, const std::string& content) {
  if (cfg.out_dir.empty()) return;
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream f(cfg.out_dir + "/" + name, std::ios::binary);
  f << content;
}

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j;
  j["dim"] = cfg.dim;
  j["connectivity"] = cfg.connectivity;
  if (cfg.connectivity == "brick") {
    j["brick"] = {cfg.brick_m, cfg.brick_n, cfg.brick_p};
    j["periodic"] = {cfg.periodic[0], cfg.periodic[1], cfg.periodic[2]};
  }
  j["level"] = cfg.initial_level;
  j["recipe"] = cfg.recipe;
  j["depth"] = cfg.recipe_depth;
  j["seed"] = cfg.seed;
  j["ranks"] = cfg.ranks;
  j["balance"] = cfg.do_balance;
  return j;
}

ordered_json level_histogram(const std::vector<Forest>& forests) {
  std::map<int, uint64_t> hist;
  for (const Forest& f : forests) {
    for (const auto& tree : f.leaves) {
      for (const Octant& o : tree) hist[o.level]++;
    }
  }
  ordered_json j = ordered_json::object();
  for (const auto& [lvl, count] : hist) j[std::to_string(lvl)] = count;
  return j;
}

struct BuiltForests {
  std::shared_ptr<const Connectivity> conn;
  std::vector<Forest> forests;
};

BuiltForests build_all(const RunConfig& cfg) {
  BuiltForests out;
  out.conn = build_config_connectivity(cfg);
  out.forests.resize(size_t(cfg.ranks), Forest{});
  run_ranks(cfg.ranks, cfg.schedule, [&](Comm& c) {
    out.forests[size_t(c.rank())] = build_config_forest(cfg, out.conn, c);
  });
  return out;
}

}  // namespace

std::shared_ptr<const Connectivity> build_config_connectivity(const RunConfig& cfg) {
  Dimension dm = Dimension::make(cfg.dim, cfg.lmax);
  if (cfg.connectivity == "unitcube") {
    return std::make_shared<const Connectivity>(build_unitcube(dm));
  }
  OF_CHECK(cfg.connectivity == "brick");
  return std::make_shared<const Connectivity>(
      build_brick(dm, cfg.brick_m, cfg.brick_n, cfg.brick_p, cfg.periodic));
}

Forest build_config_forest(const RunConfig& cfg, std::shared_ptr<const Connectivity> conn,
                           Comm& comm) {
  Forest f = new_uniform(conn, comm.size(), comm.rank(), cfg.initial_level);
  if (cfg.recipe != "uniform" && cfg.recipe_depth > 0) {
    refine(f, [&](const Octant& o) { return recipe_refine(cfg, o); }, true);
    partition_even(f, comm);
  }
  if (cfg.do_balance) {
    balance(f, comm);
    partition_even(f, comm);
  }
  return f;
}

GeometryMap warp_geometry(const RunConfig& cfg) {
  double a = cfg.warp;
  int ext[3] = {cfg.connectivity == "brick" ? cfg.brick_m : 1,
                cfg.connectivity == "brick" ? cfg.brick_n : 1,
                cfg.connectivity == "brick" ? cfg.brick_p : 1};
  int m = ext[0], n = ext[1];
  return [a, m, n, e0 = double(ext[0]), e1 = double(ext[1]),
          e2 = double(ext[2])](uint32_t tree, std::array<double, 3> ref) {
    double org[3] = {double(tree % uint32_t(m)), double((tree / uint32_t(m)) % uint32_t(n)),
                     double(tree / uint32_t(m * n))};
    std::array<double, 3> u{org[0] + ref[0], org[1] + ref[1], org[2] + ref[2]};
    double ext3[3] = {e0, e1, e2};
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (int j = 0; j < 3; ++j) {
      double e = ext3[j];
      out[size_t(j)] = u[size_t(j)] + a * u[size_t(j)] * (e - u[size_t(j)]) / e;
    }
    return out;
  };
}

std::array<double, 3> warp_inverse(const RunConfig& cfg, const std::array<double, 3>& x) {
  double a = cfg.warp;
  int ext[3] = {cfg.connectivity == "brick" ? cfg.brick_m : 1,
                cfg.connectivity == "brick" ? cfg.brick_n : 1,
                cfg.connectivity == "brick" ? cfg.brick_p : 1};
  std::array<double, 3> u{0.0, 0.0, 0.0};
  for (int j = 0; j < 3; ++j) {
    double y = x[size_t(j)];
    if (a == 0.0) {
      u[size_t(j)] = y;
      continue;
    }
    // solve (a/e) u^2 - (1+a) u + y = 0 for the branch in [0, e]
    double e = double(ext[j]);
    double q = a / e;
    double disc = (1.0 + a) * (1.0 + a) - 4.0 * q * y;
    u[size_t(j)] = (1.0 + a - std::sqrt(std::max(0.0, disc))) / (2.0 * q);
  }
  return u;
}

int cmd_mesh(const RunConfig& cfg, std::ostream& out, std::ostream& timing) {
  auto t0 = std::chrono::steady_clock::now();
  BuiltForests built = build_all(cfg);
  ordered_json j;
  j["config"] = config_json(cfg);
  uint64_t total = 0;
  auto per_rank = ordered_json::array();
  for (const Forest& f : built.forests) {
    per_rank.push_back(f.num_local());
    total += f.num_local();
  }
  j["N"] = total;
  j["per_rank"] = per_rank;
  j["levels"] = level_histogram(built.forests);
  std::string vtk = vtk_unstructured(built.forests, warp_geometry(cfg));
  j["vtk_bytes"] = vtk.size();
  write_file(cfg, "mesh.vtk", vtk);
  std::string fj;
  for (const Forest& f : built.forests) fj += forest_to_json(f) + "\n";
  write_file(cfg, "forest.json", fj);
  write_file(cfg, "connectivity.json", to_json(*built.conn));
  out << j.dump(2) << "\n";
  timing << "mesh wall_ms=" << elapsed_ms(t0) << "\n";
  return 0;
}

int cmd_search(const RunConfig& cfg, std::ostream& out, std::ostream& timing) {
  auto t0 = std::chrono::steady_clock::now();
  BuiltForests built = build_all(cfg);
  Dimension dm = built.conn->dim;
  GeometryMap geom = warp_geometry(cfg);

  // seeded points, uniform in the mapped domain's reference brick
  Rng rng(cfg.seed);
  int ext[3] = {cfg.connectivity == "brick" ? cfg.brick_m : 1,
                cfg.connectivity == "brick" ? cfg.brick_n : 1,
                cfg.connectivity == "brick" ? cfg.brick_p : 1};
  std::vector<std::array<double, 3>> pts(size_t(cfg.num_points));
  for (auto& p : pts) {
    // uniform in the reference brick, then mapped to physical space so the
    // search has to invert the geometry
    double a = cfg.warp;
    p = {0.0, 0.0, 0.0};
    for (int j = 0; j < dm.d; ++j) {
      double e = double(ext[j]);
      double u = rng.unit() * e;
      p[size_t(j)] = u + a * u * (e - u) / e;
    }
  }
  (void)geom;

  // reference coordinates (tree units) of each point, via the exact inverse
  std::vector<std::array<double, 3>> refs(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) refs[i] = warp_inverse(cfg, pts[i]);

  double scale = double(dm.root_len());
  auto exact_hit = [&](const Forest& f, const Octant& o, size_t q) {
    auto org = [&](int axis) {
      uint32_t m = uint32_t(ext[0]), n = uint32_t(ext[1]);
      uint32_t grid[3] = {o.tree % m, (o.tree / m) % n, o.tree / (m * n)};
      return double(grid[axis]);
    };
    uint64_t h = octant_size(f.dim, o);
    for (int j = 0; j < f.dim.d; ++j) {
      double lo = org(j) + double(o.x[size_t(j)]) / scale;
      double hi = lo + double(h) / scale;
      double v = refs[q][size_t(j)];
      if (!(lo <= v && v < hi)) return false;
    }
    return true;
  };
  auto sphere_hit = [&](const Forest& f, const Octant& o, size_t q) {
    // bounding sphere of the mapped cell: cheap and over-optimistic
    auto org = [&](int axis) {
      uint32_t m = uint32_t(ext[0]), n = uint32_t(ext[1]);
      uint32_t grid[3] = {o.tree % m, (o.tree / m) % n, o.tree / (m * n)};
      return double(grid[axis]);
    };
    uint64_t h = octant_size(f.dim, o);
    std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
    double a = cfg.warp;
    for (int j = 0; j < f.dim.d; ++j) {
      double e = double(ext[j]);
      double ulo = org(j) + double(o.x[size_t(j)]) / scale;
      double uhi = ulo + double(h) / scale;
      lo[size_t(j)] = ulo + a * ulo * (e - ulo) / e;
      hi[size_t(j)] = uhi + a * uhi * (e - uhi) / e;
      if (lo[size_t(j)] > hi[size_t(j)]) std::swap(lo[size_t(j)], hi[size_t(j)]);
    }
    double r2 = 0.0, d2 = 0.0;
    for (int j = 0; j < f.dim.d; ++j) {
      double c = 0.5 * (lo[size_t(j)] + hi[size_t(j)]);
      double half = 0.5 * (hi[size_t(j)] - lo[size_t(j)]);
      r2 += half * half;
      double dj = pts[q][size_t(j)] - c;
      d2 += dj * dj;
    }
    return d2 <= r2 * (1.0 + 1e-12);
  };

  uint64_t found_batched = 0, found_single = 0;
  SearchStats batched{}, single_total{};
  double batched_ms = 0.0, single_ms = 0.0;
  run_ranks(cfg.ranks, cfg.schedule, [&](Comm& c) {
    const Forest& f = built.forests[size_t(c.rank())];
    uint64_t local_found = 0;
    SearchStats st{};
    auto tb = std::chrono::steady_clock::now();
    search(f, int(pts.size()), [&](const Octant& o, bool is_leaf, int q) {
      if (is_leaf) {
        if (exact_hit(f, o, size_t(q))) {
          ++local_found;
          return true;
        }
        return false;
      }
      return sphere_hit(f, o, size_t(q));
    }, &st);
    double tbms = elapsed_ms(tb);

    uint64_t local_single = 0;
    SearchStats sst{};
    auto ts = std::chrono::steady_clock::now();
    for (size_t q = 0; q < pts.size(); ++q) {
      search(f, 1, [&](const Octant& o, bool is_leaf, int) {
        if (is_leaf) {
          if (exact_hit(f, o, q)) {
            ++local_single;
            return true;
          }
          return false;
        }
        return sphere_hit(f, o, q);
      }, &sst);
    }
    double tsms = elapsed_ms(ts);
    auto fsum = c.allgather(local_found);
    auto ssum = c.allgather(local_single);
    auto visits = c.allgather(st.octant_visits);
    auto svisits = c.allgather(sst.octant_visits);
    auto mc = c.allgather(st.match_calls);
    auto smc = c.allgather(sst.match_calls);
    if (c.rank() == 0) {
      for (int q = 0; q < c.size(); ++q) {
        found_batched += fsum[size_t(q)];
        found_single += ssum[size_t(q)];
        batched.octant_visits += visits[size_t(q)];
        single_total.octant_visits += svisits[size_t(q)];
        batched.match_calls += mc[size_t(q)];
        single_total.match_calls += smc[size_t(q)];
      }
      batched_ms = tbms;
      single_ms = tsms;
    }
  });

  ordered_json j;
  j["config"] = config_json(cfg);
  j["points"] = cfg.num_points;
  j["warp"] = cfg.warp;
  j["found_batched"] = found_batched;
  j["found_single"] = found_single;
  j["batched_match_calls"] = batched.match_calls;
  j["single_match_calls"] = single_total.match_calls;
  j["batched_octant_visits"] = batched.octant_visits;
  j["single_octant_visits"] = single_total.octant_visits;
  out << j.dump(2) << "\n";
  write_file(cfg, "search.json", j.dump(2) + "\n");
  timing << "search batched_ms=" << batched_ms << " single_ms=" << single_ms
         << " total_ms=" << elapsed_ms(t0) << "\n";
  return found_batched == found_single ? 0 : 1;
}

int cmd_ghost(const RunConfig& cfg, std::ostream& out, std::ostream& timing) {
  auto t0 = std::chrono::steady_clock::now();
  RunConfig gcfg = cfg;
  if (cfg.recipe == "uniform") gcfg.recipe = "fractal";
  if (gcfg.recipe_depth == 0) gcfg.recipe_depth = 2;
  BuiltForests built = build_all(gcfg);
  Dimension dm = built.conn->dim;

  ordered_json j;
  j["config"] = config_json(gcfg);
  auto layers_json = ordered_json::array();
  std::vector<int> codims;
  if (cfg.ghost_codim > 0) {
    codims.push_back(cfg.ghost_codim);
  } else {
    for (int k = 1; k <= dm.d; ++k) codims.push_back(k);
  }
  RankGroup group(cfg.ranks, cfg.schedule);
  group.set_trace(cfg.trace);
  for (int k : codims) {
    std::vector<GhostLayer> layers(size_t(cfg.ranks), GhostLayer{});
    group.run([&](Comm& c) {
      layers[size_t(c.rank())] = build_ghost(built.forests[size_t(c.rank())], c, k);
    });
    ordered_json lj;
    lj["codim"] = k;
    auto counts = ordered_json::array();
    for (const GhostLayer& gl : layers) counts.push_back(gl.ghosts.size());
    lj["per_rank_ghosts"] = counts;
    if (cfg.dump) {
      auto dump = ordered_json::array();
      for (const GhostLayer& gl : layers) {
        auto rank_dump = ordered_json::array();
        for (const GhostOctant& g : gl.ghosts) {
          ordered_json rec;
          rec["tree"] = g.oct.tree;
          rec["level"] = g.oct.level;
          rec["x"] = {g.oct.x[0], g.oct.x[1], g.oct.x[2]};
          rec["owner"] = g.owner;
          rank_dump.push_back(rec);
        }
        dump.push_back(rank_dump);
      }
      lj["layers"] = dump;
    }
    layers_json.push_back(lj);
  }
  j["ghost"] = layers_json;
  out << j.dump(2) << "\n";
  write_file(cfg, "ghost.json", j.dump(2) + "\n");
  if (cfg.trace) write_file(cfg, "ghost_trace.jsonl", group.trace_json());
  timing << "ghost wall_ms=" << elapsed_ms(t0) << "\n";
  return 0;
}

int cmd_iterate(const RunConfig& cfg, std::ostream& out, std::ostream& timing) {
  auto t0 = std::chrono::steady_clock::now();
  BuiltForests built = build_all(cfg);
  Dimension dm = built.conn->dim;

  std::vector<std::array<uint64_t, 4>> counts(size_t(cfg.ranks), {0, 0, 0, 0});
  std::vector<IterateStats> stats(size_t(cfg.ranks));
  std::vector<std::string> dumps(size_t(cfg.ranks));
  run_ranks(cfg.ranks, cfg.schedule, [&](Comm& c) {
    const Forest& f = built.forests[size_t(c.rank())];
    GhostLayer gl = build_ghost(f, c, dm.d);
    IterateOptions opts;
    opts.mode = cfg.iterate_mode == "closed" ? RelevanceMode::closed : RelevanceMode::open;
    std::string dump;
    iterate(f, gl,
            IterateCallbacks::all(
                [&](const IterPoint& pt) {
                  counts[size_t(c.rank())][size_t(pt.dim)]++;
                  if (cfg.dump) {
                    dump += std::to_string(pt.dim) + " " +
                            std::to_string(point_code(f.dim, pt.canonical)) + " " +
                            std::to_string(pt.canonical.octant.tree) + " " +
                            std::to_string(pt.canonical.octant.level) + " " +
                            std::to_string(pt.canonical.octant.x[0]) + " " +
                            std::to_string(pt.canonical.octant.x[1]) + " " +
                            std::to_string(pt.canonical.octant.x[2]) + " supports=" +
                            std::to_string(pt.support.size()) + "\n";
                  }
                },
                dm.d),
            opts, &stats[size_t(c.rank())]);
    dumps[size_t(c.rank())] = std::move(dump);
  });

  ordered_json j;
  j["config"] = config_json(cfg);
  j["mode"] = cfg.iterate_mode;
  auto hist = ordered_json::array();
  for (int p = 0; p < cfg.ranks; ++p) {
    ordered_json r;
    r["rank"] = p;
    for (int d = 0; d <= dm.d; ++d) {
      r["dim" + std::to_string(d)] = counts[size_t(p)][size_t(d)];
    }
    r["splits"] = stats[size_t(p)].split_calls;
    r["searches"] = stats[size_t(p)].binary_searches;
    hist.push_back(r);
  }
  j["visits"] = hist;
  out << j.dump(2) << "\n";
  write_file(cfg, "iterate.json", j.dump(2) + "\n");
  if (cfg.dump) {
    std::string all;
    for (const std::string& d : dumps) all += d;
    write_file(cfg, "iterate_points.txt", all);
  }
  timing << "iterate wall_ms=" << elapsed_ms(t0) << "\n";
  return 0;
}

int cmd_lnodes(const RunConfig& cfg, std::ostream& out, std::ostream& timing) {
  auto t0 = std::chrono::steady_clock::now();
  BuiltForests built = build_all(cfg);
  Dimension dm = built.conn->dim;

  std::vector<LnodesResult> results(size_t(cfg.ranks), LnodesResult{});
  RankGroup group(cfg.ranks, cfg.schedule);
  std::vector<GhostLayer> layers(size_t(cfg.ranks), GhostLayer{});
  group.run([&](Comm& c) {
    layers[size_t(c.rank())] = build_ghost(built.forests[size_t(c.rank())], c, dm.d);
  });
  group.set_trace(cfg.trace);
  group.run([&](Comm& c) {
    results[size_t(c.rank())] =
        lnodes(built.forests[size_t(c.rank())], layers[size_t(c.rank())], c, cfg.order);
  });
  if (cfg.trace) write_file(cfg, "lnodes_trace.jsonl", group.trace_json());

  // checksum of the element tables in global leaf order
  uint64_t checksum = fnv1a(nullptr, 0);
  {
    std::vector<std::pair<Octant, std::vector<int64_t>>> flat;
    for (int p = 0; p < cfg.ranks; ++p) {
      const Forest& f = built.forests[size_t(p)];
      size_t jdx = 0;
      for (const auto& tree : f.leaves) {
        for (const Octant& leaf : tree) {
          std::vector<int64_t> row;
          for (int k = 0; k < results[size_t(p)].nodes_per_leaf; ++k) {
            row.push_back(
                results[size_t(p)].nodes[size_t(results[size_t(p)].element_node(jdx, k))].index);
          }
          flat.emplace_back(leaf, std::move(row));
          ++jdx;
        }
      }
    }
    std::sort(flat.begin(), flat.end(), [&](const auto& a, const auto& b) {
      return octant_less(dm, a.first, b.first);
    });
    for (const auto& [leaf, row] : flat) {
      for (int64_t v : row) checksum = hash_combine(checksum, uint64_t(v));
    }
  }

  ordered_json j;
  j["config"] = config_json(cfg);
  j["order"] = cfg.order;
  j["num_global_nodes"] = results[0].num_global;
  auto owned = ordered_json::array();
  for (const LnodesResult& r : results) owned.push_back(r.owned_count);
  j["per_rank_owned"] = owned;
  j["element_table_checksum"] = checksum;
  out << j.dump(2) << "\n";
  write_file(cfg, "lnodes.json", j.dump(2) + "\n");

  if (!cfg.out_dir.empty()) {
    // node positions for visual inspection (rank 0's view)
    GeometryMap geom = warp_geometry(cfg);
    std::vector<std::array<double, 3>> pos;
    std::vector<int64_t> labels;
    const Forest& f0 = built.forests[0];
    const LnodesResult& r0 = results[0];
    double scale = double(dm.root_len());
    size_t jdx = 0;
    std::map<int64_t, bool> seen;
    for (const auto& tree : f0.leaves) {
      for (const Octant& leaf : tree) {
        for (int k = 0; k < r0.nodes_per_leaf; ++k) {
          int64_t gi = r0.nodes[size_t(r0.element_node(jdx, k))].index;
          if (seen[gi]) continue;
          seen[gi] = true;
          std::array<double, 3> ref{0, 0, 0};
          int kk = k;
          uint64_t h = octant_size(dm, leaf);
          for (int a = 0; a < dm.d; ++a) {
            ref[size_t(a)] = (double(leaf.x[size_t(a)]) +
                              double(h) * double(kk % (cfg.order + 1)) / double(cfg.order)) /
                             scale;
            kk /= cfg.order + 1;
          }
          pos.push_back(geom(leaf.tree, ref));
          labels.push_back(gi);
        }
        ++jdx;
      }
    }
    write_file(cfg, "lnodes.vtk", vtk_points(pos, labels, dm.d));
  }
  if (cfg.dump) {
    std::string tbl;
    for (int p = 0; p < cfg.ranks; ++p) {
      const LnodesResult& r = results[size_t(p)];
      for (size_t jdx = 0; jdx < built.forests[size_t(p)].num_local(); ++jdx) {
        tbl += "r" + std::to_string(p) + " leaf" + std::to_string(jdx) + ":";
        for (int k = 0; k < r.nodes_per_leaf; ++k) {
          tbl += " " + std::to_string(r.nodes[size_t(r.element_node(jdx, k))].index);
        }
        tbl += "\n";
      }
    }
    write_file(cfg, "lnodes_tables.txt", tbl);
  }
  timing << "lnodes wall_ms=" << elapsed_ms(t0) << "\n";
  return 0;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& timing) {
  auto t0 = std::chrono::steady_clock::now();
  BuiltForests built = build_all(cfg);
  Dimension dm = built.conn->dim;
  std::vector<GhostLayer> layers(size_t(cfg.ranks), GhostLayer{});
  run_ranks(cfg.ranks, cfg.schedule, [&](Comm& c) {
    layers[size_t(c.rank())] = build_ghost(built.forests[size_t(c.rank())], c, dm.d);
  });
  ordered_json j;
  j["config"] = config_json(cfg);
  uint64_t total = 0;
  auto per_rank = ordered_json::array();
  auto ghosts = ordered_json::array();
  for (int p = 0; p < cfg.ranks; ++p) {
    total += built.forests[size_t(p)].num_local();
    per_rank.push_back(built.forests[size_t(p)].num_local());
    ghosts.push_back(layers[size_t(p)].ghosts.size());
  }
  j["N"] = total;
  j["per_rank"] = per_rank;
  j["levels"] = level_histogram(built.forests);
  j["ghosts_codim_d"] = ghosts;
  out << j.dump(2) << "\n";
  timing << "stats wall_ms=" << elapsed_ms(t0) << "\n";
  return 0;
}

}  // namespace octforest
