#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>

#include "octforest/iterate.hpp"
#include "oracles.hpp"

using namespace octforest;

namespace {

bool hash_refine(uint64_t seed, const Octant& o, int mod) {
  uint64_t h = seed;
  h = hash_combine(h, o.tree);
  h = hash_combine(h, uint64_t(o.level));
  for (uint64_t c : o.x) h = hash_combine(h, c);
  return mix64(h) % uint64_t(mod) == 0;
}

struct Fixture {
  std::shared_ptr<const Connectivity> conn;
  oracle::GlobalGrid grid;
  std::vector<Forest> forests;
  std::vector<GhostLayer> layers;
};

Fixture make_fixture(Dimension dm, int m, int n, int p, std::array<bool, 3> per, int P,
                     int level, int depth, uint64_t seed) {
  Fixture fx;
  fx.conn = std::make_shared<const Connectivity>(build_brick(dm, m, n, p, per));
  fx.grid = oracle::GlobalGrid::brick(dm, m, n, p, per);
  fx.forests.resize(size_t(P), Forest{});
  fx.layers.resize(size_t(P), GhostLayer{});
  run_ranks(P, Schedule::roundrobin, [&](Comm& c) {
    Forest f = new_uniform(fx.conn, P, c.rank(), level);
    if (depth > 0) {
      refine(f, [&](const Octant& o) {
        return o.level < level + depth && hash_refine(seed, o, 3);
      }, true);
    }
    partition_even(f, c);
    balance(f, c);
    partition_even(f, c);
    fx.layers[size_t(c.rank())] = build_ghost(f, c, dm.d);
    fx.forests[size_t(c.rank())] = std::move(f);
  });
  return fx;
}

struct Visit {
  int dim;
  uint64_t seq;
  Box gbox;
  bool complete;
  std::set<std::string> support;  // octant keys
  std::vector<SupportEntry> entries;
};

std::string oct_key(Dimension dm, const Octant& o) {
  std::string k = std::to_string(o.tree) + "/" + std::to_string(o.level);
  for (int j = 0; j < dm.d; ++j) k += "," + std::to_string(o.x[size_t(j)]);
  return k;
}

// Run iterate on one rank and index the visits by the oracle's box keys.
std::map<std::string, Visit> run_iterate(const Fixture& fx, int p, RelevanceMode mode,
                                         bool cache, IterateStats* stats = nullptr) {
  Dimension dm = fx.conn->dim;
  std::map<std::string, Visit> visits;
  uint64_t seq = 0;
  IterateOptions opts;
  opts.mode = mode;
  opts.use_split_cache = cache;
  iterate(fx.forests[size_t(p)], fx.layers[size_t(p)],
          IterateCallbacks::all(
              [&](const IterPoint& pt) {
                Box gb = fx.grid.global_point_box(dm, pt.canonical);
                std::string key = fx.grid.box_key(gb);
                bool fresh = visits.find(key) == visits.end();
                REQUIRE(fresh);  // exactly-once per canonical point
                Visit v;
                v.dim = pt.dim;
                v.seq = seq++;
                v.gbox = gb;
                v.complete = pt.support_complete;
                for (const SupportEntry& e : pt.support) {
                  v.support.insert(oct_key(dm, e.leaf));
                  v.entries.push_back(e);
                }
                visits.emplace(key, std::move(v));
              },
              dm.d),
          opts, stats);
  return visits;
}

void check_against_oracle(const Fixture& fx, int p, RelevanceMode mode) {
  Dimension dm = fx.conn->dim;
  auto oracle_data = oracle::build_partition_oracle(fx.grid, fx.forests);
  auto visits = run_iterate(fx, p, mode, true);

  auto expect_keys = mode == RelevanceMode::open ? oracle_data.p_rank(p)
                                                 : oracle_data.p_rank_closed(fx.grid, p);
  std::set<std::string> expect(expect_keys.begin(), expect_keys.end());
  std::set<std::string> got;
  for (const auto& [key, v] : visits) got.insert(key);
  CHECK(got == expect);

  // support lists equal the leaf support intersected with local + ghost
  const Forest& f = fx.forests[size_t(p)];
  const GhostLayer& gl = fx.layers[size_t(p)];
  std::set<std::string> present;
  for (const auto& tree : f.leaves) {
    for (const Octant& o : tree) present.insert(oct_key(dm, o));
  }
  for (const GhostOctant& g : gl.ghosts) present.insert(oct_key(dm, g.oct));

  for (const auto& [key, v] : visits) {
    const auto& info = oracle_data.points.at(key);
    std::set<std::string> expect_supp;
    bool all_present = true;
    for (size_t li : info.leafsupp) {
      std::string k = oct_key(dm, oracle_data.leaves[li]);
      if (present.count(k)) {
        expect_supp.insert(k);
      } else {
        all_present = false;
      }
    }
    CHECK(v.support == expect_supp);
    CHECK(v.complete == all_present);
    // index correctness
    for (const SupportEntry& e : v.entries) {
      if (e.is_local) {
        CHECK(f.leaves[e.leaf.tree][size_t(e.index)] == e.leaf);
        CHECK(e.owner == p);
      } else {
        CHECK(gl.ghosts[size_t(e.index)].oct == e.leaf);
        CHECK(gl.ghosts[size_t(e.index)].owner == e.owner);
      }
    }
  }

  // dimension ordering: a boundary point always fires after its host
  for (const auto& [k1, c] : visits) {
    for (const auto& [k2, e] : visits) {
      if (k1 == k2) continue;
      if (fx.grid.closed_inside(e.gbox, c.gbox)) {
        CHECK(c.seq < e.seq);
      }
    }
  }
}

}  // namespace

TEST_CASE("uniform level-1 square visits 25 points with full supports") {
  Fixture fx = make_fixture(Dimension::make(2, 3), 1, 1, 1, {false, false, false}, 1, 1, 0, 0);
  auto visits = run_iterate(fx, 0, RelevanceMode::open, true);
  CHECK(visits.size() == 25);
  int by_dim[3] = {0, 0, 0};
  for (const auto& [key, v] : visits) {
    by_dim[v.dim]++;
    CHECK(v.complete);
  }
  CHECK(by_dim[2] == 4);
  CHECK(by_dim[1] == 12);
  CHECK(by_dim[0] == 9);
  check_against_oracle(fx, 0, RelevanceMode::open);
}

TEST_CASE("volume-only callbacks count the leaves") {
  Fixture fx = make_fixture(Dimension::make(2, 4), 1, 1, 1, {false, false, false}, 1, 1, 2, 42);
  const Forest& f = fx.forests[0];
  size_t count = 0;
  IterateCallbacks cbs;
  cbs.by_dim[2] = [&](const IterPoint& pt) {
    CHECK(pt.dim == 2);
    CHECK(pt.support.size() == 1);
    ++count;
  };
  iterate(f, fx.layers[0], cbs);
  CHECK(count == f.num_local());
}

TEST_CASE("single-rank oracle equivalence on seeded balanced forests") {
  int cases = 0;
  for (uint64_t seed = 1; seed <= 12; ++seed) {
    Fixture fx = make_fixture(Dimension::make(2, 4), 1, 1, 1, {false, false, false}, 1, 1,
                              2, seed);
    check_against_oracle(fx, 0, RelevanceMode::open);
    ++cases;
  }
  for (uint64_t seed = 1; seed <= 6; ++seed) {
    Fixture fx = make_fixture(Dimension::make(3, 3), 1, 1, 1, {false, false, false}, 1, 1,
                              1, seed);
    check_against_oracle(fx, 0, RelevanceMode::open);
    ++cases;
  }
  // multi-tree, including a periodic brick
  for (uint64_t seed = 1; seed <= 4; ++seed) {
    Fixture a = make_fixture(Dimension::make(2, 4), 2, 1, 1, {false, false, false}, 1, 1, 2, seed);
    check_against_oracle(a, 0, RelevanceMode::open);
    Fixture b = make_fixture(Dimension::make(2, 4), 2, 2, 1, {true, false, false}, 1, 1, 2, seed);
    check_against_oracle(b, 0, RelevanceMode::open);
    Fixture c = make_fixture(Dimension::make(3, 3), 2, 1, 1, {false, true, false}, 1, 1, 1, seed);
    check_against_oracle(c, 0, RelevanceMode::open);
  }
  CHECK(cases == 18);
}

TEST_CASE("fully periodic torus wraps every interface") {
  // uniform 2x2 torus: 4 volumes, 8 faces, 4 corners once each
  Fixture fx = make_fixture(Dimension::make(2, 3), 1, 1, 1, {true, true, false}, 1, 1, 0, 0);
  auto visits = run_iterate(fx, 0, RelevanceMode::open, true);
  CHECK(visits.size() == 16);
  int by_dim[3] = {0, 0, 0};
  for (const auto& [key, v] : visits) by_dim[v.dim]++;
  CHECK(by_dim[2] == 4);
  CHECK(by_dim[1] == 8);
  CHECK(by_dim[0] == 4);
  check_against_oracle(fx, 0, RelevanceMode::open);

  // single root leaf on a torus: one volume, two faces, one corner
  Fixture fx0 = make_fixture(Dimension::make(2, 3), 1, 1, 1, {true, true, false}, 1, 0, 0, 0);
  auto v0 = run_iterate(fx0, 0, RelevanceMode::open, true);
  CHECK(v0.size() == 4);
  check_against_oracle(fx0, 0, RelevanceMode::open);

  // and a refined multi-rank torus against the oracle
  Fixture fxr = make_fixture(Dimension::make(2, 4), 1, 1, 1, {true, true, false}, 2, 1, 2, 6);
  check_against_oracle(fxr, 0, RelevanceMode::open);
  check_against_oracle(fxr, 1, RelevanceMode::closed);
}

TEST_CASE("multi-rank open and closed modes match the per-rank oracles") {
  for (uint64_t seed : {3u, 7u}) {
    for (int P : {2, 4}) {
      Fixture fx = make_fixture(Dimension::make(2, 4), 1, 1, 1, {false, false, false}, P, 1,
                                2, seed);
      for (int p = 0; p < P; ++p) {
        check_against_oracle(fx, p, RelevanceMode::open);
        check_against_oracle(fx, p, RelevanceMode::closed);
      }
    }
  }
  Fixture fx3 = make_fixture(Dimension::make(3, 3), 1, 1, 1, {false, false, false}, 2, 1, 1, 5);
  for (int p = 0; p < 2; ++p) {
    check_against_oracle(fx3, p, RelevanceMode::open);
    check_against_oracle(fx3, p, RelevanceMode::closed);
  }
}

TEST_CASE("split cache does not change what is visited") {
  Fixture fx = make_fixture(Dimension::make(2, 4), 2, 1, 1, {false, false, false}, 2, 1, 2, 11);
  for (int p = 0; p < 2; ++p) {
    IterateStats with_cache, without_cache;
    auto a = run_iterate(fx, p, RelevanceMode::open, true, &with_cache);
    auto b = run_iterate(fx, p, RelevanceMode::open, false, &without_cache);
    REQUIRE(a.size() == b.size());
    for (const auto& [key, v] : a) {
      REQUIRE(b.count(key) == 1);
      CHECK(b.at(key).support == v.support);
    }
    CHECK(with_cache.split_cache_hits > 0);
    CHECK(with_cache.split_calls < without_cache.split_calls);
  }
}

TEST_CASE("hanging interface fixture: faces carry mixed-level supports") {
  // one level-1 leaf beside four level-2 leaves (balanced tiling of the tree)
  Dimension dm = Dimension::make(2, 2);
  auto conn = std::make_shared<const Connectivity>(build_unitcube(dm));
  Fixture fx;
  fx.conn = conn;
  fx.grid = oracle::GlobalGrid::brick(dm, 1, 1, 1);
  fx.forests.resize(1);
  fx.layers.resize(1);
  run_ranks(1, Schedule::roundrobin, [&](Comm& c) {
    Forest f = new_uniform(conn, 1, 0, 1);
    // split the lower-right quadrant once
    refine(f, [&](const Octant& o) { return o.level == 1 && o.x[0] == 2 && o.x[1] == 0; },
           false);
    fx.layers[0] = build_ghost(f, c, 2);
    fx.forests[0] = std::move(f);
  });
  REQUIRE(fx.forests[0].num_local() == 7);
  auto visits = run_iterate(fx, 0, RelevanceMode::open, true);
  check_against_oracle(fx, 0, RelevanceMode::open);

  auto key_of = [&](int64_t lx, int64_t ly, int64_t hx, int64_t hy) {
    Box b;
    b.lo = {lx, ly, 0};
    b.hi = {hx, hy, 0};
    return fx.grid.box_key(b);
  };
  // the full coarse face fires once with supports {B, s1, s2}
  REQUIRE(visits.count(key_of(2, 0, 2, 2)) == 1);
  const Visit& cf = visits.at(key_of(2, 0, 2, 2));
  CHECK(cf.support.size() == 3);
  // its hanging midpoint corner is not a partition point
  CHECK(visits.count(key_of(2, 1, 2, 1)) == 0);
  // the hanging half-faces are not visited either
  CHECK(visits.count(key_of(2, 0, 2, 1)) == 0);
  CHECK(visits.count(key_of(2, 1, 2, 2)) == 0);
  // the fine-fine interface between the two small leaves fires
  REQUIRE(visits.count(key_of(2, 1, 3, 1)) == 1);
  CHECK(visits.at(key_of(2, 1, 3, 1)).support.size() == 2);
  // interior fine corner with four fine supports
  REQUIRE(visits.count(key_of(3, 1, 3, 1)) == 1);
  CHECK(visits.at(key_of(3, 1, 3, 1)).support.size() == 4);
}

TEST_CASE("a corner supported only by ghosts fires in closed mode only") {
  // rank 0 owns exactly the lower-left fine leaf of a hanging configuration
  Dimension dm = Dimension::make(2, 2);
  auto conn = std::make_shared<const Connectivity>(build_unitcube(dm));
  Fixture fx;
  fx.conn = conn;
  fx.grid = oracle::GlobalGrid::brick(dm, 1, 1, 1);
  const int P = 2;
  fx.forests.resize(P);
  fx.layers.resize(P);
  run_ranks(P, Schedule::roundrobin, [&](Comm& c) {
    Forest f = new_uniform(conn, P, c.rank(), 1);
    refine(f, [&](const Octant& o) { return o.level == 1 && o.x[0] == 2 && o.x[1] == 0; },
           false);
    partition_even(f, c);
    fx.layers[size_t(c.rank())] = build_ghost(f, c, dm.d);
    fx.forests[size_t(c.rank())] = std::move(f);
  });
  check_against_oracle(fx, 0, RelevanceMode::open);
  check_against_oracle(fx, 0, RelevanceMode::closed);
  check_against_oracle(fx, 1, RelevanceMode::open);
  check_against_oracle(fx, 1, RelevanceMode::closed);

  auto open0 = run_iterate(fx, 0, RelevanceMode::open, true);
  auto closed0 = run_iterate(fx, 0, RelevanceMode::closed, true);
  CHECK(closed0.size() > open0.size());
  for (const auto& [key, v] : open0) CHECK(closed0.count(key) == 1);

  // the extra closed-mode points answer is_relevant directly: all-ghost
  // support, false in open mode, true in closed mode
  int ghost_only = 0;
  IterateOptions opts;
  opts.mode = RelevanceMode::closed;
  iterate(fx.forests[0], fx.layers[0],
          IterateCallbacks::all(
              [&](const IterPoint& pt) {
                bool any_local = false;
                for (const SupportEntry& e : pt.support) any_local |= e.is_local;
                CHECK(is_relevant(fx.forests[0], pt.ref_box, pt.dim, pt.support,
                                  RelevanceMode::closed));
                if (!any_local) {
                  ++ghost_only;
                  CHECK(!is_relevant(fx.forests[0], pt.ref_box, pt.dim, pt.support,
                                     RelevanceMode::open));
                }
              },
              2),
          opts);
  CHECK(ghost_only == int(closed0.size() - open0.size()));
}
