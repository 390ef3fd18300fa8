#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "octforest/forest.hpp"
#include "oracles.hpp"

using namespace octforest;

namespace {

std::shared_ptr<const Connectivity> unitcube2(int lmax = 3) {
  return std::make_shared<Connectivity>(build_unitcube(Dimension::make(2, lmax)));
}

// deterministic pseudo-random refinement decision per octant
bool hash_refine(uint64_t seed, const Octant& o, int mod) {
  uint64_t h = seed;
  h = hash_combine(h, o.tree);
  h = hash_combine(h, uint64_t(o.level));
  for (uint64_t c : o.x) h = hash_combine(h, c);
  return mix64(h) % uint64_t(mod) == 0;
}

std::vector<Octant> gather_global(const std::vector<Forest>& forests) {
  std::vector<Octant> all;
  for (const Forest& f : forests) {
    for (const auto& tree : f.leaves) all.insert(all.end(), tree.begin(), tree.end());
  }
  return all;
}

}  // namespace

TEST_CASE("uniform forest sizes and first atoms") {
  auto conn = unitcube2();
  Forest f = new_uniform(conn, 1, 0, 2);
  CHECK(f.num_local() == 16);
  CHECK(forest_diagnostics(f).empty());
  CHECK(f.first_atoms.size() == 2);
  CHECK(f.first_atoms[0] == Octant{0, 3, {0, 0, 0}});
  CHECK(f.first_atoms[1].tree == 1);

  // P=2 on uniform level 1: ranks own sibling pairs, f[1] = first atom of child 2
  Dimension dm = conn->dim;
  Forest r0 = new_uniform(conn, 2, 0, 1);
  Forest r1 = new_uniform(conn, 2, 1, 1);
  CHECK(r0.num_local() == 2);
  CHECK(r1.num_local() == 2);
  Octant c2 = child(dm, root_octant(0), 2);
  CHECK(r0.first_atoms[1] == first_atom(dm, c2));
  CHECK(r1.leaves[0][0] == c2);

  CHECK_THROWS_AS(new_uniform(conn, 5, 0, 0), contract_error);  // 1 leaf, 5 ranks
}

TEST_CASE("refine and coarsen round trip") {
  auto conn = unitcube2();
  Forest f = new_uniform(conn, 1, 0, 1);
  Forest orig = f;
  refine(f, [](const Octant&) { return true; }, false);
  CHECK(f.num_local() == 16);
  CHECK(forest_diagnostics(f).empty());
  coarsen(f, [](const Octant&) { return true; });
  CHECK(f.leaves == orig.leaves);

  // clamped at lmax
  Forest g = new_uniform(conn, 1, 0, 3);
  refine(g, [](const Octant&) { return true; }, true);
  CHECK(g.num_local() == 64);

  // recursive refinement stops when the predicate fails
  Forest h = new_uniform(conn, 1, 0, 0);
  refine(h, [](const Octant& o) { return o.level < 2 && o.x[0] == 0 && o.x[1] == 0; }, true);
  CHECK(forest_diagnostics(h).empty());
  CHECK(h.num_local() == 7);  // corner chain: root -> 4, corner -> 4 more
}

TEST_CASE("locate and rank_range agree with ownership") {
  auto conn = unitcube2();
  Forest f = new_uniform(conn, 1, 0, 2);
  for (const Octant& a : oracle::all_atoms(f.dim, 0)) {
    CHECK(locate_rank(f, a) == 0);
  }
  for (int P : {2, 3, 4}) {
    std::vector<Forest> forests;
    for (int r = 0; r < P; ++r) forests.push_back(new_uniform(conn, P, r, 2));
    const Forest& view = forests[0];
    for (int q = 0; q < P; ++q) {
      CHECK(rank_range(view, q).first == view.first_atoms[size_t(q)]);
      for (const auto& tree : forests[size_t(q)].leaves) {
        for (const Octant& o : tree) {
          CHECK(locate_rank(view, first_atom(view.dim, o)) == q);
          CHECK(locate_rank(view, last_atom(view.dim, o)) == q);
        }
      }
    }
  }
}

TEST_CASE("partition_even levels the counts and preserves global order") {
  auto conn = unitcube2();
  for (int P : {2, 3, 4}) {
    std::vector<Forest> forests(static_cast<size_t>(P));
    run_ranks(P, Schedule::roundrobin, [&](Comm& c) {
      Forest f = new_uniform(conn, P, c.rank(), 1);
      refine(f, [](const Octant& o) { return hash_refine(17, o, 2); }, true);
      partition_even(f, c);
      forests[size_t(c.rank())] = std::move(f);
    });
    size_t lo = SIZE_MAX, hi = 0;
    for (const Forest& f : forests) {
      CHECK(forest_diagnostics(f).empty());
      lo = std::min(lo, f.num_local());
      hi = std::max(hi, f.num_local());
    }
    CHECK(hi - lo <= 1);
    auto all = gather_global(forests);
    Dimension dm = conn->dim;
    for (size_t i = 1; i < all.size(); ++i) CHECK(octant_less(dm, all[i - 1], all[i]));
    // identical global set to the serial run
    Forest serial = new_uniform(conn, 1, 0, 1);
    refine(serial, [](const Octant& o) { return hash_refine(17, o, 2); }, true);
    CHECK(gather_global({serial}) == all);
    // locate agrees with ownership after repartition
    for (int q = 0; q < P; ++q) {
      for (const auto& tree : forests[size_t(q)].leaves) {
        for (const Octant& o : tree) {
          CHECK(locate_rank(forests[0], first_atom(dm, o)) == q);
          CHECK(locate_rank(forests[0], last_atom(dm, o)) == q);
        }
      }
    }
  }
}

TEST_CASE("balance enforces 2:1 across every contact, minimally") {
  for (int d : {2, 3}) {
    Dimension dm = Dimension::make(d, d == 2 ? 4 : 3);
    auto conn = std::make_shared<const Connectivity>(build_unitcube(dm));
    Forest f = new_uniform(conn, 1, 0, 0);
    // refine one corner chain to lmax: maximal imbalance
    refine(f, [&](const Octant& o) {
      for (int j = 0; j < dm.d; ++j) if (o.x[size_t(j)] != 0) return false;
      return true;
    }, true);
    run_ranks(1, Schedule::roundrobin, [&](Comm& c) { balance(f, c); });
    CHECK(forest_diagnostics(f).empty());

    auto all = gather_global({f});
    oracle::GlobalGrid grid = oracle::GlobalGrid::brick(dm, 1, 1, 1);
    for (const Octant& a : all) {
      for (const Octant& b : all) {
        if (grid.closed_touch(grid.global_box(dm, a), grid.global_box(dm, b))) {
          CHECK(std::abs(a.level - b.level) <= 1);
        }
      }
    }
    // idempotent
    Forest f2 = f;
    run_ranks(1, Schedule::roundrobin, [&](Comm& c) { balance(f2, c); });
    CHECK(f2.leaves == f.leaves);
  }
}

TEST_CASE("balance result is independent of the rank count") {
  Dimension dm = Dimension::make(2, 4);
  auto conn = std::make_shared<const Connectivity>(build_brick(dm, 2, 1, 1));
  auto make_global = [&](int P) {
    std::vector<Forest> forests(static_cast<size_t>(P));
    run_ranks(P, Schedule::roundrobin, [&](Comm& c) {
      Forest f = new_uniform(conn, P, c.rank(), 1);
      refine(f, [](const Octant& o) { return o.level < 4 && hash_refine(99, o, 3); }, true);
      partition_even(f, c);
      balance(f, c);
      forests[size_t(c.rank())] = std::move(f);
    });
    return gather_global(forests);
  };
  auto g1 = make_global(1);
  auto g2 = make_global(2);
  auto g4 = make_global(4);
  CHECK(g1 == g2);
  CHECK(g1 == g4);
  CHECK(!g1.empty());

  // already balanced: a uniform forest is a fixed point
  Forest u = new_uniform(conn, 1, 0, 2);
  Forest u2 = u;
  run_ranks(1, Schedule::roundrobin, [&](Comm& c) { balance(u2, c); });
  CHECK(u2.leaves == u.leaves);
}

TEST_CASE("forest JSON is stable") {
  auto conn = unitcube2();
  Forest f = new_uniform(conn, 1, 0, 1);
  std::string a = forest_to_json(f);
  std::string b = forest_to_json(f);
  CHECK(a == b);
  CHECK(a.find("\"trees\"") != std::string::npos);
}
