#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>

#include "octforest/point.hpp"
#include "oracles.hpp"

using namespace octforest;

namespace {

uint32_t mask_of(int d, std::initializer_list<const char*> names) {
  const BTables& t = btables(d);
  uint32_t m = 0;
  for (const char* n : names) {
    bool found = false;
    for (int c = 0; c < t.num_codes; ++c) {
      if (t.name(c) == n) {
        m |= uint32_t(1) << c;
        found = true;
      }
    }
    REQUIRE(found);
  }
  return m;
}

// Key of a point's global closed box; identifies equal points on a brick.
std::string box_key(const oracle::GlobalGrid& g, Dimension dm, const Point& p) {
  Box b = g.global_point_box(dm, p);
  std::string k;
  for (int j = 0; j < dm.d; ++j) {
    int64_t lo = b.lo[size_t(j)], hi = b.hi[size_t(j)];
    if (g.periodic[j]) {
      int64_t span = g.ext[j] * int64_t(dm.root_len());
      int64_t w = hi - lo;
      lo = ((lo % span) + span) % span;
      hi = lo + w;
    }
    k += std::to_string(lo) + ":" + std::to_string(hi) + ";";
  }
  return k;
}

}  // namespace

TEST_CASE("d=3 child-boundary intersections match the reference table") {
  CHECK(child_boundary_mask(3, 0) == mask_of(3, {"c0", "e0", "e4", "e8", "f0", "f2", "f4"}));
  CHECK(child_boundary_mask(3, 1) == mask_of(3, {"c1", "e0", "e5", "e9", "f1", "f2", "f4"}));
  CHECK(child_boundary_mask(3, 2) == mask_of(3, {"c2", "e1", "e4", "e10", "f0", "f3", "f4"}));
  CHECK(child_boundary_mask(3, 3) == mask_of(3, {"c3", "e1", "e5", "e11", "f1", "f3", "f4"}));
  CHECK(child_boundary_mask(3, 4) == mask_of(3, {"c4", "e2", "e6", "e8", "f0", "f2", "f5"}));
  CHECK(child_boundary_mask(3, 5) == mask_of(3, {"c5", "e2", "e7", "e9", "f1", "f2", "f5"}));
  CHECK(child_boundary_mask(3, 6) == mask_of(3, {"c6", "e3", "e6", "e10", "f0", "f3", "f5"}));
  CHECK(child_boundary_mask(3, 7) == mask_of(3, {"c7", "e3", "e7", "e11", "f1", "f3", "f5"}));
  CHECK(child_boundary_mask(2, 0) == mask_of(2, {"c0", "f0", "f2"}));
  CHECK_THROWS_AS(child_boundary_mask(2, 4), contract_error);
}

TEST_CASE("child-boundary table equals brute-force closed/open intersection") {
  for (int d : {2, 3}) {
    Dimension dm = Dimension::make(d, 3);
    const BTables& t = btables(d);
    Octant s{0, 1, {0, 0, 0}};  // generic non-atom
    for (int i = 0; i < dm.children(); ++i) {
      Box cb = octant_box(dm, child(dm, s, i));
      uint32_t expect = 0;
      for (int b = 0; b < t.num_boundary; ++b) {
        Box eb = entity_box(dm, s, b);
        // closed child box versus open entity domain
        bool touch = true;
        for (int j = 0; j < d && touch; ++j) {
          int64_t lo = eb.lo[size_t(j)], hi = eb.hi[size_t(j)];
          if (lo == hi) {
            touch = cb.lo[size_t(j)] <= lo && lo <= cb.hi[size_t(j)];
          } else {
            touch = std::max(lo, cb.lo[size_t(j)]) < std::min(hi, cb.hi[size_t(j)]);
          }
        }
        if (touch) expect |= uint32_t(1) << b;
      }
      CHECK(child_boundary_mask(d, i) == expect);
    }
  }
}

TEST_CASE("closure, boundary, partition and support sizes for interior points") {
  Dimension dm = Dimension::make(3, 3);
  Connectivity conn = build_unitcube(dm);
  Octant o{0, 2, {2, 2, 2}};  // interior octant
  Point vol{o, BIndex{BKind::volume, 0}};
  CHECK(closure_set(conn, dm, vol).size() == 27);
  CHECK(boundary_set(conn, dm, vol).size() == 26);
  CHECK(child_partition(conn, dm, vol).size() == 27);
  CHECK(point_children(conn, dm, vol).size() == 8);
  CHECK(support_set(conn, dm, vol).size() == 1);

  Point face{o, BIndex{BKind::face, 0}};
  CHECK(support_set(conn, dm, face).size() == 2);
  CHECK(child_partition(conn, dm, face).size() == 9);
  CHECK(point_children(conn, dm, face).size() == 4);

  Point edge{o, BIndex{BKind::edge, 0}};
  CHECK(support_set(conn, dm, edge).size() == 4);
  auto eb = boundary_set(conn, dm, edge);
  CHECK(eb.size() == 2);
  for (const Point& p : eb) CHECK(point_dim(dm, p) == 0);

  Point corner{o, BIndex{BKind::corner, 0}};
  CHECK(support_set(conn, dm, corner).size() == 8);
  CHECK(boundary_set(conn, dm, corner).empty());
  CHECK(child_partition(conn, dm, corner).empty());

  // truncation on the domain boundary
  Octant c0{0, 2, {0, 0, 0}};
  CHECK(support_set(conn, dm, Point{c0, BIndex{BKind::face, 0}}).size() == 1);
  CHECK(support_set(conn, dm, Point{c0, BIndex{BKind::corner, 0}}).size() == 1);

  Dimension dm2 = Dimension::make(2, 3);
  Connectivity conn2 = build_unitcube(dm2);
  Octant q{0, 2, {2, 2, 0}};
  CHECK(support_set(conn2, dm2, Point{q, BIndex{BKind::corner, 0}}).size() == 4);
  auto asup = atom_support_set(conn2, dm2, Point{q, BIndex{BKind::corner, 0}});
  CHECK(asup.size() == 4);
  for (const Octant& a : asup) {
    CHECK(a.level == dm2.lmax);
    Box ab = octant_box(dm2, a);
    CHECK(closed_boxes_intersect(2, ab, point_box(dm2, Point{q, BIndex{BKind::corner, 0}})));
  }
}

TEST_CASE("closure and partition tile the domain (sample-point check)") {
  for (int d : {2, 3}) {
    Dimension dm = Dimension::make(d, 2);
    Connectivity conn = build_unitcube(dm);
    const BTables& t = btables(d);
    for (const Octant& o : oracle::all_octants(dm, 1)) {
      for (int code = 0; code < t.num_codes; ++code) {
        Point p{o, t.index(code)};
        Box pb = point_box(dm, p);
        // closure: every half-grid sample in the closed box lies in exactly
        // one closure member's open domain
        auto clos = closure_set(conn, dm, p);
        std::array<int64_t, 3> s{};
        std::vector<std::array<int64_t, 3>> samples;
        std::array<int64_t, 3> cur{};
        // half-resolution samples of the closed box (doubled coordinates)
        std::array<std::vector<int64_t>, 3> vals;
        for (int j = 0; j < d; ++j) {
          for (int64_t v = 2 * pb.lo[size_t(j)]; v <= 2 * pb.hi[size_t(j)]; ++v)
            vals[size_t(j)].push_back(v);
        }
        (void)s;
        (void)cur;
        std::array<size_t, 3> idx{0, 0, 0};
        while (true) {
          std::array<int64_t, 3> pt{0, 0, 0};
          for (int j = 0; j < d; ++j) pt[size_t(j)] = vals[size_t(j)][idx[size_t(j)]];
          int hits = 0;
          for (const Point& e : clos) {
            Box eb = point_box(dm, e);
            bool in = true;
            for (int j = 0; j < d && in; ++j) {
              int64_t lo = 2 * eb.lo[size_t(j)], hi = 2 * eb.hi[size_t(j)];
              in = (lo == hi) ? pt[size_t(j)] == lo : (lo < pt[size_t(j)] && pt[size_t(j)] < hi);
            }
            if (in) ++hits;
          }
          CHECK(hits == 1);
          int j = 0;
          for (; j < d; ++j) {
            if (++idx[size_t(j)] < vals[size_t(j)].size()) break;
            idx[size_t(j)] = 0;
          }
          if (j == d) break;
        }
        // partition: interior samples lie in exactly one part member
        if (t.dim[size_t(code)] > 0 && o.level < dm.lmax) {
          auto part = child_partition(conn, dm, p);
          CHECK(int(part.size()) ==
                int(std::pow(3.0, double(t.dim[size_t(code)])) + 0.5));
          std::array<size_t, 3> ix{0, 0, 0};
          while (true) {
            std::array<int64_t, 3> pt{0, 0, 0};
            bool interior = true;
            for (int j = 0; j < d; ++j) {
              pt[size_t(j)] = vals[size_t(j)][ix[size_t(j)]];
              int64_t lo = 2 * pb.lo[size_t(j)], hi = 2 * pb.hi[size_t(j)];
              if (lo != hi && (pt[size_t(j)] == lo || pt[size_t(j)] == hi)) interior = false;
            }
            if (interior) {
              int hits = 0;
              for (const Point& e : part) {
                Box eb = point_box(dm, e);
                bool in = true;
                for (int j = 0; j < d && in; ++j) {
                  int64_t lo = 2 * eb.lo[size_t(j)], hi = 2 * eb.hi[size_t(j)];
                  in = (lo == hi) ? pt[size_t(j)] == lo
                                  : (lo < pt[size_t(j)] && pt[size_t(j)] < hi);
                }
                if (in) ++hits;
              }
              CHECK(hits == 1);
            }
            int j = 0;
            for (; j < d; ++j) {
              if (++ix[size_t(j)] < vals[size_t(j)].size()) break;
              ix[size_t(j)] = 0;
            }
            if (j == d) break;
          }
        }
      }
    }
  }
}

TEST_CASE("support intersection property and closure/support duality") {
  Dimension dm = Dimension::make(2, 3);
  Connectivity conn = build_unitcube(dm);
  const BTables& t = btables(2);
  auto all = oracle::all_octants(dm, 1);
  for (const Octant& host : all) {
    for (int code = 0; code < t.num_codes; ++code) {
      Point c{host, t.index(code)};
      Box cb = point_box(dm, c);
      auto supp = support_set(conn, dm, c);
      // duality for dim > 0: o in supp(c) iff c in clos(o)
      if (t.dim[size_t(code)] > 0) {
        for (const Octant& o : all) {
          if (o.level != point_level(dm, c)) continue;
          bool in_supp = std::find(supp.begin(), supp.end(), o) != supp.end();
          bool in_clos = false;
          for (int b = 0; b < t.num_codes; ++b) {
            if (entity_box(dm, o, b) == cb) in_clos = true;
          }
          CHECK(in_supp == in_clos);
        }
      }
      for (const Octant& o : all) {
        Box ob = octant_box(dm, o);
        bool touch = true;
        for (int j = 0; j < 2 && touch; ++j) {
          int64_t lo = cb.lo[size_t(j)], hi = cb.hi[size_t(j)];
          if (lo == hi) {
            touch = ob.lo[size_t(j)] <= lo && lo <= ob.hi[size_t(j)];
          } else {
            touch = std::max(lo, ob.lo[size_t(j)]) < std::min(hi, ob.hi[size_t(j)]);
          }
        }
        if (!touch) continue;
        bool found = false;
        for (const Octant& s : supp) {
          if (is_descendant(dm, s, o) || is_descendant(dm, o, s)) found = true;
        }
        CHECK(found);
      }
    }
  }
}

TEST_CASE("canonical points are unique minima of their domain classes") {
  for (int d : {2, 3}) {
    Dimension dm = Dimension::make(d, 2);
    oracle::GlobalGrid grid = oracle::GlobalGrid::brick(dm, 2, 1, 1);
    Connectivity conn = build_brick(dm, 2, 1, 1);
    const BTables& t = btables(d);
    std::map<std::string, std::vector<Point>> classes;
    for (const Octant& o : oracle::all_octants(dm, 2)) {
      for (int code = 0; code < t.num_codes; ++code) {
        Point p{o, t.index(code)};
        classes[box_key(grid, dm, p)].push_back(p);
      }
    }
    for (const auto& [key, members] : classes) {
      // the canonical representative: identical for every member and equal to
      // the minimum (tree, coords, level) over the class
      Point canon = canonical_point(conn, dm, members[0]);
      const Point* best = &members[0];
      for (const Point& m : members) {
        CHECK(canonical_point(conn, dm, m) == canon);
        if (m.octant.tree != best->octant.tree
                ? m.octant.tree < best->octant.tree
                : (morton_index(dm, m.octant) != morton_index(dm, best->octant)
                       ? morton_index(dm, m.octant) < morton_index(dm, best->octant)
                       : m.octant.level < best->octant.level)) {
          best = &m;
        }
      }
      CHECK(canon == *best);
      // level of 0-points equals the minimum over the class
      if (point_dim(dm, members[0]) == 0) {
        int minlvl = 1000;
        for (const Point& m : members) minlvl = std::min(minlvl, int(m.octant.level));
        CHECK(point_level(dm, canon) == minlvl);
      }
    }
  }
}

TEST_CASE("inter-tree supports on a brick and a periodic brick") {
  Dimension dm = Dimension::make(2, 3);
  Connectivity conn = build_brick(dm, 2, 1, 1);
  uint64_t n = dm.root_len();
  // face on the interface between trees
  Octant right_col{0, 1, {n / 2, 0, 0}};
  Point iface{right_col, BIndex{BKind::face, 1}};
  auto s = support_set(conn, dm, iface);
  REQUIRE(s.size() == 2);
  CHECK(s[0].tree == 0);
  CHECK(s[1].tree == 1);
  CHECK(s[1].x[0] == 0);

  // corner on the interface: four supports, two per tree
  Point icorner{right_col, BIndex{BKind::corner, 3}};  // (n, n/2) position
  auto cs = support_set(conn, dm, icorner);
  REQUIRE(cs.size() == 4);
  CHECK(cs[0].tree == 0);
  CHECK(cs[1].tree == 0);
  CHECK(cs[2].tree == 1);
  CHECK(cs[3].tree == 1);

  // periodic in x: the domain-boundary face wraps around
  Connectivity peri = build_brick(dm, 2, 1, 1, {true, false, false});
  Octant left_col{0, 1, {0, 0, 0}};
  Point wrap_face{left_col, BIndex{BKind::face, 0}};
  auto ws = support_set(peri, dm, wrap_face);
  REQUIRE(ws.size() == 2);
  CHECK(ws[1].tree == 1);
  CHECK(ws[1].x[0] == n / 2);

  // canonical of the wrapped face is the tree-0 image
  Point canon = canonical_point(peri, dm, wrap_face);
  CHECK(canon.octant.tree == 0);
}
