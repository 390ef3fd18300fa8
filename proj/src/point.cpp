#include "octforest/point.hpp"

#include <algorithm>
#include <bit>

namespace octforest {

namespace {

int vertex_level(Dimension dm, const Box& box) {
  // smallest level whose grid contains the vertex
  int k = dm.lmax;
  for (int j = 0; j < dm.d; ++j) {
    uint64_t v = uint64_t(box.lo[size_t(j)]);
    int tz = v == 0 ? dm.lmax : std::countr_zero(v);
    k = std::min(k, tz);
  }
  return dm.lmax - k;
}

void sort_slots(Dimension dm, std::vector<SupportSlot>& slots) {
  std::sort(slots.begin(), slots.end(), [&](const SupportSlot& a, const SupportSlot& b) {
    Ordering o = compare(dm, a.oct, b.oct);
    if (o != Ordering::equal) return o == Ordering::less;
    return a.bcode < b.bcode;
  });
  slots.erase(std::unique(slots.begin(), slots.end(),
                          [](const SupportSlot& a, const SupportSlot& b) {
                            return a.oct == b.oct && a.bcode == b.bcode;
                          }),
              slots.end());
}

}  // namespace

int point_level(Dimension dm, const Point& p) {
  if (point_dim(dm, p) > 0) return p.octant.level;
  return vertex_level(dm, point_box(dm, p));
}

std::vector<SupportSlot> point_support_slots(const Connectivity& c, Dimension dm, const Octant& o,
                                             int bcode, int level) {
  const BTables& t = btables(dm.d);
  int dim = t.dim[size_t(bcode)];
  Box ebox = entity_box(dm, o, bcode);
  std::vector<SupportSlot> slots;

  if (dim > 0) {
    OF_CHECK(level == o.level);
    std::array<int, 3> dirs{0, 0, 0};
    int normal_mask = 0;
    for (int a = 0; a < dm.d; ++a) {
      uint8_t s = t.sides[size_t(bcode)][size_t(a)];
      if (s == B_SPAN) continue;
      dirs[size_t(a)] = (s == B_HI) ? 1 : -1;
      normal_mask |= 1 << a;
    }
    for (int sub = normal_mask;; sub = (sub - 1) & normal_mask) {
      auto step = neighbor_across(c, dm, o, sub, dirs);
      if (step) {
        Box img = step->map.apply_box(dm.d, ebox);
        int code = classify_entity(dm, octant_box(dm, step->oct), img);
        slots.push_back(SupportSlot{step->oct, step->map, code});
      }
      if (sub == 0) break;
    }
  } else {
    OF_CHECK(level <= dm.lmax);
    OF_CHECK(level >= vertex_level(dm, ebox));
    // inside atom touching the vertex, then its ancestor at `level`
    Box ob = octant_box(dm, o);
    Octant atom;
    atom.tree = o.tree;
    atom.level = dm.lmax;
    for (int j = 0; j < dm.d; ++j) {
      int64_t v = ebox.lo[size_t(j)];
      atom.x[size_t(j)] = uint64_t(v == ob.hi[size_t(j)] ? v - 1 : v);
    }
    Octant base = ancestor(dm, atom, level);
    Box bb = octant_box(dm, base);
    std::array<int, 3> dirs{0, 0, 0};
    for (int j = 0; j < dm.d; ++j) {
      dirs[size_t(j)] = (bb.lo[size_t(j)] == ebox.lo[size_t(j)]) ? -1 : 1;
    }
    for (int sub = 0; sub < (1 << dm.d); ++sub) {
      auto step = neighbor_across(c, dm, base, sub, dirs);
      if (step) {
        Box img = step->map.apply_box(dm.d, ebox);
        int code = classify_entity(dm, octant_box(dm, step->oct), img);
        slots.push_back(SupportSlot{step->oct, step->map, code});
      }
    }
  }
  sort_slots(dm, slots);
  return slots;
}

CanonicalRep canonical_point_frame(const Connectivity& c, Dimension dm, const Point& p) {
  const BTables& t = btables(dm.d);
  int code = point_code(dm, p);
  int dim = t.dim[size_t(code)];
  if (dim == dm.d) {
    return CanonicalRep{Point{p.octant, BIndex{BKind::volume, 0}},
                        FrameMap::identity(p.octant.tree)};
  }
  int level = (dim > 0) ? p.octant.level : point_level(dm, p);
  auto slots = point_support_slots(c, dm, p.octant, code,
                                   dim > 0 ? p.octant.level : dm.lmax);
  OF_ASSERT(!slots.empty());
  bool have = false;
  Octant best;
  int best_code = 0;
  FrameMap best_map;
  for (const auto& s : slots) {
    Octant cand = s.oct;
    int cand_code = s.bcode;
    if (dim == 0 && cand.level != level) {
      cand = ancestor(dm, cand, level);
      Box img = s.map.apply_box(dm.d, point_box(dm, p));
      cand_code = classify_entity(dm, octant_box(dm, cand), img);
    }
    if (!have || octant_less(dm, cand, best) ||
        (cand == best && cand_code < best_code)) {
      have = true;
      best = cand;
      best_code = cand_code;
      best_map = s.map;
    }
  }
  return CanonicalRep{Point{best, t.index(best_code)}, best_map};
}

Point canonical_point(const Connectivity& c, Dimension dm, const Point& p) {
  return canonical_point_frame(c, dm, p).point;
}

std::vector<Point> closure_set(const Connectivity& c, Dimension dm, const Point& p) {
  const BTables& t = btables(dm.d);
  int code = point_code(dm, p);
  uint32_t mask = t.closure[size_t(code)];
  std::vector<Point> out;
  for (int b = 0; b < t.num_codes; ++b) {
    if (mask & (uint32_t(1) << b)) {
      out.push_back(canonical_point(c, dm, Point{p.octant, t.index(b)}));
    }
  }
  return out;
}

std::vector<Point> boundary_set(const Connectivity& c, Dimension dm, const Point& p) {
  const BTables& t = btables(dm.d);
  int code = point_code(dm, p);
  uint32_t mask = t.closure[size_t(code)] & ~(uint32_t(1) << code);
  std::vector<Point> out;
  for (int b = 0; b < t.num_codes; ++b) {
    if (mask & (uint32_t(1) << b)) {
      out.push_back(canonical_point(c, dm, Point{p.octant, t.index(b)}));
    }
  }
  return out;
}

std::vector<Octant> support_set(const Connectivity& c, Dimension dm, const Point& p) {
  int code = point_code(dm, p);
  int dim = btables(dm.d).dim[size_t(code)];
  int level = (dim > 0) ? p.octant.level : point_level(dm, p);
  auto slots = point_support_slots(c, dm, p.octant, code, level);
  std::vector<Octant> out;
  for (const auto& s : slots) {
    if (out.empty() || !(out.back() == s.oct)) out.push_back(s.oct);
  }
  return out;
}

std::vector<Octant> atom_support_set(const Connectivity& c, Dimension dm, const Point& p) {
  OF_CHECK(point_dim(dm, p) == 0);
  auto slots = point_support_slots(c, dm, p.octant, point_code(dm, p), dm.lmax);
  std::vector<Octant> out;
  for (const auto& s : slots) {
    if (out.empty() || !(out.back() == s.oct)) out.push_back(s.oct);
  }
  return out;
}

namespace {

// Enumerate the 3^dim (or 2^dim for children only) sub-boxes of a closed
// entity box one refinement level down.
std::vector<Box> subdivide_box(int d, const Box& box, bool children_only) {
  std::vector<Box> out;
  std::array<int, 3> choice{0, 0, 0};
  while (true) {
    Box piece = box;
    bool ok = true;
    for (int j = 0; j < d && ok; ++j) {
      int64_t lo = box.lo[size_t(j)], hi = box.hi[size_t(j)];
      if (lo == hi) {
        if (choice[size_t(j)] != 0) ok = false;
        continue;
      }
      int64_t mid = lo + (hi - lo) / 2;
      switch (choice[size_t(j)]) {
        case 0: piece.hi[size_t(j)] = mid; break;
        case 1: piece.lo[size_t(j)] = mid; break;
        case 2:
          if (children_only) ok = false;
          piece.lo[size_t(j)] = piece.hi[size_t(j)] = mid;
          break;
      }
    }
    if (ok) out.push_back(piece);
    int j = 0;
    for (; j < d; ++j) {
      if (++choice[size_t(j)] < 3) break;
      choice[size_t(j)] = 0;
    }
    if (j == d) break;
  }
  return out;
}

std::vector<Point> partition_points(const Connectivity& c, Dimension dm, const Point& p,
                                    bool children_only) {
  int dim = point_dim(dm, p);
  if (dim == 0) return {};
  OF_CHECK(point_level(dm, p) < dm.lmax);
  Box box = point_box(dm, p);
  std::vector<Point> out;
  for (const Box& piece : subdivide_box(dm.d, box, children_only)) {
    // host the piece in the adjacent child of the octant
    bool placed = false;
    for (int i = 0; i < dm.children() && !placed; ++i) {
      Octant ch = child(dm, p.octant, i);
      Box cb = octant_box(dm, ch);
      bool inside = true;
      for (int j = 0; j < dm.d; ++j) {
        if (piece.lo[size_t(j)] < cb.lo[size_t(j)] || piece.hi[size_t(j)] > cb.hi[size_t(j)]) {
          inside = false;
          break;
        }
      }
      if (inside) {
        int code = classify_entity(dm, cb, piece);
        out.push_back(canonical_point(c, dm, Point{ch, btables(dm.d).index(code)}));
        placed = true;
      }
    }
    OF_ASSERT(placed);
  }
  return out;
}

}  // namespace

std::vector<Point> child_partition(const Connectivity& c, Dimension dm, const Point& p) {
  return partition_points(c, dm, p, false);
}

std::vector<Point> point_children(const Connectivity& c, Dimension dm, const Point& p) {
  return partition_points(c, dm, p, true);
}

uint64_t point_key(Dimension dm, const Point& p) {
  uint64_t h = fnv1a(nullptr, 0);
  h = hash_combine(h, p.octant.tree);
  h = hash_combine(h, uint64_t(p.octant.level));
  for (int j = 0; j < dm.d; ++j) h = hash_combine(h, p.octant.x[size_t(j)]);
  h = hash_combine(h, uint64_t(point_code(dm, p)));
  return h;
}

}  // namespace octforest
