#include "octforest/frame.hpp"

#include "octforest/boundary.hpp"

namespace octforest {

Box entity_box(Dimension dm, const Octant& o, int bcode) {
  const BTables& t = btables(dm.d);
  Box ob = octant_box(dm, o);
  Box r;
  r.tree = o.tree;
  for (int j = 0; j < dm.d; ++j) {
    switch (t.sides[size_t(bcode)][size_t(j)]) {
      case B_LO: r.lo[size_t(j)] = r.hi[size_t(j)] = ob.lo[size_t(j)]; break;
      case B_HI: r.lo[size_t(j)] = r.hi[size_t(j)] = ob.hi[size_t(j)]; break;
      default: r.lo[size_t(j)] = ob.lo[size_t(j)]; r.hi[size_t(j)] = ob.hi[size_t(j)]; break;
    }
  }
  return r;
}

int classify_entity(Dimension dm, const Box& host, const Box& entity) {
  const BTables& t = btables(dm.d);
  for (int c = 0; c < t.num_codes; ++c) {
    bool match = true;
    for (int j = 0; j < dm.d; ++j) {
      int64_t lo, hi;
      switch (t.sides[size_t(c)][size_t(j)]) {
        case B_LO: lo = hi = host.lo[size_t(j)]; break;
        case B_HI: lo = hi = host.hi[size_t(j)]; break;
        default: lo = host.lo[size_t(j)]; hi = host.hi[size_t(j)]; break;
      }
      if (entity.lo[size_t(j)] != lo || entity.hi[size_t(j)] != hi) {
        match = false;
        break;
      }
    }
    if (match) return c;
  }
  OF_CHECK(!"entity box does not match any entity of the host octant");
  return -1;
}

bool open_domains_intersect(int d, const Box& a, const Box& b) {
  for (int j = 0; j < d; ++j) {
    int64_t alo = a.lo[size_t(j)], ahi = a.hi[size_t(j)];
    int64_t blo = b.lo[size_t(j)], bhi = b.hi[size_t(j)];
    bool adeg = alo == ahi, bdeg = blo == bhi;
    if (adeg && bdeg) {
      if (alo != blo) return false;
    } else if (adeg) {
      if (!(blo < alo && alo < bhi)) return false;
    } else if (bdeg) {
      if (!(alo < blo && blo < ahi)) return false;
    } else {
      if (!(std::max(alo, blo) < std::min(ahi, bhi))) return false;
    }
  }
  return true;
}

bool closed_boxes_intersect(int d, const Box& a, const Box& b) {
  for (int j = 0; j < d; ++j) {
    if (std::max(a.lo[size_t(j)], b.lo[size_t(j)]) > std::min(a.hi[size_t(j)], b.hi[size_t(j)]))
      return false;
  }
  return true;
}

}  // namespace octforest
