#include "octforest/octant.hpp"

namespace octforest {

namespace {

// Spread the low 32 bits of x so that bit k lands at bit 2k.
uint64_t spread2(uint64_t x) {
  x &= 0xffffffffull;
  x = (x | (x << 16)) & 0x0000ffff0000ffffull;
  x = (x | (x << 8)) & 0x00ff00ff00ff00ffull;
  x = (x | (x << 4)) & 0x0f0f0f0f0f0f0f0full;
  x = (x | (x << 2)) & 0x3333333333333333ull;
  x = (x | (x << 1)) & 0x5555555555555555ull;
  return x;
}

uint64_t compact2(uint64_t x) {
  x &= 0x5555555555555555ull;
  x = (x | (x >> 1)) & 0x3333333333333333ull;
  x = (x | (x >> 2)) & 0x0f0f0f0f0f0f0f0full;
  x = (x | (x >> 4)) & 0x00ff00ff00ff00ffull;
  x = (x | (x >> 8)) & 0x0000ffff0000ffffull;
  x = (x | (x >> 16)) & 0x00000000ffffffffull;
  return x;
}

// Spread the low 21 bits of x so that bit k lands at bit 3k.
uint64_t spread3(uint64_t x) {
  x &= 0x1fffffull;
  x = (x | (x << 32)) & 0x001f00000000ffffull;
  x = (x | (x << 16)) & 0x001f0000ff0000ffull;
  x = (x | (x << 8)) & 0x100f00f00f00f00full;
  x = (x | (x << 4)) & 0x10c30c30c30c30c3ull;
  x = (x | (x << 2)) & 0x1249249249249249ull;
  return x;
}

uint64_t compact3(uint64_t x) {
  x &= 0x1249249249249249ull;
  x = (x | (x >> 2)) & 0x10c30c30c30c30c3ull;
  x = (x | (x >> 4)) & 0x100f00f00f00f00full;
  x = (x | (x >> 8)) & 0x001f0000ff0000ffull;
  x = (x | (x >> 16)) & 0x001f00000000ffffull;
  x = (x | (x >> 32)) & 0x00000000001fffffull;
  return x;
}

}  // namespace

uint64_t octant_size(Dimension dm, const Octant& o) {
  return uint64_t(1) << (dm.lmax - o.level);
}

bool octant_valid(Dimension dm, const Octant& o) {
  if (o.level < 0 || o.level > dm.lmax) return false;
  uint64_t h = uint64_t(1) << (dm.lmax - o.level);
  for (int j = 0; j < dm.d; ++j) {
    if (o.x[j] >= dm.root_len() || (o.x[j] & (h - 1)) != 0) return false;
  }
  for (int j = dm.d; j < 3; ++j) {
    if (o.x[j] != 0) return false;
  }
  return true;
}

uint64_t morton_index(Dimension dm, const Octant& o) {
  if (dm.d == 2) return spread2(o.x[0]) | (spread2(o.x[1]) << 1);
  return spread3(o.x[0]) | (spread3(o.x[1]) << 1) | (spread3(o.x[2]) << 2);
}

std::array<uint64_t, 3> morton_decode(Dimension dm, uint64_t m) {
  if (dm.d == 2) return {compact2(m), compact2(m >> 1), 0};
  return {compact3(m), compact3(m >> 1), compact3(m >> 2)};
}

Ordering compare(Dimension dm, const Octant& a, const Octant& b) {
  if (a.tree != b.tree) return a.tree < b.tree ? Ordering::less : Ordering::greater;
  uint64_t ma = morton_index(dm, a);
  uint64_t mb = morton_index(dm, b);
  if (ma != mb) return ma < mb ? Ordering::less : Ordering::greater;
  if (a.level != b.level) return a.level < b.level ? Ordering::less : Ordering::greater;
  return Ordering::equal;
}

int ancestor_id(Dimension dm, const Octant& o, int l) {
  OF_CHECK(0 < l && l <= o.level);
  uint64_t h = uint64_t(1) << (dm.lmax - l);
  int i = 0;
  for (int j = 0; j < dm.d; ++j) {
    i |= (o.x[j] & h) ? (1 << j) : 0;
  }
  return i;
}

Octant child(Dimension dm, const Octant& o, int i) {
  OF_CHECK(o.level < dm.lmax);
  OF_CHECK(0 <= i && i < dm.children());
  uint64_t h = uint64_t(1) << (dm.lmax - o.level - 1);
  Octant c = o;
  c.level = o.level + 1;
  for (int j = 0; j < dm.d; ++j) {
    if (i & (1 << j)) c.x[j] |= h;
  }
  return c;
}

Octant parent(Dimension dm, const Octant& o) {
  OF_CHECK(o.level > 0);
  return ancestor(dm, o, o.level - 1);
}

Octant ancestor(Dimension dm, const Octant& o, int level) {
  OF_CHECK(0 <= level && level <= o.level);
  uint64_t mask = ~((uint64_t(1) << (dm.lmax - level)) - 1);
  Octant a = o;
  a.level = level;
  for (int j = 0; j < dm.d; ++j) a.x[j] &= mask;
  return a;
}

bool is_descendant(Dimension dm, const Octant& o, const Octant& a) {
  if (o.tree != a.tree || a.level > o.level) return false;
  uint64_t mask = ~((uint64_t(1) << (dm.lmax - a.level)) - 1);
  for (int j = 0; j < dm.d; ++j) {
    if ((o.x[j] & mask) != a.x[j]) return false;
  }
  return true;
}

Octant root_octant(uint32_t tree) { return Octant{tree, 0, {0, 0, 0}}; }

Octant first_atom(Dimension dm, const Octant& o) {
  Octant a = o;
  a.level = dm.lmax;
  return a;
}

Octant last_atom(Dimension dm, const Octant& o) {
  uint64_t h = octant_size(dm, o);
  Octant a = o;
  a.level = dm.lmax;
  for (int j = 0; j < dm.d; ++j) a.x[j] += h - 1;
  return a;
}

AtomRange octant_range(Dimension dm, const Octant& o) {
  return AtomRange{first_atom(dm, o), last_atom(dm, o)};
}

Octant atom_predecessor(Dimension dm, const Octant& a) {
  OF_ASSERT(a.level == dm.lmax);
  uint64_t m = morton_index(dm, a);
  Octant p;
  p.level = dm.lmax;
  if (m > 0) {
    p.tree = a.tree;
    p.x = morton_decode(dm, m - 1);
  } else {
    OF_CHECK(a.tree > 0);
    p.tree = a.tree - 1;
    for (int j = 0; j < dm.d; ++j) p.x[j] = dm.root_len() - 1;
  }
  return p;
}

}  // namespace octforest
