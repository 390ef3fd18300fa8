#ifndef OCTFOREST_OCTANT_HPP
#define OCTFOREST_OCTANT_HPP

#include <array>
#include <compare>
#include <cstdint>

#include "octforest/common.hpp"

namespace octforest {

/// Spatial dimension (2 or 3) plus the maximum refinement level of the
/// forest.  lmax is chosen so that d * lmax <= 63 and one interleaved Morton
/// word covers the whole coordinate range.
struct Dimension {
  int d = 2;
  int lmax = 29;

  static Dimension make(int d, int lmax = -1) {
    OF_CHECK(d == 2 || d == 3);
    if (lmax < 0) lmax = (d == 2) ? 29 : 20;
    OF_CHECK(lmax >= 1 && lmax <= (d == 2 ? 31 : 21));
    return Dimension{d, lmax};
  }
  int children() const { return 1 << d; }
  uint64_t root_len() const { return uint64_t(1) << lmax; }
  friend bool operator==(const Dimension&, const Dimension&) = default;
};

/// An octant (d=3) or quadrant (d=2): a cube of side 2^(lmax-level) whose
/// coordinates are multiples of its side length.  Atoms are level-lmax
/// octants of side 1.
struct Octant {
  uint32_t tree = 0;
  int32_t level = 0;
  std::array<uint64_t, 3> x{0, 0, 0};

  friend bool operator==(const Octant&, const Octant&) = default;
};

enum class Ordering { less = -1, equal = 0, greater = 1 };

/// Closed atom interval [first, last] within one tree.
struct AtomRange {
  Octant first;
  Octant last;
};

uint64_t octant_size(Dimension dm, const Octant& o);
bool octant_valid(Dimension dm, const Octant& o);

/// Morton (z-order) index of the octant's corner: bit j of coordinate j maps
/// to bit d*k + j of the result.
uint64_t morton_index(Dimension dm, const Octant& o);

/// Inverse of morton_index at atom resolution.
std::array<uint64_t, 3> morton_decode(Dimension dm, uint64_t m);

/// SFC total order: tree index, then Morton index of the coordinates, then
/// level (ancestors precede descendants).
Ordering compare(Dimension dm, const Octant& a, const Octant& b);
inline bool octant_less(Dimension dm, const Octant& a, const Octant& b) {
  return compare(dm, a, b) == Ordering::less;
}
inline bool octant_leq(Dimension dm, const Octant& a, const Octant& b) {
  return compare(dm, a, b) != Ordering::greater;
}

/// Child index at level l of o's ancestor chain: bit j set iff coordinate j
/// has bit (lmax - l) set.  Requires 0 < l <= o.level.
int ancestor_id(Dimension dm, const Octant& o, int l);

Octant child(Dimension dm, const Octant& o, int i);
Octant parent(Dimension dm, const Octant& o);
Octant ancestor(Dimension dm, const Octant& o, int level);
bool is_descendant(Dimension dm, const Octant& o, const Octant& a);

Octant root_octant(uint32_t tree);

/// First and last atoms among o's descendants.
AtomRange octant_range(Dimension dm, const Octant& o);
Octant first_atom(Dimension dm, const Octant& o);
Octant last_atom(Dimension dm, const Octant& o);

/// Atom immediately before a in the total order; a must not be the first
/// atom of tree 0.
Octant atom_predecessor(Dimension dm, const Octant& a);

}  // namespace octforest

#endif
