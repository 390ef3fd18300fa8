#ifndef OCTFOREST_POINT_HPP
#define OCTFOREST_POINT_HPP

#include <vector>

#include "octforest/boundary.hpp"
#include "octforest/connectivity.hpp"
#include "octforest/frame.hpp"
#include "octforest/octant.hpp"

namespace octforest {

/// A point: an octant paired with one of its boundary entities (or the
/// volume alias).  Two points are equal iff their domains coincide; use
/// canonical_point to obtain the unique representative.
struct Point {
  Octant octant;
  BIndex b;
  friend bool operator==(const Point&, const Point&) = default;
};

inline int point_code(Dimension dm, const Point& p) { return btables(dm.d).code(p.b); }

inline int point_dim(Dimension dm, const Point& p) {
  return btables(dm.d).dim[size_t(point_code(dm, p))];
}

inline Box point_box(Dimension dm, const Point& p) {
  return entity_box(dm, p.octant, point_code(dm, p));
}

/// Refinement level of a point: the host octant's level for dim > 0, the
/// minimum level of any octant having the vertex as a corner for 0-points.
int point_level(Dimension dm, const Point& p);

/// One same-level octant around a point, with the coordinate map from the
/// anchor octant's tree frame and the entity code the point has within it.
struct SupportSlot {
  Octant oct;
  FrameMap map;
  int bcode = 0;
};

/// Octants of `level` whose closures contain the point (o, bcode), one slot
/// per reachable orthant, sorted by the octant total order.  For entities of
/// dimension > 0, level must equal o.level; 0-points accept any
/// level >= point_level (atom slots use level == lmax).
std::vector<SupportSlot> point_support_slots(const Connectivity& c, Dimension dm, const Octant& o,
                                             int bcode, int level);

/// Unique minimal representative: smallest (tree, coordinates, level) among
/// all equal tuples, consulting the connectivity across tree boundaries.
Point canonical_point(const Connectivity& c, Dimension dm, const Point& p);

/// Canonical representative plus the coordinate map from the argument's tree
/// frame into the canonical octant's tree frame.
struct CanonicalRep {
  Point point;
  FrameMap to_canonical;
};
CanonicalRep canonical_point_frame(const Connectivity& c, Dimension dm, const Point& p);

std::vector<Point> closure_set(const Connectivity& c, Dimension dm, const Point& p);
std::vector<Point> boundary_set(const Connectivity& c, Dimension dm, const Point& p);

/// Support octants (deduplicated, total order).  Sizes for interior points:
/// volume 1, face 2, edge 4, corner 2^d.
std::vector<Octant> support_set(const Connectivity& c, Dimension dm, const Point& p);

/// Atoms whose closures contain a 0-point.
std::vector<Octant> atom_support_set(const Connectivity& c, Dimension dm, const Point& p);

/// All 3^dim points one level finer whose domains partition dom(p); empty
/// for 0-points.
std::vector<Point> child_partition(const Connectivity& c, Dimension dm, const Point& p);

/// The 2^dim same-dimension children (a subset of the child partition).
std::vector<Point> point_children(const Connectivity& c, Dimension dm, const Point& p);

/// Stable key for hashing/dedup of canonical points.
uint64_t point_key(Dimension dm, const Point& p);

}  // namespace octforest

#endif
