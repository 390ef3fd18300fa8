#ifndef OCTFOREST_FRAME_HPP
#define OCTFOREST_FRAME_HPP

#include <array>
#include <cstdint>

#include "octforest/octant.hpp"

namespace octforest {

/// A closed axis-aligned box on the vertex grid of one tree.  Coordinates are
/// signed so that boxes can temporarily leave [0, 2^lmax] while stepping
/// across tree boundaries.  Degenerate axes have lo == hi.
struct Box {
  uint32_t tree = 0;
  std::array<int64_t, 3> lo{0, 0, 0};
  std::array<int64_t, 3> hi{0, 0, 0};

  friend bool operator==(const Box&, const Box&) = default;
};

/// Signed axis permutation between two tree coordinate frames:
/// target[perm[j]] = off[j] - src[j] if flip[j], else off[j] + src[j].
/// 3D connectivities only ever produce translations (perm = id, no flips);
/// 2D face links may permute and reflect.
struct FrameMap {
  std::array<int8_t, 3> perm{0, 1, 2};
  std::array<bool, 3> flip{false, false, false};
  std::array<int64_t, 3> off{0, 0, 0};
  uint32_t target_tree = 0;

  static FrameMap identity(uint32_t tree) {
    FrameMap f;
    f.target_tree = tree;
    return f;
  }

  std::array<int64_t, 3> apply(int d, const std::array<int64_t, 3>& x) const {
    std::array<int64_t, 3> r{0, 0, 0};
    for (int j = 0; j < d; ++j) {
      r[size_t(perm[j])] = flip[j] ? off[j] - x[j] : off[j] + x[j];
    }
    return r;
  }

  Box apply_box(int d, const Box& b) const {
    Box r;
    r.tree = target_tree;
    std::array<int64_t, 3> a = apply(d, b.lo);
    std::array<int64_t, 3> c = apply(d, b.hi);
    for (int j = 0; j < d; ++j) {
      int t = perm[j];
      r.lo[size_t(t)] = std::min(a[size_t(t)], c[size_t(t)]);
      r.hi[size_t(t)] = std::max(a[size_t(t)], c[size_t(t)]);
    }
    return r;
  }

  /// g.after(f) maps through f first, then g.
  FrameMap after(int d, const FrameMap& f) const {
    FrameMap r;
    r.target_tree = target_tree;
    for (int j = 0; j < d; ++j) {
      int k = f.perm[j];
      r.perm[j] = perm[size_t(k)];
      r.flip[j] = f.flip[j] != flip[size_t(k)];
      r.off[j] = flip[size_t(k)] ? off[size_t(k)] - f.off[j] : off[size_t(k)] + f.off[j];
    }
    return r;
  }

  FrameMap inverse(int d, uint32_t source_tree) const {
    FrameMap r;
    r.target_tree = source_tree;
    for (int j = 0; j < d; ++j) {
      int k = perm[j];
      r.perm[size_t(k)] = int8_t(j);
      r.flip[size_t(k)] = flip[j];
      r.off[size_t(k)] = flip[j] ? off[j] : -off[j];
    }
    return r;
  }

  friend bool operator==(const FrameMap&, const FrameMap&) = default;
};

/// Closed box [x, x + size]^d of an octant on the vertex grid.
inline Box octant_box(Dimension dm, const Octant& o) {
  Box b;
  b.tree = o.tree;
  int64_t h = int64_t(octant_size(dm, o));
  for (int j = 0; j < dm.d; ++j) {
    b.lo[size_t(j)] = int64_t(o.x[size_t(j)]);
    b.hi[size_t(j)] = b.lo[size_t(j)] + h;
  }
  return b;
}

/// Octant of the given level whose closed box equals b (which must be a cube
/// of the right size inside the tree).
inline Octant box_octant(Dimension dm, const Box& b, int level) {
  Octant o;
  o.tree = b.tree;
  o.level = level;
  for (int j = 0; j < dm.d; ++j) {
    OF_ASSERT(b.lo[size_t(j)] >= 0);
    o.x[size_t(j)] = uint64_t(b.lo[size_t(j)]);
  }
  OF_ASSERT(octant_valid(dm, o));
  return o;
}

inline bool box_inside_tree(Dimension dm, const Box& b) {
  int64_t n = int64_t(dm.root_len());
  for (int j = 0; j < dm.d; ++j) {
    if (b.lo[size_t(j)] < 0 || b.hi[size_t(j)] > n) return false;
  }
  return true;
}

inline int box_dim(int d, const Box& b) {
  int n = 0;
  for (int j = 0; j < d; ++j) {
    if (b.lo[size_t(j)] < b.hi[size_t(j)]) ++n;
  }
  return n;
}

/// Closed box of dom_b(o) for boundary-or-volume code `bcode`.
Box entity_box(Dimension dm, const Octant& o, int bcode);

/// Boundary-or-volume code of an entity box relative to its host octant box;
/// the entity must be one of the host's entities.
int classify_entity(Dimension dm, const Box& host, const Box& entity);

/// Open-domain intersection test of two entity boxes in the same tree: the
/// open products intersect iff on every axis the closed intervals overlap and
/// no degenerate coordinate falls strictly outside or on the far boundary of
/// the other's span.  Both boxes closed; returns dom(a) cap dom(b) != empty.
bool open_domains_intersect(int d, const Box& a, const Box& b);

/// Closed-box intersection (touching counts).
bool closed_boxes_intersect(int d, const Box& a, const Box& b);

}  // namespace octforest

#endif
