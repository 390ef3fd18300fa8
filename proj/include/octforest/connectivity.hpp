#ifndef OCTFOREST_CONNECTIVITY_HPP
#define OCTFOREST_CONNECTIVITY_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "octforest/boundary.hpp"
#include "octforest/frame.hpp"
#include "octforest/octant.hpp"

namespace octforest {

/// One side of an inter-tree face gluing.  orient is used for d=2 only:
/// 0 identifies the tangential coordinates directly, 1 reverses them.
struct FaceLink {
  uint32_t tree = 0;
  int face = 0;
  int orient = 0;
  friend bool operator==(const FaceLink&, const FaceLink&) = default;
};

struct EntityLink {
  uint32_t tree = 0;
  int index = 0;  // corner or edge index in the neighbor tree
  friend bool operator==(const EntityLink&, const EntityLink&) = default;
};

/// The replicated macro layer: tree count and inter-tree adjacency.  3D
/// connectivities are restricted to translation-only (brick) gluings; 2D
/// face links may flip orientation.  Corner and edge links must agree with
/// the composition of face links (checked by validate).
struct Connectivity {
  Dimension dim;
  uint32_t num_trees = 0;
  // per tree, per face
  std::vector<std::array<std::optional<FaceLink>, 6>> face_links;
  // per tree, per corner: diagonal neighbors (reachable across all axes)
  std::vector<std::array<std::vector<EntityLink>, 8>> corner_links;
  // per tree, per edge (d=3)
  std::vector<std::array<std::vector<EntityLink>, 12>> edge_links;
};

Connectivity build_unitcube(Dimension dm);

/// m x n (x p) grid of unit trees with optional periodic wrap per axis.
Connectivity build_brick(Dimension dm, int m, int n, int p = 1,
                         std::array<bool, 3> periodic = {false, false, false});

/// An octant step across one face of its tree together with the coordinate
/// map from the source tree's frame into the target tree's frame.
struct NeighborStep {
  Octant oct;
  FrameMap map;
};

/// Same-size neighbor of o across the given axis/direction; crosses the tree
/// boundary through the face link when needed.  Empty on domain boundary.
std::optional<NeighborStep> face_step(const Connectivity& c, Dimension dm, const Octant& o,
                                      int axis, int dir);

/// Diagonal neighbor across every axis in `mask` (directions from `dirs`),
/// obtained by composing face steps; tries all step orders and returns the
/// first that stays inside the domain.
std::optional<NeighborStep> neighbor_across(const Connectivity& c, Dimension dm, const Octant& o,
                                            int mask, const std::array<int, 3>& dirs);

/// Same-size octant directly across the given macro face of o's tree;
/// requires o to touch that face.
Octant transform_across_face(const Connectivity& c, Dimension dm, const Octant& o, int face);

/// Same-size octant diagonally across the given macro corner (or, for d=3,
/// edge) of o's tree; requires o to touch the entity.
Octant transform_across_corner(const Connectivity& c, Dimension dm, const Octant& o, int corner);
Octant transform_across_edge(const Connectivity& c, Dimension dm, const Octant& o, int edge);

/// Consistency diagnostics; empty means valid.
std::vector<std::string> validate(const Connectivity& c);

std::string to_json(const Connectivity& c);
Connectivity connectivity_from_json(const std::string& text);

}  // namespace octforest

#endif
