#ifndef OCTFOREST_GHOST_HPP
#define OCTFOREST_GHOST_HPP

#include <span>
#include <vector>

#include "octforest/forest.hpp"
#include "octforest/point.hpp"

namespace octforest {

struct GhostOctant {
  Octant oct;
  int owner = 0;
};

/// One rank's ghost layer: the remote leaves whose boundaries touch this
/// rank's subdomain at codimension <= codim, globally sorted, plus the
/// mirror bookkeeping needed to ship per-leaf data to the neighbors.
struct GhostLayer {
  int codim = 0;
  std::vector<GhostOctant> ghosts;
  std::vector<size_t> tree_offsets;  // num_trees + 1
  // ranks this rank exchanges with (codimension-d adjacency; symmetric)
  std::vector<int> neighbor_ranks;
  // per neighbor: linear local leaf indices sent there, in leaf order
  std::vector<std::vector<uint32_t>> mirrors;

  std::span<const GhostOctant> tree_ghosts(uint32_t t) const {
    return std::span<const GhostOctant>(ghosts.data() + tree_offsets[t],
                                        tree_offsets[t + 1] - tree_offsets[t]);
  }
};

/// Boundary entities of s (restricted to query_mask) whose open domains meet
/// the closed union of the atom domains in [first, last]; both atoms must
/// descend from s.
uint32_t find_range_boundaries(Dimension dm, const Octant& first, const Octant& last,
                               const Octant& s, uint32_t query_mask);

/// Ranks q != rank whose closed subdomains touch a boundary point of the
/// local leaf o of dimension >= d - codim.
std::vector<int> add_ghost(const Forest& f, const Octant& o, int codim);

struct GhostOptions {
  bool insulation_fast_path = true;
};

/// Collective construction of the codim-ghost layer.  Every rank sends each
/// qualifying local leaf to each destination once; the exchange pattern is
/// the symmetric codimension-d adjacency, so no handshake is needed.
GhostLayer build_ghost(const Forest& f, Comm& comm, int codim, GhostOptions opts = {});

/// Ship elem_size bytes per local leaf to the ranks ghosting it; returns
/// elem_size bytes per ghost, aligned with the ghost array.  Collective.
std::vector<std::byte> exchange_ghost_data(const Forest& f, const GhostLayer& gl, Comm& comm,
                                           std::span<const std::byte> local_payload,
                                           size_t elem_size);

}  // namespace octforest

#endif
