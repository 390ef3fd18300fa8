#ifndef OCTFOREST_LNODES_HPP
#define OCTFOREST_LNODES_HPP

#include <vector>

#include "octforest/iterate.hpp"

namespace octforest {

/// Rank-independent identity of a global node: the canonical point hosting
/// it plus the node's position among the point's nodes.
struct NodeId {
  uint32_t tree = 0;
  int32_t bcode = 0;
  int32_t level = 0;
  uint32_t intra = 0;
  std::array<uint64_t, 3> x{0, 0, 0};
  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct GlobalNode {
  NodeId id;
  int64_t index = -1;  // final global index
  int owner = 0;
  int64_t owning_leaf = -1;  // local leaf index when owner == rank
  std::vector<int> sharers;  // referencing ranks including the owner (owned nodes)
};

/// Result of the node numbering: the rank's global-node array N_p and the
/// per-leaf element-node table E_p mapping each of the (n+1)^d element nodes
/// to a position in N_p.
struct LnodesResult {
  int order = 1;
  int nodes_per_leaf = 0;
  uint64_t num_global = 0;
  uint64_t owned_count = 0;
  uint64_t owned_offset = 0;
  std::vector<GlobalNode> nodes;
  std::vector<int64_t> element_nodes;  // num_local x nodes_per_leaf

  int64_t element_node(size_t leaf, int k) const {
    return element_nodes[leaf * size_t(nodes_per_leaf) + size_t(k)];
  }
};

/// Rank owning a partition point and its nodes: the smallest rank whose
/// subdomain touches the point, computed without communication.
int determine_owner_process(const Forest& f, const Point& c);

/// Leaves that remotely reference the point's nodes across nonconforming
/// interfaces, reconstructed from the complete leaf support set under the
/// 2:1 balance condition.
std::vector<Octant> reconstruct_remote(const Forest& f, const Point& c,
                                       std::span<const Octant> leafsupp);

/// Assign final global indices: owned nodes are numbered by first appearance
/// in the element-node sweep, offset by an allgather prefix sum, then pushed
/// to every sharer in one point-to-point round.  Collective.
void global_numbering(const Forest& f, Comm& comm, LnodesResult& r);

/// Globally unique numbering of the order-n C0 nodes over a 2:1 balanced
/// forest with its full ghost layer.  Collective (one allgather plus one
/// point-to-point round).
LnodesResult lnodes(const Forest& f, const GhostLayer& ghost, Comm& comm, int order);

/// The per-axis hanging association: which coarse node index each fine node
/// of a half-interval maps to (coincident positions first, the rest in
/// order).  Exposed for verification.
std::vector<int> hanging_map_1d(int order, int child_bit);

}  // namespace octforest

#endif
