#ifndef OCTFOREST_FOREST_HPP
#define OCTFOREST_FOREST_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "octforest/connectivity.hpp"
#include "octforest/octant.hpp"
#include "octforest/transport.hpp"

namespace octforest {

/// One rank's view of a distributed forest: the replicated macro layer, the
/// rank's sorted leaves per tree, and the replicated first-atoms array
/// (P + 1 entries, the last being the terminal marker with tree index K).
struct Forest {
  std::shared_ptr<const Connectivity> conn;
  Dimension dim;
  int rank = 0;
  int num_ranks = 1;
  std::vector<std::vector<Octant>> leaves;
  std::vector<Octant> first_atoms;

  uint32_t num_trees() const { return conn->num_trees; }
  size_t num_local() const {
    size_t n = 0;
    for (const auto& t : leaves) n += t.size();
    return n;
  }
  /// Linear index of leaf i of tree t within the rank-local leaf order.
  size_t linear_index(uint32_t tree, size_t i) const {
    size_t off = 0;
    for (uint32_t t = 0; t < tree; ++t) off += leaves[t].size();
    return off + i;
  }
  const Octant& local_leaf(size_t linear) const {
    for (const auto& tr : leaves) {
      if (linear < tr.size()) return tr[linear];
      linear -= tr.size();
    }
    OF_CHECK(!"leaf index out of range");
    return leaves[0][0];
  }
};

using OctantPredicate = std::function<bool(const Octant&)>;

/// Uniformly refined forest at the given level, leaves split evenly over
/// num_ranks contiguous sections; requires at least one leaf per rank.
Forest new_uniform(std::shared_ptr<const Connectivity> conn, int num_ranks, int rank, int level);

/// Replace every matched leaf by its 2^d children; with recursive = true the
/// children are examined again.  Refinement past lmax is silently clamped.
void refine(Forest& f, const OctantPredicate& pred, bool recursive);

/// Replace complete sibling families whose members all match by the parent.
void coarsen(Forest& f, const OctantPredicate& pred);

/// Rank whose subdomain contains the atom (binary search in first-atoms).
int locate_rank(const Forest& f, const Octant& atom);

/// First and last atoms of rank q's subdomain.
AtomRange rank_range(const Forest& f, int q);

/// Index of the leaf equal to o within its tree's array, or -1.
int64_t find_leaf(const Forest& f, const Octant& o);

/// Index of the leaf that is an ancestor-or-equal of the given atom, or -1.
int64_t find_containing_leaf(const std::vector<Octant>& sorted_leaves, Dimension dm,
                             const Octant& atom);

/// Redistribute leaves so rank counts differ by at most one, preserving the
/// global order, then rebuild the first-atoms array.  Collective.
void partition_even(Forest& f, Comm& comm);

/// Refine until any two leaves with intersecting closures differ by at most
/// one level, across faces, edges, corners, and tree boundaries.  Only
/// refines; the result is the unique minimal balanced refinement.  Collective.
void balance(Forest& f, Comm& comm);

/// Leaf-level sanity checks (sorted, non-overlapping, in range).
std::vector<std::string> forest_diagnostics(const Forest& f);

std::string forest_to_json(const Forest& f);

}  // namespace octforest

#endif
