#ifndef OCTFOREST_SEARCH_HPP
#define OCTFOREST_SEARCH_HPP

#include <functional>
#include <span>

#include "octforest/forest.hpp"

namespace octforest {

/// Partition a sorted array of strict descendants of `a` into the 2^d
/// contiguous slices belonging to a's children: an efficient simultaneous
/// binary search.  On return k[i]..k[i+1] (exclusive) delimits the
/// descendants of child i; k must hold 2^d + 1 entries.  The elements are
/// read through `get`, so callers can split arrays of richer records.
template <class T, class GetOctant>
void split_array(Dimension dm, std::span<const T> a_sorted, const Octant& a, GetOctant&& get,
                 std::span<size_t> k) {
  int nc = dm.children();
  OF_CHECK(k.size() == size_t(nc) + 1);
  OF_CHECK(a.level < dm.lmax);
#ifndef NDEBUG
  for (size_t idx = 0; idx < a_sorted.size(); ++idx) {
    const Octant& o = get(a_sorted[idx]);
    OF_ASSERT(is_descendant(dm, o, a) && !(o == a));
    if (idx > 0) OF_ASSERT(octant_less(dm, get(a_sorted[idx - 1]), o));
  }
#endif
  k[0] = 0;
  for (int i = 1; i <= nc; ++i) k[size_t(i)] = a_sorted.size();
  for (int i = 1; i < nc; ++i) {
    size_t m = k[size_t(i) - 1];
    while (m < k[size_t(i)]) {
      size_t n = m + (k[size_t(i)] - m) / 2;
      int c = ancestor_id(dm, get(a_sorted[n]), a.level + 1);
      if (c < i) {
        m = n + 1;
      } else {
        for (int j = i; j <= c; ++j) k[size_t(j)] = n;
      }
    }
  }
}

inline void split_array(Dimension dm, std::span<const Octant> a_sorted, const Octant& a,
                        std::span<size_t> k) {
  split_array(dm, a_sorted, a, [](const Octant& o) -> const Octant& { return o; }, k);
}

/// Lazy matching callback: must return true whenever some descendant leaf of
/// the octant strictly matches the query (false positives allowed).  With
/// is_leaf == true the call is the user action for a strictly matched leaf.
using MatchCallback = std::function<bool(const Octant& oct, bool is_leaf, int query)>;

struct SearchStats {
  uint64_t match_calls = 0;       // non-leaf invocations
  uint64_t leaf_match_calls = 0;  // is_leaf == true invocations
  uint64_t split_calls = 0;
  // octants descended into with at least one live query: the per-octant
  // setup work a lazy matcher amortizes over its queries
  uint64_t octant_visits = 0;
};

/// Multi-query recursive leaf search with lazy exclusion over the local
/// leaves of every tree.  Communication-free; each leaf is queried on
/// exactly the rank that owns it.
void search(const Forest& forest, int num_queries, const MatchCallback& match,
            SearchStats* stats = nullptr);

}  // namespace octforest

#endif
