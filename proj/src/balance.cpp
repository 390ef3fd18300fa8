#include <algorithm>

#include "octforest/forest.hpp"
#include "octforest/ghost.hpp"

namespace octforest {

namespace {

// Merge local and ghost leaves of one tree, both already sorted.
std::vector<Octant> merged_tree(const Forest& f, const GhostLayer& gl, uint32_t t) {
  std::vector<Octant> out;
  auto ghosts = gl.tree_ghosts(t);
  const auto& local = f.leaves[t];
  out.reserve(local.size() + ghosts.size());
  size_t i = 0, j = 0;
  while (i < local.size() || j < ghosts.size()) {
    if (j == ghosts.size() ||
        (i < local.size() && octant_less(f.dim, local[i], ghosts[j].oct))) {
      out.push_back(local[i++]);
    } else {
      out.push_back(ghosts[j++].oct);
    }
  }
  return out;
}

// Does any leaf more than one level finer than o touch o's closed box?
bool needs_split(const Forest& f, const std::vector<std::vector<Octant>>& merged,
                 const Octant& o) {
  Dimension dm = f.dim;
  if (o.level + 1 >= dm.lmax) return false;  // nothing can be two levels finer
  const Connectivity& conn = *f.conn;
  std::array<int, 3> offs{-1, -1, -1};
  while (true) {
    bool zero = true;
    for (int a = 0; a < dm.d; ++a) zero = zero && offs[size_t(a)] == 0;
    if (!zero) {
      int mask = 0;
      std::array<int, 3> dirs{0, 0, 0};
      for (int a = 0; a < dm.d; ++a) {
        if (offs[size_t(a)] != 0) {
          mask |= 1 << a;
          dirs[size_t(a)] = offs[size_t(a)];
        }
      }
      auto step = neighbor_across(conn, dm, o, mask, dirs);
      if (step) {
        const std::vector<Octant>& arr = merged[step->oct.tree];
        AtomRange r = octant_range(dm, step->oct);
        auto lo = std::lower_bound(arr.begin(), arr.end(), r.first,
                                   [&](const Octant& a, const Octant& b) {
                                     return octant_less(dm, a, b);
                                   });
        Box obox = step->map.apply_box(dm.d, octant_box(dm, o));
        for (auto it = lo; it != arr.end() && octant_leq(dm, *it, r.last); ++it) {
          if (it->level > o.level + 1 &&
              closed_boxes_intersect(dm.d, octant_box(dm, *it), obox)) {
            return true;
          }
        }
      }
    }
    int j = 0;
    for (; j < dm.d; ++j) {
      if (++offs[size_t(j)] <= 1) break;
      offs[size_t(j)] = -1;
    }
    if (j == dm.d) return false;
  }
}

}  // namespace

void balance(Forest& f, Comm& comm) {
  Dimension dm = f.dim;
  while (true) {
    GhostLayer gl = build_ghost(f, comm, dm.d);
    std::vector<std::vector<Octant>> merged(f.num_trees());
    for (uint32_t t = 0; t < f.num_trees(); ++t) merged[t] = merged_tree(f, gl, t);

    uint64_t changed = 0;
    for (uint32_t t = 0; t < f.num_trees(); ++t) {
      std::vector<Octant> out;
      out.reserve(f.leaves[t].size());
      for (const Octant& o : f.leaves[t]) {
        if (needs_split(f, merged, o)) {
          for (int i = 0; i < dm.children(); ++i) out.push_back(child(dm, o, i));
          ++changed;
        } else {
          out.push_back(o);
        }
      }
      f.leaves[t].swap(out);
    }
    auto counts = comm.allgather(changed);
    uint64_t total = 0;
    for (uint64_t c : counts) total += c;
    if (total == 0) break;
  }
}

}  // namespace octforest
