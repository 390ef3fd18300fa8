#include "octforest/forest.hpp"

#include <algorithm>

#include "json.hpp"

namespace octforest {

namespace {

Octant terminal_atom(Dimension dm, uint32_t num_trees) {
  Octant t;
  t.tree = num_trees;
  t.level = dm.lmax;
  return t;
}

// Even split of n items over P ranks: rank q owns [start(q), start(q+1)).
uint64_t even_start(uint64_t n, int P, int q) {
  uint64_t base = n / uint64_t(P);
  uint64_t rem = n % uint64_t(P);
  return base * uint64_t(q) + std::min(uint64_t(q), rem);
}

}  // namespace

Forest new_uniform(std::shared_ptr<const Connectivity> conn, int num_ranks, int rank, int level) {
  OF_CHECK(conn && num_ranks >= 1 && 0 <= rank && rank < num_ranks);
  Dimension dm = conn->dim;
  OF_CHECK(0 <= level && level <= dm.lmax);
  uint64_t per_tree = uint64_t(1) << (dm.d * level);
  uint64_t total = per_tree * conn->num_trees;
  OF_CHECK(total >= uint64_t(num_ranks));  // every rank must own a leaf

  Forest f;
  f.conn = std::move(conn);
  f.dim = dm;
  f.rank = rank;
  f.num_ranks = num_ranks;
  f.leaves.resize(f.conn->num_trees);

  auto leaf_at = [&](uint64_t g) {
    Octant o;
    o.tree = uint32_t(g / per_tree);
    o.level = level;
    o.x = morton_decode(dm, (g % per_tree) << (dm.d * (dm.lmax - level)));
    return o;
  };
  uint64_t lo = even_start(total, num_ranks, rank);
  uint64_t hi = even_start(total, num_ranks, rank + 1);
  for (uint64_t g = lo; g < hi; ++g) {
    Octant o = leaf_at(g);
    f.leaves[o.tree].push_back(o);
  }
  f.first_atoms.resize(size_t(num_ranks) + 1);
  for (int q = 0; q < num_ranks; ++q) {
    f.first_atoms[size_t(q)] = first_atom(dm, leaf_at(even_start(total, num_ranks, q)));
  }
  f.first_atoms[size_t(num_ranks)] = terminal_atom(dm, f.conn->num_trees);
  return f;
}

namespace {

void refine_into(Dimension dm, const Octant& o, const OctantPredicate& pred, bool recursive,
                 bool examined, std::vector<Octant>& out) {
  if ((recursive || !examined) && o.level < dm.lmax && pred(o)) {
    for (int i = 0; i < dm.children(); ++i) {
      refine_into(dm, child(dm, o, i), pred, recursive, true, out);
    }
  } else {
    out.push_back(o);
  }
}

}  // namespace

void refine(Forest& f, const OctantPredicate& pred, bool recursive) {
  for (auto& tree : f.leaves) {
    std::vector<Octant> out;
    out.reserve(tree.size());
    for (const Octant& o : tree) refine_into(f.dim, o, pred, recursive, false, out);
    tree.swap(out);
  }
}

void coarsen(Forest& f, const OctantPredicate& pred) {
  Dimension dm = f.dim;
  int family = dm.children();
  for (auto& tree : f.leaves) {
    std::vector<Octant> out;
    out.reserve(tree.size());
    size_t i = 0;
    while (i < tree.size()) {
      bool merged = false;
      if (tree[i].level > 0 && i + size_t(family) <= tree.size() &&
          ancestor_id(dm, tree[i], tree[i].level) == 0) {
        Octant par = parent(dm, tree[i]);
        bool ok = true;
        for (int k = 0; k < family && ok; ++k) {
          const Octant& o = tree[i + size_t(k)];
          ok = o.level == tree[i].level && is_descendant(dm, o, par) && pred(o);
        }
        if (ok) {
          out.push_back(par);
          i += size_t(family);
          merged = true;
        }
      }
      if (!merged) {
        out.push_back(tree[i]);
        ++i;
      }
    }
    tree.swap(out);
  }
}

int locate_rank(const Forest& f, const Octant& atom) {
  Dimension dm = f.dim;
  OF_CHECK(atom.level == dm.lmax);
  OF_CHECK(atom.tree < f.num_trees());
  OF_CHECK(!octant_less(dm, atom, f.first_atoms[0]));
  auto it = std::upper_bound(f.first_atoms.begin(), f.first_atoms.end(), atom,
                             [&](const Octant& a, const Octant& b) { return octant_less(dm, a, b); });
  int q = int(it - f.first_atoms.begin()) - 1;
  OF_ASSERT(0 <= q && q < f.num_ranks);
  return q;
}

AtomRange rank_range(const Forest& f, int q) {
  OF_CHECK(0 <= q && q < f.num_ranks);
  return AtomRange{f.first_atoms[size_t(q)],
                   atom_predecessor(f.dim, f.first_atoms[size_t(q) + 1])};
}

int64_t find_leaf(const Forest& f, const Octant& o) {
  if (o.tree >= f.num_trees()) return -1;
  const auto& tree = f.leaves[o.tree];
  auto it = std::lower_bound(tree.begin(), tree.end(), o, [&](const Octant& a, const Octant& b) {
    return octant_less(f.dim, a, b);
  });
  if (it != tree.end() && *it == o) return it - tree.begin();
  return -1;
}

int64_t find_containing_leaf(const std::vector<Octant>& sorted_leaves, Dimension dm,
                             const Octant& atom) {
  auto it = std::upper_bound(sorted_leaves.begin(), sorted_leaves.end(), atom,
                             [&](const Octant& a, const Octant& b) { return octant_less(dm, a, b); });
  if (it == sorted_leaves.begin()) return -1;
  --it;
  if (is_descendant(dm, atom, *it)) return it - sorted_leaves.begin();
  return -1;
}

void partition_even(Forest& f, Comm& comm) {
  Dimension dm = f.dim;
  auto counts = comm.allgather(f.num_local());
  auto offsets = prefix_sums(counts);
  uint64_t total = offsets.back() + counts.back();
  OF_CHECK(total >= uint64_t(f.num_ranks));

  // flatten local leaves in global order
  std::vector<Octant> mine;
  mine.reserve(f.num_local());
  for (const auto& tree : f.leaves) mine.insert(mine.end(), tree.begin(), tree.end());
  uint64_t gstart = offsets[size_t(f.rank)];

  // sends grouped by destination, ascending
  for (int q = 0; q < f.num_ranks; ++q) {
    if (q == f.rank) continue;
    uint64_t lo = std::max(gstart, even_start(total, f.num_ranks, q));
    uint64_t hi = std::min(gstart + mine.size(), even_start(total, f.num_ranks, q + 1));
    if (lo >= hi) continue;
    std::vector<Octant> chunk(mine.begin() + int64_t(lo - gstart), mine.begin() + int64_t(hi - gstart));
    comm.send_vector(q, chunk);
  }

  // receive from current owners overlapping my target range, in rank order
  uint64_t tlo = even_start(total, f.num_ranks, f.rank);
  uint64_t thi = even_start(total, f.num_ranks, f.rank + 1);
  std::vector<Octant> result;
  result.reserve(size_t(thi - tlo));
  for (int q = 0; q < f.num_ranks; ++q) {
    uint64_t qlo = offsets[size_t(q)];
    uint64_t qhi = qlo + counts[size_t(q)];
    uint64_t lo = std::max(tlo, qlo), hi = std::min(thi, qhi);
    if (lo >= hi) continue;
    if (q == f.rank) {
      result.insert(result.end(), mine.begin() + int64_t(lo - gstart),
                    mine.begin() + int64_t(hi - gstart));
    } else {
      auto chunk = comm.recv_vector<Octant>(q);
      OF_CHECK(chunk.size() == hi - lo);
      result.insert(result.end(), chunk.begin(), chunk.end());
    }
  }
  OF_CHECK(result.size() == size_t(thi - tlo));

  for (auto& tree : f.leaves) tree.clear();
  for (const Octant& o : result) {
    OF_CHECK(o.tree < f.num_trees());
    f.leaves[o.tree].push_back(o);
  }

  // first-atoms from each rank's new first leaf
  OF_CHECK(!result.empty());
  Octant myfirst = first_atom(dm, result.front());
  auto gathered = comm.allgather_bytes(std::as_bytes(std::span<const Octant>(&myfirst, 1)));
  f.first_atoms.assign(size_t(f.num_ranks) + 1, Octant{});
  std::memcpy(f.first_atoms.data(), gathered.data(), gathered.size());
  f.first_atoms[size_t(f.num_ranks)] = terminal_atom(dm, f.num_trees());
}

std::vector<std::string> forest_diagnostics(const Forest& f) {
  std::vector<std::string> out;
  Dimension dm = f.dim;
  for (uint32_t t = 0; t < f.num_trees(); ++t) {
    const auto& tree = f.leaves[t];
    for (size_t i = 0; i < tree.size(); ++i) {
      if (tree[i].tree != t) out.push_back("leaf stored under the wrong tree");
      if (!octant_valid(dm, tree[i])) out.push_back("invalid leaf octant");
      if (i > 0) {
        if (!octant_less(dm, tree[i - 1], tree[i])) out.push_back("leaves not strictly sorted");
        if (is_descendant(dm, tree[i], tree[i - 1]) || is_descendant(dm, tree[i - 1], tree[i])) {
          out.push_back("overlapping leaves");
        }
      }
    }
  }
  if (f.first_atoms.size() != size_t(f.num_ranks) + 1) out.push_back("first-atoms size mismatch");
  for (size_t i = 0; i + 1 < f.first_atoms.size(); ++i) {
    if (!octant_less(f.dim, f.first_atoms[i], f.first_atoms[i + 1])) {
      out.push_back("first-atoms not sorted");
    }
  }
  return out;
}

std::string forest_to_json(const Forest& f) {
  nlohmann::ordered_json j;
  j["dimension"] = f.dim.d;
  j["lmax"] = f.dim.lmax;
  j["num_trees"] = f.num_trees();
  j["rank"] = f.rank;
  j["num_ranks"] = f.num_ranks;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& tree : f.leaves) {
    auto arr = nlohmann::ordered_json::array();
    for (const Octant& o : tree) {
      auto rec = nlohmann::ordered_json::array();
      rec.push_back(o.level);
      for (int k = 0; k < f.dim.d; ++k) rec.push_back(o.x[size_t(k)]);
      arr.push_back(rec);
    }
    trees.push_back(arr);
  }
  j["trees"] = trees;
  auto fa = nlohmann::ordered_json::array();
  for (const Octant& a : f.first_atoms) {
    auto rec = nlohmann::ordered_json::array();
    rec.push_back(a.tree);
    for (int k = 0; k < f.dim.d; ++k) rec.push_back(a.x[size_t(k)]);
    fa.push_back(rec);
  }
  j["first_atoms"] = fa;
  return j.dump(2);
}

}  // namespace octforest
