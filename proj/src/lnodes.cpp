#include "octforest/lnodes.hpp"

#include <algorithm>
#include <map>

namespace octforest {

namespace {

std::array<int64_t, 3> apply_scaled(const FrameMap& m, int d, int64_t scale,
                                    const std::array<int64_t, 3>& x) {
  std::array<int64_t, 3> r{0, 0, 0};
  for (int j = 0; j < d; ++j) {
    int64_t off = m.off[size_t(j)] * scale;
    r[size_t(m.perm[size_t(j)])] = m.flip[size_t(j)] ? off - x[size_t(j)] : off + x[size_t(j)];
  }
  return r;
}

NodeId make_node_id(Dimension dm, const Point& canonical, uint32_t intra) {
  NodeId id;
  id.tree = canonical.octant.tree;
  id.bcode = point_code(dm, canonical);
  id.level = canonical.octant.level;
  id.intra = intra;
  id.x = canonical.octant.x;
  return id;
}

// number of interior nodes of a dim-k entity
uint64_t interior_count(int order, int dim) {
  uint64_t c = 1;
  for (int i = 0; i < dim; ++i) c *= uint64_t(order - 1);
  return c;
}

// Lexicographic interior-node index of an n-scaled position on the canonical
// entity box; returns -1 if the position is not interior.
int64_t intra_of_position(Dimension dm, int order, const Box& canon_box,
                          const std::array<int64_t, 3>& pos_n) {
  int64_t intra = 0;
  int64_t stride = 1;
  for (int a = 0; a < dm.d; ++a) {
    int64_t lo = canon_box.lo[size_t(a)], hi = canon_box.hi[size_t(a)];
    if (lo == hi) {
      if (pos_n[size_t(a)] != lo * order) return -1;
      continue;
    }
    int64_t w = hi - lo;
    int64_t rel = pos_n[size_t(a)] - lo * order;
    if (rel <= 0 || rel >= w * order || rel % w != 0) return -1;
    intra += (rel / w - 1) * stride;
    stride *= order - 1;
  }
  return intra;
}

// n-scaled position of closed-grid index g on an entity box.
std::array<int64_t, 3> grid_position(Dimension dm, int order, const Box& box,
                                     const std::array<int, 3>& g) {
  std::array<int64_t, 3> pos{0, 0, 0};
  for (int a = 0; a < dm.d; ++a) {
    int64_t lo = box.lo[size_t(a)], hi = box.hi[size_t(a)];
    pos[size_t(a)] = lo * order + int64_t(g[size_t(a)]) * (hi - lo);
  }
  return pos;
}

// Element-node slot of a leaf: closed-grid coordinates over the full
// (n+1)^d tensor grid, x fastest.
int slot_of_grid(Dimension dm, int order, const std::array<int, 3>& g) {
  int slot = 0;
  int stride = 1;
  for (int a = 0; a < dm.d; ++a) {
    slot += g[size_t(a)] * stride;
    stride *= order + 1;
  }
  return slot;
}

struct Pending {
  uint32_t leaf_linear;
  int32_t slot;
  uint32_t intra;
};

struct Builder {
  const Forest* forest;
  const Connectivity* conn;
  Dimension dm;
  int order;
  LnodesResult* out;
  std::map<std::array<uint64_t, 7>, int64_t> point_base;  // point id -> first node
  std::map<std::array<uint64_t, 7>, std::vector<Pending>> pending;

  std::array<uint64_t, 7> point_key_of(const Point& canonical) const {
    return {uint64_t(canonical.octant.tree), uint64_t(point_code(dm, canonical)),
            uint64_t(canonical.octant.level), canonical.octant.x[0], canonical.octant.x[1],
            canonical.octant.x[2], 0};
  }

  void assign(uint32_t leaf_linear, int slot, int64_t node) {
    int64_t& e = out->element_nodes[size_t(leaf_linear) * size_t(out->nodes_per_leaf) +
                                    size_t(slot)];
    OF_ASSERT(e == -1 || e == node);
    e = node;
  }
};

// Enumerate the closed grid of an entity box: per axis 0..n on span axes,
// the single boundary value on degenerate axes.
template <class Fn>
void for_each_grid(Dimension dm, int order, const Box& box, Fn&& fn) {
  std::array<int, 3> g{0, 0, 0};
  while (true) {
    fn(g);
    int a = 0;
    for (; a < dm.d; ++a) {
      bool span = box.lo[size_t(a)] < box.hi[size_t(a)];
      int cap = span ? order : 0;
      if (++g[size_t(a)] <= cap) break;
      g[size_t(a)] = 0;
    }
    if (a == dm.d) break;
  }
}

void lnodes_callback(Builder& b, const IterPoint& pt) {
  Dimension dm = b.dm;
  const Forest& f = *b.forest;
  int n = b.order;
  uint64_t count = interior_count(n, pt.dim);
  auto key = b.point_key_of(pt.canonical);

  int64_t base = -1;
  if (count > 0) {
    base = int64_t(b.out->nodes.size());
    b.point_base.emplace(key, base);
    int owner = determine_owner_process(f, pt.canonical);
    int64_t owning_leaf = -1;
    std::vector<int> sharers;
    if (owner == f.rank) {
      OF_CHECK(pt.support_complete);
      const SupportEntry& first = pt.support.front();
      OF_CHECK(first.is_local);
      owning_leaf = int64_t(f.linear_index(first.leaf.tree, size_t(first.index)));
      for (const SupportEntry& e : pt.support) sharers.push_back(e.owner);
      std::vector<Octant> supp_octants;
      for (const SupportEntry& e : pt.support) supp_octants.push_back(e.leaf);
      for (const Octant& r : reconstruct_remote(f, pt.canonical, supp_octants)) {
        int q = locate_rank(f, first_atom(dm, r));
        OF_ASSERT(q == locate_rank(f, last_atom(dm, r)));
        sharers.push_back(q);
      }
      std::sort(sharers.begin(), sharers.end());
      sharers.erase(std::unique(sharers.begin(), sharers.end()), sharers.end());
    }
    for (uint64_t i = 0; i < count; ++i) {
      GlobalNode g;
      g.id = make_node_id(dm, pt.canonical, uint32_t(i));
      g.owner = owner;
      g.owning_leaf = owning_leaf;
      if (owner == f.rank) g.sharers = sharers;
      b.out->nodes.push_back(std::move(g));
    }
    // resolve links buffered while this point had not fired yet
    auto it = b.pending.find(key);
    if (it != b.pending.end()) {
      for (const Pending& p : it->second) {
        b.assign(p.leaf_linear, p.slot, base + int64_t(p.intra));
      }
      b.pending.erase(it);
    }
  }

  // canonical-frame geometry of the point
  Box canon_box = entity_box(dm, pt.canonical.octant, point_code(dm, pt.canonical));
  FrameMap ref_to_canon = pt.canonical_frame;

  for (const SupportEntry& e : pt.support) {
    if (!e.is_local) continue;
    uint32_t leaf_linear = uint32_t(f.linear_index(e.leaf.tree, size_t(e.index)));
    // the point's box and the leaf's contact entity, in the leaf's frame
    Box cbox = e.frame.apply_box(dm.d, pt.ref_box);
    Box contact = entity_box(dm, e.leaf, e.contact);
    FrameMap leaf_to_canon = ref_to_canon.after(dm.d, e.frame.inverse(dm.d, pt.ref_box.tree));

    bool conforming = contact == cbox;
    if (conforming) {
      if (count == 0) continue;
      // interior grid positions of the contact are this point's nodes
      for_each_grid(dm, n, contact, [&](const std::array<int, 3>& g) {
        bool interior = true;
        for (int a = 0; a < dm.d && interior; ++a) {
          if (contact.lo[size_t(a)] < contact.hi[size_t(a)]) {
            interior = g[size_t(a)] > 0 && g[size_t(a)] < n;
          }
        }
        if (!interior) return;
        auto pos = grid_position(dm, n, contact, g);
        auto cpos = apply_scaled(leaf_to_canon, dm.d, n, pos);
        int64_t intra = intra_of_position(dm, n, canon_box, cpos);
        OF_ASSERT(0 <= intra && uint64_t(intra) < count);
        // full leaf grid coordinates of the slot
        std::array<int, 3> full{0, 0, 0};
        Box lb = octant_box(dm, e.leaf);
        for (int a = 0; a < dm.d; ++a) {
          int64_t w = lb.hi[size_t(a)] - lb.lo[size_t(a)];
          int64_t rel = pos[size_t(a)] - lb.lo[size_t(a)] * n;
          OF_ASSERT(rel % w == 0);
          full[size_t(a)] = int(rel / w);
        }
        b.assign(leaf_linear, slot_of_grid(dm, n, full), base + intra);
      });
      continue;
    }

    // hanging contact: the leaf's entity is a half of the point; map its
    // closed grid onto the point's closed grid with the per-axis rule
    std::array<std::vector<int>, 3> map1d;
    for (int a = 0; a < dm.d; ++a) {
      if (cbox.lo[size_t(a)] == cbox.hi[size_t(a)]) continue;
      int bit = contact.lo[size_t(a)] == cbox.lo[size_t(a)] ? 0 : 1;
      map1d[size_t(a)] = hanging_map_1d(n, bit);
    }
    for_each_grid(dm, n, contact, [&](const std::array<int, 3>& g) {
      std::array<int, 3> coarse_g{0, 0, 0};
      for (int a = 0; a < dm.d; ++a) {
        if (cbox.lo[size_t(a)] == cbox.hi[size_t(a)]) continue;
        coarse_g[size_t(a)] = map1d[size_t(a)][size_t(g[size_t(a)])];
      }
      auto pos = grid_position(dm, n, cbox, coarse_g);
      // slot within the leaf for the fine grid position
      std::array<int, 3> full{0, 0, 0};
      Box lb = octant_box(dm, e.leaf);
      auto fine_pos = grid_position(dm, n, contact, g);
      for (int a = 0; a < dm.d; ++a) {
        int64_t w = lb.hi[size_t(a)] - lb.lo[size_t(a)];
        int64_t rel = fine_pos[size_t(a)] - lb.lo[size_t(a)] * n;
        OF_ASSERT(rel % w == 0);
        full[size_t(a)] = int(rel / w);
      }
      int slot = slot_of_grid(dm, n, full);

      // target sub-entity of the point containing the coarse position
      Box target = cbox;
      for (int a = 0; a < dm.d; ++a) {
        if (cbox.lo[size_t(a)] == cbox.hi[size_t(a)]) continue;
        if (coarse_g[size_t(a)] == 0) {
          target.hi[size_t(a)] = target.lo[size_t(a)];
        } else if (coarse_g[size_t(a)] == n) {
          target.lo[size_t(a)] = target.hi[size_t(a)];
        }
      }
      if (target == cbox) {
        // interior node of this point
        auto cpos = apply_scaled(leaf_to_canon, dm.d, n, pos);
        int64_t intra = intra_of_position(dm, n, canon_box, cpos);
        OF_ASSERT(count > 0 && 0 <= intra && uint64_t(intra) < count);
        b.assign(leaf_linear, slot, base + intra);
        return;
      }
      // node of a boundary point of c: buffer until that point fires
      Box target_canon = leaf_to_canon.apply_box(dm.d, target);
      int tcode = classify_entity(dm, octant_box(dm, pt.canonical.octant), target_canon);
      CanonicalRep trep = canonical_point_frame(
          *b.conn, dm, Point{pt.canonical.octant, btables(dm.d).index(tcode)});
      Box tbox = entity_box(dm, trep.point.octant, point_code(dm, trep.point));
      FrameMap leaf_to_target = trep.to_canonical.after(dm.d, leaf_to_canon);
      auto tpos = apply_scaled(leaf_to_target, dm.d, n, pos);
      int64_t intra = intra_of_position(dm, n, tbox, tpos);
      OF_ASSERT(intra >= 0);
      auto tkey = b.point_key_of(trep.point);
      auto done = b.point_base.find(tkey);
      if (done != b.point_base.end()) {
        b.assign(leaf_linear, slot, done->second + intra);
      } else {
        b.pending[tkey].push_back(Pending{leaf_linear, int32_t(slot), uint32_t(intra)});
      }
    });
  }
}

}  // namespace

std::vector<int> hanging_map_1d(int order, int child_bit) {
  OF_CHECK(order >= 1 && (child_bit == 0 || child_bit == 1));
  std::vector<int> map(size_t(order) + 1, -1);
  std::vector<bool> used(size_t(order) + 1, false);
  for (int k = 0; k <= order; ++k) {
    int num = child_bit * order + k;
    if (num % 2 == 0) {
      map[size_t(k)] = num / 2;
      used[size_t(num / 2)] = true;
    }
  }
  int g = 0;
  for (int k = 0; k <= order; ++k) {
    if (map[size_t(k)] >= 0) continue;
    while (used[size_t(g)]) ++g;
    map[size_t(k)] = g;
    used[size_t(g)] = true;
  }
  return map;
}

int determine_owner_process(const Forest& f, const Point& c) {
  Dimension dm = f.dim;
  // the center of the point in doubled coordinates is its unique dim-0
  // child-partition member (or the point itself)
  Box box = point_box(dm, c);
  std::array<int64_t, 3> center2{0, 0, 0};
  for (int j = 0; j < dm.d; ++j) {
    center2[size_t(j)] = box.lo[size_t(j)] + box.hi[size_t(j)];
  }
  int best = f.num_ranks;
  int level = (point_dim(dm, c) > 0) ? c.octant.level : point_level(dm, c);
  for (const SupportSlot& s :
       point_support_slots(*f.conn, dm, c.octant, point_code(dm, c), level)) {
    // atoms inside this support whose closures contain the center
    auto c2 = apply_scaled(s.map, dm.d, 2, center2);
    Box sb = octant_box(dm, s.oct);
    std::array<std::vector<int64_t>, 3> coords;
    for (int j = 0; j < dm.d; ++j) {
      int64_t v2 = c2[size_t(j)];
      if (v2 % 2 != 0) {
        coords[size_t(j)].push_back((v2 - 1) / 2);
      } else {
        int64_t v = v2 / 2;
        if (v > sb.lo[size_t(j)]) coords[size_t(j)].push_back(v - 1);
        if (v < sb.hi[size_t(j)]) coords[size_t(j)].push_back(v);
      }
    }
    std::array<size_t, 3> idx{0, 0, 0};
    while (true) {
      Octant atom;
      atom.tree = s.oct.tree;
      atom.level = dm.lmax;
      for (int j = 0; j < dm.d; ++j) {
        atom.x[size_t(j)] = uint64_t(coords[size_t(j)][idx[size_t(j)]]);
      }
      best = std::min(best, locate_rank(f, atom));
      int j = 0;
      for (; j < dm.d; ++j) {
        if (++idx[size_t(j)] < coords[size_t(j)].size()) break;
        idx[size_t(j)] = 0;
      }
      if (j == dm.d) break;
    }
  }
  OF_CHECK(best < f.num_ranks);
  return best;
}

std::vector<Octant> reconstruct_remote(const Forest& f, const Point& c,
                                       std::span<const Octant> leafsupp) {
  Dimension dm = f.dim;
  const Connectivity& conn = *f.conn;
  Point canon = canonical_point(conn, dm, c);
  uint64_t ckey = point_key(dm, canon);
  int cdim = point_dim(dm, canon);
  const BTables& t = btables(dm.d);

  std::vector<Octant> out;
  for (const Octant& g : leafsupp) {
    for (int ecode = 0; ecode < t.num_boundary; ++ecode) {
      if (t.dim[size_t(ecode)] <= cdim) continue;
      Point e{g, t.index(ecode)};
      bool adjacent = false;
      for (const Point& bp : boundary_set(conn, dm, e)) {
        if (point_key(dm, bp) == ckey) {
          adjacent = true;
          break;
        }
      }
      if (!adjacent) continue;
      if (point_level(dm, e) >= dm.lmax) continue;
      for (const Point& h : point_children(conn, dm, e)) {
        for (const Octant& s : support_set(conn, dm, h)) {
          bool known = false;
          for (const Octant& m : leafsupp) {
            if (is_descendant(dm, s, m)) {
              known = true;
              break;
            }
          }
          if (!known) out.push_back(s);
        }
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [&](const Octant& a, const Octant& b) { return octant_less(dm, a, b); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void global_numbering(const Forest& f, Comm& comm, LnodesResult& r) {
  size_t num_local = f.num_local();
  // first-appearance sweep over the element nodes
  std::vector<int64_t> local_no(r.nodes.size(), -1);
  uint64_t m = 0;
  for (size_t j = 0; j < num_local; ++j) {
    for (int l = 0; l < r.nodes_per_leaf; ++l) {
      int64_t k = r.element_node(j, l);
      OF_CHECK(k >= 0);
      GlobalNode& g = r.nodes[size_t(k)];
      if (g.owner == f.rank && g.owning_leaf == int64_t(j) && local_no[size_t(k)] < 0) {
        local_no[size_t(k)] = int64_t(m++);
      }
    }
  }
  auto counts = comm.allgather(m);
  auto offsets = prefix_sums(counts);
  r.owned_count = m;
  r.owned_offset = offsets[size_t(f.rank)];
  r.num_global = offsets.back() + counts.back();

  struct Wire {
    NodeId id;
    int64_t index;
  };
  // finalize owned nodes and group one message per sharer
  std::map<int, std::vector<Wire>> outbox;
  for (size_t k = 0; k < r.nodes.size(); ++k) {
    GlobalNode& g = r.nodes[k];
    if (g.owner != f.rank) continue;
    OF_CHECK(local_no[k] >= 0);
    g.index = local_no[k] + int64_t(r.owned_offset);
    for (int q : g.sharers) {
      if (q != f.rank) outbox[q].push_back(Wire{g.id, g.index});
    }
  }
  for (auto& [q, wires] : outbox) comm.send_vector(q, wires);

  // receive finalized indices from every owner we reference
  std::map<NodeId, size_t> remote;
  std::vector<int> owners;
  for (size_t k = 0; k < r.nodes.size(); ++k) {
    if (r.nodes[k].owner == f.rank) continue;
    remote.emplace(r.nodes[k].id, k);
    owners.push_back(r.nodes[k].owner);
  }
  std::sort(owners.begin(), owners.end());
  owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
  for (int q : owners) {
    auto wires = comm.recv_vector<Wire>(q);
    for (const Wire& w : wires) {
      auto it = remote.find(w.id);
      if (it != remote.end()) r.nodes[it->second].index = w.index;
    }
  }
  for (const GlobalNode& g : r.nodes) OF_CHECK(g.index >= 0);
}

LnodesResult lnodes(const Forest& f, const GhostLayer& ghost, Comm& comm, int order) {
  OF_CHECK(order >= 1);
  OF_CHECK(ghost.codim == f.dim.d);
  Dimension dm = f.dim;

  LnodesResult out;
  out.order = order;
  out.nodes_per_leaf = 1;
  for (int a = 0; a < dm.d; ++a) out.nodes_per_leaf *= order + 1;
  out.element_nodes.assign(f.num_local() * size_t(out.nodes_per_leaf), -1);

  Builder b;
  b.forest = &f;
  b.conn = f.conn.get();
  b.dm = dm;
  b.order = order;
  b.out = &out;

  IterateOptions opts;
  opts.mode = RelevanceMode::closed;
  iterate(f, ghost,
          IterateCallbacks::all([&](const IterPoint& pt) { lnodes_callback(b, pt); }, dm.d),
          opts);
  OF_CHECK(b.pending.empty());

  global_numbering(f, comm, out);
  return out;
}

}  // namespace octforest
