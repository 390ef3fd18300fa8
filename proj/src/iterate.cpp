#include "octforest/iterate.hpp"

#include <algorithm>

#include "octforest/search.hpp"

namespace octforest {

namespace {

struct IterLeaf {
  Octant oct;
  bool is_local;
  int32_t index;
  int owner;
};

constexpr int kMaxSlots = 8;
constexpr int kMaxPieces = 27;

struct Slot {
  Octant s;
  FrameMap map;   // reference frame -> s's tree
  uint32_t lo = 0, hi = 0;  // view into the merged array of s's tree
};

struct Piece {
  std::array<int8_t, 3> choice;  // 0 low half, 1 high half, 2 midpoint
  int dim;
};

struct StackFrame {
  Box box;  // closed box of the point, reference frame
  int dim = 0;
  int nslots = 0;
  std::array<Slot, kMaxSlots> slots;
  // recursion bookkeeping
  bool entered = false;
  std::array<std::array<size_t, 9>, kMaxSlots> split;
  int npieces = 0;
  int next_piece = 0;
  std::array<Piece, kMaxPieces> pieces;
};

// Fixed-size direct-mapped cache of split results, keyed by the array view
// and the octant being split.
struct SplitCache {
  struct Entry {
    bool used = false;
    uint32_t tree = 0;
    uint32_t lo = 0, hi = 0;
    Octant oct;
    std::array<size_t, 9> k{};
  };
  std::array<Entry, 128> entries{};

  size_t slot_of(uint32_t tree, uint32_t lo, uint32_t hi, const Octant& o) const {
    uint64_t h = fnv1a(&lo, sizeof lo);
    h = hash_combine(h, hi);
    h = hash_combine(h, uint64_t(tree));
    h = hash_combine(h, uint64_t(o.level));
    for (uint64_t c : o.x) h = hash_combine(h, c);
    return size_t(h % entries.size());
  }
};

struct IterCtx {
  const Forest* forest;
  const Connectivity* conn;
  Dimension dm;
  RelevanceMode mode;
  bool use_cache;
  IterateStats* stats;
  const IterateCallbacks* callbacks;
  int min_dim = 0;

  std::vector<std::vector<IterLeaf>> merged;       // per tree
  std::vector<std::vector<uint32_t>> local_prefix; // per tree: # locals below i
  std::vector<StackFrame> stack;
  SplitCache cache;

  // scratch for firing
  std::vector<SupportEntry> scratch;

  bool view_has_local(uint32_t tree, uint32_t lo, uint32_t hi) const {
    const auto& pre = local_prefix[tree];
    return pre[hi] > pre[lo];
  }
};

void build_merged(IterCtx& ctx, const Forest& f, const GhostLayer& gl) {
  ctx.merged.resize(f.num_trees());
  ctx.local_prefix.resize(f.num_trees());
  for (uint32_t t = 0; t < f.num_trees(); ++t) {
    const auto& local = f.leaves[t];
    auto ghosts = gl.tree_ghosts(t);
    auto& out = ctx.merged[t];
    out.clear();
    out.reserve(local.size() + ghosts.size());
    size_t i = 0, j = 0;
    while (i < local.size() || j < ghosts.size()) {
      if (j == ghosts.size() ||
          (i < local.size() && octant_less(f.dim, local[i], ghosts[j].oct))) {
        out.push_back(IterLeaf{local[i], true, int32_t(i), f.rank});
        ++i;
      } else {
        size_t gi = size_t(ghosts.data() + j - gl.ghosts.data());
        out.push_back(IterLeaf{ghosts[j].oct, false, int32_t(gi), ghosts[j].owner});
        ++j;
      }
    }
    auto& pre = ctx.local_prefix[t];
    pre.assign(out.size() + 1, 0);
    for (size_t k = 0; k < out.size(); ++k) {
      pre[k + 1] = pre[k] + (out[k].is_local ? 1 : 0);
    }
  }
}

const std::array<size_t, 9>& split_slot(IterCtx& ctx, const Slot& slot,
                                        std::array<size_t, 9>& storage) {
  const auto& arr = ctx.merged[slot.s.tree];
  const IterLeaf* base = arr.data();
  if (ctx.use_cache) {
    size_t at = ctx.cache.slot_of(slot.s.tree, slot.lo, slot.hi, slot.s);
    auto& e = ctx.cache.entries[at];
    if (e.used && e.tree == slot.s.tree && e.lo == slot.lo && e.hi == slot.hi &&
        e.oct == slot.s) {
      if (ctx.stats) ctx.stats->split_cache_hits++;
      return e.k;
    }
    split_array(ctx.dm, std::span<const IterLeaf>(base + slot.lo, slot.hi - slot.lo), slot.s,
                [](const IterLeaf& l) -> const Octant& { return l.oct; },
                std::span<size_t>(e.k.data(), size_t(ctx.dm.children()) + 1));
    if (ctx.stats) ctx.stats->split_calls++;
    e.used = true;
    e.tree = slot.s.tree;
    e.lo = slot.lo;
    e.hi = slot.hi;
    e.oct = slot.s;
    return e.k;
  }
  split_array(ctx.dm, std::span<const IterLeaf>(base + slot.lo, slot.hi - slot.lo), slot.s,
              [](const IterLeaf& l) -> const Octant& { return l.oct; },
              std::span<size_t>(storage.data(), size_t(ctx.dm.children()) + 1));
  if (ctx.stats) ctx.stats->split_calls++;
  return storage;
}

bool slot_is_leaf(const IterCtx& ctx, const Slot& slot) {
  if (slot.hi - slot.lo != 1) return false;
  return ctx.merged[slot.s.tree][slot.lo].oct == slot.s;
}

// Entity code of the leaf's contact with the point box (leaf frame).
int contact_code(const IterCtx& ctx, const Octant& leaf, const Box& point_in_frame) {
  Box lb = octant_box(ctx.dm, leaf);
  Box isect;
  isect.tree = lb.tree;
  for (int j = 0; j < ctx.dm.d; ++j) {
    isect.lo[size_t(j)] = std::max(lb.lo[size_t(j)], point_in_frame.lo[size_t(j)]);
    isect.hi[size_t(j)] = std::min(lb.hi[size_t(j)], point_in_frame.hi[size_t(j)]);
    OF_ASSERT(isect.lo[size_t(j)] <= isect.hi[size_t(j)]);
  }
  return classify_entity(ctx.dm, lb, isect);
}


void fire(IterCtx& ctx, StackFrame& F) {
  // gather the support entries, ordered by the octant total order
  ctx.scratch.clear();
  Dimension dm = ctx.dm;
  bool complete = true;
  if (F.dim > 0) {
    for (int i = 0; i < F.nslots; ++i) {
      Slot& slot = F.slots[size_t(i)];
      if (slot_is_leaf(ctx, slot)) {
        const IterLeaf& l = ctx.merged[slot.s.tree][slot.lo];
        ctx.scratch.push_back(SupportEntry{l.oct, l.is_local, l.index, l.owner, slot.map,
                                           contact_code(ctx, l.oct, slot.map.apply_box(dm.d, F.box))});
      } else {
        // by 2:1 balance the children adjacent to the point are leaves
        const auto& k = split_slot(ctx, slot, F.split[size_t(i)]);
        Box cbox = slot.map.apply_box(dm.d, F.box);
        int b = classify_entity(dm, octant_box(dm, slot.s), cbox);
        for (int ch = 0; ch < dm.children(); ++ch) {
          if (!(child_boundary_mask(dm.d, ch) & (uint32_t(1) << b))) continue;
          uint32_t lo = slot.lo + uint32_t(k[size_t(ch)]);
          uint32_t hi = slot.lo + uint32_t(k[size_t(ch) + 1]);
          if (lo == hi) {
            complete = false;  // adjacent leaf not present locally
            continue;
          }
          const IterLeaf& l = ctx.merged[slot.s.tree][lo];
          OF_ASSERT(hi - lo == 1 && l.oct == child(dm, slot.s, ch));
          ctx.scratch.push_back(SupportEntry{l.oct, l.is_local, l.index, l.owner, slot.map,
                                             contact_code(ctx, l.oct, cbox)});
        }
      }
    }
  } else {
    // 0-point: locate the leaf containing the adjacent atom in each slot
    for (int i = 0; i < F.nslots; ++i) {
      Slot& slot = F.slots[size_t(i)];
      Box cbox = slot.map.apply_box(dm.d, F.box);
      Box sb = octant_box(dm, slot.s);
      Octant atom;
      atom.tree = slot.s.tree;
      atom.level = dm.lmax;
      for (int j = 0; j < dm.d; ++j) {
        int64_t v = cbox.lo[size_t(j)];
        atom.x[size_t(j)] = uint64_t(v == sb.hi[size_t(j)] ? v - 1 : v);
      }
      const auto& arr = ctx.merged[slot.s.tree];
      if (ctx.stats) ctx.stats->binary_searches++;
      auto begin = arr.begin() + slot.lo, end = arr.begin() + slot.hi;
      auto it = std::upper_bound(begin, end, atom, [&](const Octant& a, const IterLeaf& b) {
        return octant_less(dm, a, b.oct);
      });
      if (it == begin) {
        complete = false;
        continue;
      }
      --it;
      if (!is_descendant(dm, atom, it->oct)) {
        complete = false;
        continue;
      }
      ctx.scratch.push_back(SupportEntry{it->oct, it->is_local, it->index, it->owner, slot.map,
                                         contact_code(ctx, it->oct, cbox)});
    }
  }
  std::sort(ctx.scratch.begin(), ctx.scratch.end(),
            [&](const SupportEntry& a, const SupportEntry& b) {
              Ordering o = compare(dm, a.leaf, b.leaf);
              if (o != Ordering::equal) return o == Ordering::less;
              return a.contact < b.contact;
            });
  ctx.scratch.erase(std::unique(ctx.scratch.begin(), ctx.scratch.end(),
                                [](const SupportEntry& a, const SupportEntry& b) {
                                  return a.leaf == b.leaf && a.contact == b.contact;
                                }),
                    ctx.scratch.end());
  if (ctx.scratch.empty()) return;
  if (!is_relevant(*ctx.forest, F.box, F.dim, ctx.scratch, ctx.mode)) return;

  const PointCallback& cb = ctx.callbacks->by_dim[size_t(F.dim)];
  if (!cb) {
    if (ctx.stats) ctx.stats->points_by_dim[size_t(F.dim)]++;
    return;
  }
  // canonical representative from the first slot
  Slot& s0 = F.slots[0];
  Box cbox0 = s0.map.apply_box(dm.d, F.box);
  int b0 = classify_entity(dm, octant_box(dm, s0.s), cbox0);
  IterPoint pt;
  CanonicalRep rep = canonical_point_frame(*ctx.conn, dm, Point{s0.s, btables(dm.d).index(b0)});
  pt.canonical = rep.point;
  pt.canonical_frame = rep.to_canonical.after(dm.d, s0.map);
  pt.dim = F.dim;
  pt.ref_box = F.box;
  pt.support = std::span<const SupportEntry>(ctx.scratch);
  pt.support_complete = complete;
  if (ctx.stats) ctx.stats->points_by_dim[size_t(F.dim)]++;
  cb(pt);
}

// Enumerate the child partition pieces of F.box in decreasing dimension.
void make_pieces(StackFrame& F, int d) {
  F.npieces = 0;
  std::array<int8_t, 3> choice{0, 0, 0};
  while (true) {
    bool valid = true;
    int dim = 0;
    for (int j = 0; j < d && valid; ++j) {
      bool span = F.box.lo[size_t(j)] < F.box.hi[size_t(j)];
      if (!span && choice[size_t(j)] != 0) valid = false;
      if (span && choice[size_t(j)] != 2) ++dim;
    }
    if (valid) {
      F.pieces[size_t(F.npieces)] = Piece{choice, dim};
      ++F.npieces;
    }
    int j = 0;
    for (; j < d; ++j) {
      if (++choice[size_t(j)] < 3) break;
      choice[size_t(j)] = 0;
    }
    if (j == d) break;
  }
  std::stable_sort(F.pieces.begin(), F.pieces.begin() + F.npieces,
                   [](const Piece& a, const Piece& b) { return a.dim > b.dim; });
}

Box piece_box(const Box& box, const Piece& p, int d) {
  Box out = box;
  for (int j = 0; j < d; ++j) {
    if (box.lo[size_t(j)] == box.hi[size_t(j)]) continue;
    int64_t mid = box.lo[size_t(j)] + (box.hi[size_t(j)] - box.lo[size_t(j)]) / 2;
    switch (p.choice[size_t(j)]) {
      case 0: out.hi[size_t(j)] = mid; break;
      case 1: out.lo[size_t(j)] = mid; break;
      default: out.lo[size_t(j)] = out.hi[size_t(j)] = mid; break;
    }
  }
  return out;
}

// Build the child frame for a partition piece; returns false when no support
// slot of the piece has any leaves (nothing to do below).
bool make_child_frame(IterCtx& ctx, StackFrame& F, const Piece& piece, StackFrame& out) {
  Dimension dm = ctx.dm;
  out.box = piece_box(F.box, piece, dm.d);
  out.dim = piece.dim;
  out.nslots = 0;
  out.entered = false;
  out.next_piece = 0;
  bool any = false;
  for (int i = 0; i < F.nslots; ++i) {
    Slot& slot = F.slots[size_t(i)];
    const auto& k = split_slot(ctx, slot, F.split[size_t(i)]);
    Box pb = slot.map.apply_box(dm.d, out.box);
    Box sb = octant_box(dm, slot.s);
    for (int ch = 0; ch < dm.children(); ++ch) {
      // closed child box must contain the piece box
      int64_t h = (sb.hi[0] - sb.lo[0]) / 2;
      bool inside = true;
      for (int j = 0; j < dm.d && inside; ++j) {
        int64_t lo = sb.lo[size_t(j)] + ((ch >> j) & 1 ? h : 0);
        inside = lo <= pb.lo[size_t(j)] && pb.hi[size_t(j)] <= lo + h;
      }
      if (!inside) continue;
      OF_CHECK(out.nslots < kMaxSlots);
      Slot& ns = out.slots[size_t(out.nslots)];
      ns.s = child(dm, slot.s, ch);
      ns.map = slot.map;
      ns.lo = slot.lo + uint32_t(k[size_t(ch)]);
      ns.hi = slot.lo + uint32_t(k[size_t(ch) + 1]);
      out.nslots++;
      if (ns.hi > ns.lo) any = true;
    }
  }
  return any && out.nslots > 0;
}


void run_stack(IterCtx& ctx) {
  auto& stack = ctx.stack;
  size_t depth = 1;  // frame 0 prepared by the caller
  while (depth > 0) {
    StackFrame& F = stack[depth - 1];
    if (!F.entered) {
      F.entered = true;
      // prune: no local leaves anywhere below
      bool any_local = false;
      for (int i = 0; i < F.nslots && !any_local; ++i) {
        any_local = ctx.view_has_local(F.slots[size_t(i)].s.tree, F.slots[size_t(i)].lo,
                                       F.slots[size_t(i)].hi);
      }
      if (!any_local) {
        --depth;
        continue;
      }
      bool stop;
      if (F.dim > 0) {
        stop = false;
        for (int i = 0; i < F.nslots && !stop; ++i) {
          stop = slot_is_leaf(ctx, F.slots[size_t(i)]);
        }
      } else {
        stop = true;
      }
      if (stop) {
        fire(ctx, F);
        --depth;
        continue;
      }
      make_pieces(F, ctx.dm.d);
      F.next_piece = 0;
    }
    if (F.next_piece >= F.npieces) {
      --depth;
      continue;
    }
    const Piece& piece = F.pieces[size_t(F.next_piece++)];
    if (piece.dim < ctx.min_dim) continue;
    OF_CHECK(depth < stack.size());
    if (make_child_frame(ctx, F, piece, stack[depth])) {
      ++depth;
    }
  }
}

void process_toplevel(IterCtx& ctx, uint32_t tree, int bcode) {
  Dimension dm = ctx.dm;
  const BTables& t = btables(dm.d);
  Octant root = root_octant(tree);
  Point p{root, t.index(bcode)};
  // each root-closure point recurses from its canonical tuple only
  Point canon = canonical_point(*ctx.conn, dm, p);
  if (!(canon.octant == root && point_code(dm, canon) == bcode)) return;
  int dim = t.dim[size_t(bcode)];
  StackFrame& F = ctx.stack[0];
  F.box = entity_box(dm, root, bcode);
  F.dim = dim;
  F.entered = false;
  F.next_piece = 0;
  F.nslots = 0;
  for (const SupportSlot& s : point_support_slots(*ctx.conn, dm, root, bcode, 0)) {
    OF_CHECK(F.nslots < kMaxSlots);
    Slot& ns = F.slots[size_t(F.nslots)];
    ns.s = s.oct;
    // point_support_slots maps from the anchor tree; here anchor == reference
    ns.map = s.map;
    ns.lo = 0;
    ns.hi = uint32_t(ctx.merged[s.oct.tree].size());
    F.nslots++;
  }
  run_stack(ctx);
}

}  // namespace

// A point is relevant when a local leaf supports it; in closed mode
// also when a ghost support leaf has a boundary entity e with the point in
// bound(e) whose domain touches this rank's closed subdomain.
bool is_relevant(const Forest& f, const Box& ref_box, int dim,
                 std::span<const SupportEntry> support, RelevanceMode mode) {
  Dimension dm = f.dim;
  for (const SupportEntry& e : support) {
    if (e.is_local) return true;
  }
  if (mode == RelevanceMode::open) return false;
  AtomRange mine = rank_range(f, f.rank);
  const BTables& t = btables(dm.d);
  for (const SupportEntry& g : support) {
    Box cbox = g.frame.apply_box(dm.d, ref_box);
    for (int ecode = 0; ecode < t.num_boundary; ++ecode) {
      if (t.dim[size_t(ecode)] <= dim) continue;
      Box eb = entity_box(dm, g.leaf, ecode);
      bool contains = true;
      for (int j = 0; j < dm.d && contains; ++j) {
        contains = eb.lo[size_t(j)] <= cbox.lo[size_t(j)] && cbox.hi[size_t(j)] <= eb.hi[size_t(j)];
      }
      if (!contains) continue;
      // test dom((g.leaf, ecode)) against the closed local subdomain
      for (const SupportSlot& s :
           point_support_slots(*f.conn, dm, g.leaf, ecode, g.leaf.level)) {
        AtomRange rs = octant_range(dm, s.oct);
        Octant lo = octant_less(dm, rs.first, mine.first) ? mine.first : rs.first;
        Octant hi = octant_less(dm, mine.last, rs.last) ? mine.last : rs.last;
        if (octant_less(dm, hi, lo) || lo.tree != s.oct.tree) continue;
        if (!is_descendant(dm, lo, s.oct) || !is_descendant(dm, hi, s.oct)) continue;
        if (find_range_boundaries(dm, lo, hi, s.oct, uint32_t(1) << s.bcode) != 0) {
          return true;
        }
      }
    }
  }
  return false;
}

void iterate(const Forest& f, const GhostLayer& ghost, const IterateCallbacks& callbacks,
             IterateOptions opts, IterateStats* stats) {
  OF_CHECK(ghost.codim == f.dim.d);
  Dimension dm = f.dim;

  IterCtx ctx;
  ctx.forest = &f;
  ctx.conn = f.conn.get();
  ctx.dm = dm;
  ctx.mode = opts.mode;
  ctx.use_cache = opts.use_split_cache;
  ctx.stats = stats;
  ctx.callbacks = &callbacks;
  ctx.min_dim = dm.d + 1;
  for (int i = 0; i <= dm.d; ++i) {
    if (callbacks.by_dim[size_t(i)]) ctx.min_dim = std::min(ctx.min_dim, i);
  }
  if (ctx.min_dim > dm.d) return;  // nothing requested

  build_merged(ctx, f, ghost);
  ctx.stack.resize(size_t(dm.lmax) + 2);

  // visit the closure of every tree root, higher dimensions first
  const BTables& t = btables(dm.d);
  for (int dim = dm.d; dim >= ctx.min_dim; --dim) {
    for (uint32_t tree = 0; tree < f.num_trees(); ++tree) {
      for (int bcode = 0; bcode < t.num_codes; ++bcode) {
        if (t.dim[size_t(bcode)] != dim) continue;
        process_toplevel(ctx, tree, bcode);
      }
    }
  }
}

}  // namespace octforest
