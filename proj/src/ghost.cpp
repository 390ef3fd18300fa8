#include "octforest/ghost.hpp"

#include <algorithm>
#include <map>

namespace octforest {

uint32_t find_range_boundaries(Dimension dm, const Octant& first, const Octant& last,
                               const Octant& s_in, uint32_t query_mask) {
  OF_CHECK(first.level == dm.lmax && last.level == dm.lmax);
  OF_CHECK(is_descendant(dm, first, s_in) && is_descendant(dm, last, s_in));
  OF_CHECK(octant_leq(dm, first, last));

  Octant f = first, l = last, s = s_in;
  uint32_t bq = query_mask;
  uint32_t acc = 0;
  while (true) {
    if (bq == 0 || s.level == dm.lmax) return acc | bq;
    int j = ancestor_id(dm, f, s.level + 1);
    int k = ancestor_id(dm, l, s.level + 1);
    if (j == k) {
      bq &= child_boundary_mask(dm.d, j);
      s = child(dm, s, j);
      continue;
    }
    uint32_t bmatch = 0;
    for (int i = j + 1; i < k; ++i) bmatch |= bq & child_boundary_mask(dm.d, i);
    uint32_t bmj = (bq & child_boundary_mask(dm.d, j)) & ~bmatch;
    Octant cj = child(dm, s, j);
    AtomRange rj = octant_range(dm, cj);
    if (!(f == rj.first)) {
      bmj = find_range_boundaries(dm, f, rj.last, cj, bmj);
    }
    uint32_t bmk = ((bq & child_boundary_mask(dm.d, k)) & ~bmatch) & ~bmj;
    Octant ck = child(dm, s, k);
    AtomRange rk = octant_range(dm, ck);
    if (!(l == rk.last)) {
      // tail position: continue with the k-child range
      acc |= bmatch | bmj;
      f = rk.first;
      s = ck;
      bq = bmk;
      continue;
    }
    return acc | bmatch | bmj | bmk;
  }
}

namespace {

// per destination rank, the highest contact dimension of any boundary point
using ContactMap = std::map<int, int>;

void add_contacts(const Forest& f, const Octant& o, ContactMap& out) {
  Dimension dm = f.dim;
  const Connectivity& conn = *f.conn;
  const BTables& t = btables(dm.d);
  for (int bcode = 0; bcode < t.num_boundary; ++bcode) {
    int cdim = t.dim[size_t(bcode)];
    if (cdim == 0) {
      // a subdomain touches a 0-point iff it owns one of its atoms
      for (const SupportSlot& slot : point_support_slots(conn, dm, o, bcode, dm.lmax)) {
        int q = locate_rank(f, slot.oct);
        if (q == f.rank) continue;
        auto [it, fresh] = out.emplace(q, cdim);
        if (!fresh) it->second = std::max(it->second, cdim);
      }
      continue;
    }
    for (const SupportSlot& slot : point_support_slots(conn, dm, o, bcode, o.level)) {
      if (slot.oct == o && slot.bcode == bcode) continue;  // o itself
      AtomRange rs = octant_range(dm, slot.oct);
      int qfirst = locate_rank(f, rs.first);
      int qlast = locate_rank(f, rs.last);
      for (int q = qfirst; q <= qlast; ++q) {
        if (q == f.rank) continue;
        auto it = out.find(q);
        if (it != out.end() && it->second >= cdim) continue;  // already known
        AtomRange rq = rank_range(f, q);
        Octant lo = octant_less(dm, rs.first, rq.first) ? rq.first : rs.first;
        Octant hi = octant_less(dm, rq.last, rs.last) ? rq.last : rs.last;
        OF_ASSERT(octant_leq(dm, lo, hi));
        if (find_range_boundaries(dm, lo, hi, slot.oct, uint32_t(1) << slot.bcode) != 0) {
          auto [it2, fresh] = out.emplace(q, cdim);
          if (!fresh) it2->second = std::max(it2->second, cdim);
        }
      }
    }
  }
}

// The 3x3(x3) same-level neighborhood of o lies inside this rank's atom
// range; only checked when the neighborhood stays within o's tree.
bool insulation_is_local(const Forest& f, const Octant& o) {
  Dimension dm = f.dim;
  int64_t h = int64_t(octant_size(dm, o));
  int64_t n = int64_t(dm.root_len());
  Octant lo = o, hi = o;
  lo.level = hi.level = dm.lmax;
  for (int j = 0; j < dm.d; ++j) {
    int64_t a = int64_t(o.x[size_t(j)]) - h;
    int64_t b = int64_t(o.x[size_t(j)]) + 2 * h;
    if (a < 0 || b > n) return false;
    lo.x[size_t(j)] = uint64_t(a);
    hi.x[size_t(j)] = uint64_t(b - 1);
  }
  AtomRange mine = rank_range(f, f.rank);
  return octant_leq(dm, mine.first, lo) && octant_leq(dm, hi, mine.last);
}

}  // namespace

std::vector<int> add_ghost(const Forest& f, const Octant& o, int codim) {
  OF_CHECK(1 <= codim && codim <= f.dim.d);
  ContactMap contacts;
  add_contacts(f, o, contacts);
  std::vector<int> out;
  for (const auto& [q, dim_c] : contacts) {
    if (dim_c >= f.dim.d - codim) out.push_back(q);
  }
  return out;
}

GhostLayer build_ghost(const Forest& f, Comm& comm, int codim, GhostOptions opts) {
  Dimension dm = f.dim;
  OF_CHECK(1 <= codim && codim <= dm.d);
  OF_CHECK(comm.size() == f.num_ranks && comm.rank() == f.rank);

  GhostLayer gl;
  gl.codim = codim;

  std::map<int, std::vector<uint32_t>> dest;  // rank -> linear leaf ids to send
  std::vector<int> neighbors;
  {
    std::map<int, bool> neighbor_set;
    uint32_t linear = 0;
    for (uint32_t t = 0; t < f.num_trees(); ++t) {
      for (const Octant& o : f.leaves[t]) {
        if (!(opts.insulation_fast_path && insulation_is_local(f, o))) {
          ContactMap contacts;
          add_contacts(f, o, contacts);
          for (const auto& [q, dim_c] : contacts) {
            neighbor_set[q] = true;
            if (dim_c >= dm.d - codim) dest[q].push_back(linear);
          }
        }
        ++linear;
      }
    }
    for (const auto& [q, _] : neighbor_set) neighbors.push_back(q);
  }
  gl.neighbor_ranks = neighbors;
  gl.mirrors.resize(neighbors.size());

  // counts first, then octant records, in rank order
  for (size_t i = 0; i < neighbors.size(); ++i) {
    int q = neighbors[i];
    auto it = dest.find(q);
    std::vector<Octant> records;
    if (it != dest.end()) {
      gl.mirrors[i] = it->second;
      records.reserve(it->second.size());
      for (uint32_t idx : it->second) records.push_back(f.local_leaf(idx));
    }
    comm.send_value<uint64_t>(q, records.size());
    comm.send_vector(q, records);
  }

  std::vector<GhostOctant> received;
  for (int q : neighbors) {
    uint64_t count = comm.recv_value<uint64_t>(q);
    auto records = comm.recv_vector<Octant>(q);
    OF_CHECK(records.size() == count);
    for (const Octant& o : records) received.push_back(GhostOctant{o, q});
  }
  std::sort(received.begin(), received.end(), [&](const GhostOctant& a, const GhostOctant& b) {
    return octant_less(dm, a.oct, b.oct);
  });
  gl.ghosts = std::move(received);

  gl.tree_offsets.assign(f.num_trees() + 1, 0);
  {
    size_t i = 0;
    for (uint32_t t = 0; t < f.num_trees(); ++t) {
      gl.tree_offsets[t] = i;
      while (i < gl.ghosts.size() && gl.ghosts[i].oct.tree == t) ++i;
    }
    gl.tree_offsets[f.num_trees()] = gl.ghosts.size();
    OF_CHECK(i == gl.ghosts.size());
  }
  return gl;
}

std::vector<std::byte> exchange_ghost_data(const Forest& f, const GhostLayer& gl, Comm& comm,
                                           std::span<const std::byte> local_payload,
                                           size_t elem_size) {
  OF_CHECK(elem_size > 0);
  OF_CHECK(local_payload.size() == f.num_local() * elem_size);
  for (size_t i = 0; i < gl.neighbor_ranks.size(); ++i) {
    std::vector<std::byte> buf;
    buf.reserve(gl.mirrors[i].size() * elem_size);
    for (uint32_t idx : gl.mirrors[i]) {
      auto chunk = local_payload.subspan(size_t(idx) * elem_size, elem_size);
      buf.insert(buf.end(), chunk.begin(), chunk.end());
    }
    comm.send(gl.neighbor_ranks[i], buf);
  }
  std::vector<std::byte> out(gl.ghosts.size() * elem_size);
  for (int q : gl.neighbor_ranks) {
    auto buf = comm.recv(q);
    size_t pos = 0;
    for (size_t g = 0; g < gl.ghosts.size(); ++g) {
      if (gl.ghosts[g].owner != q) continue;
      OF_CHECK(pos + elem_size <= buf.size());
      std::copy_n(buf.begin() + int64_t(pos), elem_size, out.begin() + int64_t(g * elem_size));
      pos += elem_size;
    }
    OF_CHECK(pos == buf.size());
  }
  return out;
}

}  // namespace octforest
