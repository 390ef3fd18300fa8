#include "octforest/connectivity.hpp"

#include <algorithm>

#include "json.hpp"

namespace octforest {

namespace {

// Map from o's tree frame onto the neighbor frame for a face link.  The
// phantom strip just beyond face f is carried onto the strip just inside the
// linked face.
FrameMap link_map(Dimension dm, const FaceLink& link, int face) {
  int64_t n = int64_t(dm.root_len());
  int a = face / 2, s = face % 2;
  int a2 = link.face / 2, s2 = link.face % 2;
  FrameMap m;
  m.target_tree = link.tree;
  // normal axis
  m.perm[size_t(a)] = int8_t(a2);
  if (s == 1 && s2 == 0) {
    m.flip[size_t(a)] = false;
    m.off[size_t(a)] = -n;
  } else if (s == 1 && s2 == 1) {
    m.flip[size_t(a)] = true;
    m.off[size_t(a)] = 2 * n;
  } else if (s == 0 && s2 == 1) {
    m.flip[size_t(a)] = false;
    m.off[size_t(a)] = n;
  } else {
    m.flip[size_t(a)] = true;
    m.off[size_t(a)] = 0;
  }
  // tangential axes: ascending order on both sides; d=2 may reverse
  int src_t[2], dst_t[2];
  int nt = 0;
  for (int j = 0; j < dm.d; ++j) {
    if (j != a) src_t[nt++] = j;
  }
  nt = 0;
  for (int j = 0; j < dm.d; ++j) {
    if (j != a2) dst_t[nt++] = j;
  }
  for (int k = 0; k < dm.d - 1; ++k) {
    int u = src_t[k], v = dst_t[k];
    m.perm[size_t(u)] = int8_t(v);
    bool fl = (dm.d == 2) && link.orient == 1;
    m.flip[size_t(u)] = fl;
    m.off[size_t(u)] = fl ? n : 0;
  }
  return m;
}

void derive_diagonal_links(Connectivity& c);

}  // namespace

Connectivity build_unitcube(Dimension dm) {
  Connectivity c;
  c.dim = dm;
  c.num_trees = 1;
  c.face_links.resize(1);
  c.corner_links.resize(1);
  c.edge_links.resize(1);
  return c;
}

Connectivity build_brick(Dimension dm, int m, int n, int p, std::array<bool, 3> periodic) {
  OF_CHECK(m >= 1 && n >= 1 && (dm.d == 2 || p >= 1));
  if (dm.d == 2) {
    p = 1;
    periodic[2] = false;
  }
  Connectivity c;
  c.dim = dm;
  int ext[3] = {m, n, p};
  c.num_trees = uint32_t(m) * uint32_t(n) * uint32_t(p);
  c.face_links.resize(c.num_trees);
  c.corner_links.resize(c.num_trees);
  c.edge_links.resize(c.num_trees);

  auto tree_at = [&](int i, int j, int k) { return uint32_t(i + m * (j + n * k)); };
  for (int k = 0; k < p; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < m; ++i) {
        int pos[3] = {i, j, k};
        uint32_t t = tree_at(i, j, k);
        for (int a = 0; a < dm.d; ++a) {
          for (int side = 0; side < 2; ++side) {
            int q[3] = {pos[0], pos[1], pos[2]};
            q[a] += side ? 1 : -1;
            if (q[a] < 0 || q[a] >= ext[a]) {
              if (!periodic[size_t(a)]) continue;
              q[a] = (q[a] + ext[a]) % ext[a];
            }
            FaceLink link;
            link.tree = tree_at(q[0], q[1], q[2]);
            link.face = 2 * a + (1 - side);
            link.orient = 0;
            c.face_links[t][size_t(2 * a + side)] = link;
          }
        }
      }
    }
  }
  derive_diagonal_links(c);
  return c;
}

std::optional<NeighborStep> face_step(const Connectivity& c, Dimension dm, const Octant& o,
                                      int axis, int dir) {
  OF_CHECK(0 <= axis && axis < dm.d && (dir == 1 || dir == -1));
  int64_t n = int64_t(dm.root_len());
  int64_t h = int64_t(octant_size(dm, o));
  int64_t target = int64_t(o.x[size_t(axis)]) + dir * h;
  if (target >= 0 && target < n) {
    Octant r = o;
    r.x[size_t(axis)] = uint64_t(target);
    return NeighborStep{r, FrameMap::identity(o.tree)};
  }
  int face = 2 * axis + (dir > 0 ? 1 : 0);
  const auto& link = c.face_links[o.tree][size_t(face)];
  if (!link) return std::nullopt;
  FrameMap m = link_map(dm, *link, face);
  Box phantom = octant_box(dm, o);
  phantom.lo[size_t(axis)] += dir * h;
  phantom.hi[size_t(axis)] += dir * h;
  Box mapped = m.apply_box(dm.d, phantom);
  OF_ASSERT(box_inside_tree(dm, mapped));
  return NeighborStep{box_octant(dm, mapped, o.level), m};
}

std::optional<NeighborStep> neighbor_across(const Connectivity& c, Dimension dm, const Octant& o,
                                            int mask, const std::array<int, 3>& dirs) {
  std::array<int, 3> axes{};
  int na = 0;
  for (int a = 0; a < dm.d; ++a) {
    if (mask & (1 << a)) axes[size_t(na++)] = a;
  }
  if (na == 0) return NeighborStep{o, FrameMap::identity(o.tree)};
  std::sort(axes.begin(), axes.begin() + na);
  do {
    Octant cur = o;
    FrameMap m = FrameMap::identity(o.tree);
    bool ok = true;
    for (int k = 0; k < na; ++k) {
      int a = axes[size_t(k)];
      int ta = m.perm[size_t(a)];
      int tdir = m.flip[size_t(a)] ? -dirs[size_t(a)] : dirs[size_t(a)];
      auto step = face_step(c, dm, cur, ta, tdir);
      if (!step) {
        ok = false;
        break;
      }
      cur = step->oct;
      m = step->map.after(dm.d, m);
    }
    if (ok) return NeighborStep{cur, m};
  } while (std::next_permutation(axes.begin(), axes.begin() + na));
  return std::nullopt;
}

Octant transform_across_face(const Connectivity& c, Dimension dm, const Octant& o, int face) {
  int axis = face / 2, dir = (face % 2) ? 1 : -1;
  int64_t n = int64_t(dm.root_len());
  int64_t h = int64_t(octant_size(dm, o));
  int64_t edge = int64_t(o.x[size_t(axis)]) + (dir > 0 ? h : 0);
  OF_CHECK(edge == (dir > 0 ? n : 0));  // o abuts the macro face
  auto step = face_step(c, dm, o, axis, dir);
  OF_CHECK(step.has_value());
  return step->oct;
}

Octant transform_across_corner(const Connectivity& c, Dimension dm, const Octant& o, int corner) {
  int64_t n = int64_t(dm.root_len());
  int64_t h = int64_t(octant_size(dm, o));
  std::array<int, 3> dirs{0, 0, 0};
  int mask = 0;
  for (int a = 0; a < dm.d; ++a) {
    bool hi = corner & (1 << a);
    int64_t edge = int64_t(o.x[size_t(a)]) + (hi ? h : 0);
    OF_CHECK(edge == (hi ? n : 0));  // o abuts the macro corner
    dirs[size_t(a)] = hi ? 1 : -1;
    mask |= 1 << a;
  }
  auto step = neighbor_across(c, dm, o, mask, dirs);
  OF_CHECK(step.has_value());
  return step->oct;
}

Octant transform_across_edge(const Connectivity& c, Dimension dm, const Octant& o, int edge) {
  OF_CHECK(dm.d == 3);
  const BTables& t = btables(3);
  int code = t.code(BIndex{BKind::edge, edge});
  int64_t n = int64_t(dm.root_len());
  int64_t h = int64_t(octant_size(dm, o));
  std::array<int, 3> dirs{0, 0, 0};
  int mask = 0;
  for (int a = 0; a < 3; ++a) {
    uint8_t s = t.sides[size_t(code)][size_t(a)];
    if (s == B_SPAN) continue;
    int64_t pos = int64_t(o.x[size_t(a)]) + (s == B_HI ? h : 0);
    OF_CHECK(pos == (s == B_HI ? n : 0));
    dirs[size_t(a)] = (s == B_HI) ? 1 : -1;
    mask |= 1 << a;
  }
  auto step = neighbor_across(c, dm, o, mask, dirs);
  OF_CHECK(step.has_value());
  return step->oct;
}

namespace {

// Entity index of the corner/edge diagonally opposite, as seen from the
// neighbor found by a walk: classify the walked octant's touching entity.
struct DiagonalImage {
  uint32_t tree;
  int index;
};

std::vector<DiagonalImage> walk_entity_images(const Connectivity& c, Dimension dm, uint32_t tree,
                                              BKind kind, int index, bool* ambiguous) {
  const BTables& t = btables(dm.d);
  int code = t.code(BIndex{kind, index});
  // Use the root octant: the entity of the tree equals the entity of its root.
  Octant o = root_octant(tree);
  std::array<int, 3> dirs{0, 0, 0};
  int mask = 0;
  for (int a = 0; a < dm.d; ++a) {
    uint8_t s = t.sides[size_t(code)][size_t(a)];
    if (s == B_SPAN) continue;
    dirs[size_t(a)] = (s == B_HI) ? 1 : -1;
    mask |= 1 << a;
  }
  // Collect results over all step orders to detect ambiguity.
  std::vector<DiagonalImage> out;
  std::array<int, 3> axes{};
  int na = 0;
  for (int a = 0; a < dm.d; ++a) {
    if (mask & (1 << a)) axes[size_t(na++)] = a;
  }
  std::sort(axes.begin(), axes.begin() + na);
  do {
    Octant cur = o;
    FrameMap m = FrameMap::identity(tree);
    bool ok = true;
    for (int k = 0; k < na; ++k) {
      int a = axes[size_t(k)];
      int ta = m.perm[size_t(a)];
      int tdir = m.flip[size_t(a)] ? -dirs[size_t(a)] : dirs[size_t(a)];
      auto step = face_step(c, dm, cur, ta, tdir);
      if (!step) {
        ok = false;
        break;
      }
      cur = step->oct;
      m = step->map.after(dm.d, m);
    }
    if (!ok) continue;
    // entity of cur facing back toward the source entity
    Box src = entity_box(dm, root_octant(tree), code);
    Box img = m.apply_box(dm.d, src);
    int icode = classify_entity(dm, octant_box(dm, cur), img);
    BIndex bi = t.index(icode);
    DiagonalImage di{cur.tree, bi.i};
    bool dup = false;
    for (const auto& e : out) {
      if (e.tree == di.tree && e.index == di.index) dup = true;
    }
    if (!dup) out.push_back(di);
  } while (std::next_permutation(axes.begin(), axes.begin() + na));
  if (ambiguous) *ambiguous = out.size() > 1;
  return out;
}

void derive_diagonal_links(Connectivity& c) {
  Dimension dm = c.dim;
  for (uint32_t t = 0; t < c.num_trees; ++t) {
    for (int corner = 0; corner < dm.children(); ++corner) {
      bool amb = false;
      auto imgs = walk_entity_images(c, dm, t, BKind::corner, corner, &amb);
      c.corner_links[t][size_t(corner)].clear();
      for (const auto& im : imgs) {
        if (im.tree == t && im.index == corner) continue;
        c.corner_links[t][size_t(corner)].push_back(EntityLink{im.tree, im.index});
      }
    }
    if (dm.d == 3) {
      for (int edge = 0; edge < 12; ++edge) {
        bool amb = false;
        auto imgs = walk_entity_images(c, dm, t, BKind::edge, edge, &amb);
        c.edge_links[t][size_t(edge)].clear();
        for (const auto& im : imgs) {
          if (im.tree == t && im.index == edge) continue;
          c.edge_links[t][size_t(edge)].push_back(EntityLink{im.tree, im.index});
        }
      }
    }
  }
}

}  // namespace

std::vector<std::string> validate(const Connectivity& c) {
  std::vector<std::string> diags;
  Dimension dm = c.dim;
  auto note = [&](std::string s) { diags.push_back(std::move(s)); };
  if (c.num_trees == 0) note("connectivity has zero trees");
  if (c.face_links.size() != c.num_trees || c.corner_links.size() != c.num_trees ||
      (dm.d == 3 && c.edge_links.size() != c.num_trees)) {
    note("link table sizes do not match the tree count");
    return diags;
  }
  for (uint32_t t = 0; t < c.num_trees; ++t) {
    for (int f = 0; f < 2 * dm.d; ++f) {
      const auto& link = c.face_links[t][size_t(f)];
      if (!link) continue;
      if (link->tree >= c.num_trees) {
        note("tree " + std::to_string(t) + " face " + std::to_string(f) +
             " links to a nonexistent tree");
        continue;
      }
      if (dm.d == 3) {
        if (link->orient != 0 || link->face / 2 != f / 2 || link->face % 2 == f % 2) {
          note("tree " + std::to_string(t) + " face " + std::to_string(f) +
               " uses a non-translation 3D gluing");
        }
      } else if (link->orient != 0 && link->orient != 1) {
        note("tree " + std::to_string(t) + " face " + std::to_string(f) +
             " has an invalid orientation");
      }
      if (link->tree == t && link->face == f) {
        note("tree " + std::to_string(t) + " face " + std::to_string(f) + " is glued to itself");
        continue;
      }
      const auto& rev = c.face_links[link->tree][size_t(link->face)];
      if (!rev || rev->tree != t || rev->face != f || rev->orient != link->orient) {
        note("tree " + std::to_string(t) + " face " + std::to_string(f) +
             " has no matching reverse link");
      }
    }
  }
  if (!diags.empty()) return diags;

  // Round-trip identity across every link, at a coarse probe level.
  int probe_level = std::min(2, dm.lmax);
  for (uint32_t t = 0; t < c.num_trees; ++t) {
    for (int f = 0; f < 2 * dm.d; ++f) {
      if (!c.face_links[t][size_t(f)]) continue;
      int axis = f / 2, dir = (f % 2) ? 1 : -1;
      // probe every octant of the face at probe_level
      int np = 1 << probe_level;
      uint64_t h = dm.root_len() >> probe_level;
      for (int u = 0; u < np; ++u) {
        for (int v = 0; v < (dm.d == 3 ? np : 1); ++v) {
          Octant o;
          o.tree = t;
          o.level = probe_level;
          int k = 0;
          for (int a = 0; a < dm.d; ++a) {
            if (a == axis) {
              o.x[size_t(a)] = (f % 2) ? dm.root_len() - h : 0;
            } else {
              o.x[size_t(a)] = uint64_t(k == 0 ? u : v) * h;
              ++k;
            }
          }
          auto out = face_step(c, dm, o, axis, dir);
          if (!out) {
            note("face link lost a boundary octant");
            continue;
          }
          auto back = face_step(c, dm, out->oct, out->map.perm[size_t(axis)],
                                out->map.flip[size_t(axis)] ? dir : -dir);
          if (!back || !(back->oct == o)) {
            note("face link round trip is not the identity at tree " + std::to_string(t) +
                 " face " + std::to_string(f));
          }
        }
      }
    }
  }

  // Corner (and edge) links must agree with face-step composition and be
  // unambiguous.
  for (uint32_t t = 0; t < c.num_trees; ++t) {
    for (int corner = 0; corner < dm.children(); ++corner) {
      bool amb = false;
      auto imgs = walk_entity_images(c, dm, t, BKind::corner, corner, &amb);
      if (amb) {
        note("tree " + std::to_string(t) + " corner " + std::to_string(corner) +
             " has an ambiguous diagonal composition (unsupported valence)");
      }
      std::vector<EntityLink> expect;
      for (const auto& im : imgs) {
        if (im.tree == t && im.index == corner) continue;
        expect.push_back(EntityLink{im.tree, im.index});
      }
      if (expect != c.corner_links[t][size_t(corner)]) {
        note("tree " + std::to_string(t) + " corner " + std::to_string(corner) +
             " links are not derivable from the face links");
      }
    }
    if (dm.d == 3) {
      for (int edge = 0; edge < 12; ++edge) {
        bool amb = false;
        auto imgs = walk_entity_images(c, dm, t, BKind::edge, edge, &amb);
        if (amb) {
          note("tree " + std::to_string(t) + " edge " + std::to_string(edge) +
               " has an ambiguous diagonal composition (unsupported valence)");
        }
        std::vector<EntityLink> expect;
        for (const auto& im : imgs) {
          if (im.tree == t && im.index == edge) continue;
          expect.push_back(EntityLink{im.tree, im.index});
        }
        if (expect != c.edge_links[t][size_t(edge)]) {
          note("tree " + std::to_string(t) + " edge " + std::to_string(edge) +
               " links are not derivable from the face links");
        }
      }
    }
  }
  return diags;
}

std::string to_json(const Connectivity& c) {
  nlohmann::ordered_json j;
  j["dimension"] = c.dim.d;
  j["lmax"] = c.dim.lmax;
  j["num_trees"] = c.num_trees;
  auto faces = nlohmann::ordered_json::array();
  for (uint32_t t = 0; t < c.num_trees; ++t) {
    auto row = nlohmann::ordered_json::array();
    for (int f = 0; f < 2 * c.dim.d; ++f) {
      const auto& link = c.face_links[t][size_t(f)];
      if (!link) {
        row.push_back(nullptr);
      } else {
        row.push_back({{"tree", link->tree}, {"face", link->face}, {"orient", link->orient}});
      }
    }
    faces.push_back(row);
  }
  j["faces"] = faces;
  auto corners = nlohmann::ordered_json::array();
  for (uint32_t t = 0; t < c.num_trees; ++t) {
    auto row = nlohmann::ordered_json::array();
    for (int k = 0; k < c.dim.children(); ++k) {
      auto cell = nlohmann::ordered_json::array();
      for (const auto& e : c.corner_links[t][size_t(k)]) {
        cell.push_back({{"tree", e.tree}, {"index", e.index}});
      }
      row.push_back(cell);
    }
    corners.push_back(row);
  }
  j["corners"] = corners;
  if (c.dim.d == 3) {
    auto edges = nlohmann::ordered_json::array();
    for (uint32_t t = 0; t < c.num_trees; ++t) {
      auto row = nlohmann::ordered_json::array();
      for (int k = 0; k < 12; ++k) {
        auto cell = nlohmann::ordered_json::array();
        for (const auto& e : c.edge_links[t][size_t(k)]) {
          cell.push_back({{"tree", e.tree}, {"index", e.index}});
        }
        row.push_back(cell);
      }
      edges.push_back(row);
    }
    j["edges"] = edges;
  }
  return j.dump(2);
}

Connectivity connectivity_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Connectivity c;
  c.dim = Dimension::make(j.at("dimension").get<int>(), j.at("lmax").get<int>());
  c.num_trees = j.at("num_trees").get<uint32_t>();
  c.face_links.resize(c.num_trees);
  c.corner_links.resize(c.num_trees);
  c.edge_links.resize(c.num_trees);
  const auto& faces = j.at("faces");
  for (uint32_t t = 0; t < c.num_trees; ++t) {
    for (int f = 0; f < 2 * c.dim.d; ++f) {
      const auto& cell = faces.at(t).at(size_t(f));
      if (cell.is_null()) continue;
      c.face_links[t][size_t(f)] = FaceLink{cell.at("tree").get<uint32_t>(),
                                            cell.at("face").get<int>(),
                                            cell.at("orient").get<int>()};
    }
  }
  const auto& corners = j.at("corners");
  for (uint32_t t = 0; t < c.num_trees; ++t) {
    for (int k = 0; k < c.dim.children(); ++k) {
      for (const auto& e : corners.at(t).at(size_t(k))) {
        c.corner_links[t][size_t(k)].push_back(
            EntityLink{e.at("tree").get<uint32_t>(), e.at("index").get<int>()});
      }
    }
  }
  if (c.dim.d == 3 && j.contains("edges")) {
    const auto& edges = j.at("edges");
    for (uint32_t t = 0; t < c.num_trees; ++t) {
      for (int k = 0; k < 12; ++k) {
        for (const auto& e : edges.at(t).at(size_t(k))) {
          c.edge_links[t][size_t(k)].push_back(
              EntityLink{e.at("tree").get<uint32_t>(), e.at("index").get<int>()});
        }
      }
    }
  }
  return c;
}

}  // namespace octforest
