#include "octforest/boundary.hpp"

namespace octforest {

namespace {

void set_sides(BTables& t, int code, uint8_t sx, uint8_t sy, uint8_t sz) {
  t.sides[size_t(code)] = {sx, sy, sz};
}

BTables build_tables(int d) {
  BTables t;
  t.d = d;
  t.num_boundary = (d == 2) ? 8 : 26;
  t.num_codes = t.num_boundary + 1;
  t.volume_code = t.num_boundary;

  int code = 0;
  // corners, z-order
  for (int i = 0; i < (1 << d); ++i, ++code) {
    set_sides(t, code, (i & 1) ? B_HI : B_LO, (i & 2) ? B_HI : B_LO,
              d == 3 ? ((i & 4) ? B_HI : B_LO) : B_LO);
  }
  // edges (d=3): parallel axis a spans, remaining axes (ascending) take the
  // z-order bits of i
  if (d == 3) {
    for (int a = 0; a < 3; ++a) {
      int u = (a == 0) ? 1 : 0;
      int v = (a == 2) ? 1 : 2;
      for (int i = 0; i < 4; ++i, ++code) {
        std::array<uint8_t, 3> s{};
        s[size_t(a)] = B_SPAN;
        s[size_t(u)] = (i & 1) ? B_HI : B_LO;
        s[size_t(v)] = (i & 2) ? B_HI : B_LO;
        set_sides(t, code, s[0], s[1], s[2]);
      }
    }
  }
  // faces -x,+x,-y,+y(,-z,+z)
  for (int a = 0; a < d; ++a) {
    for (int side = 0; side < 2; ++side, ++code) {
      std::array<uint8_t, 3> s{B_SPAN, B_SPAN, d == 3 ? B_SPAN : B_LO};
      s[size_t(a)] = side ? B_HI : B_LO;
      set_sides(t, code, s[0], s[1], s[2]);
    }
  }
  // volume
  set_sides(t, code, B_SPAN, B_SPAN, d == 3 ? B_SPAN : B_LO);
  OF_ASSERT(code == t.volume_code);

  for (int c = 0; c < t.num_codes; ++c) {
    int dim = 0;
    for (int a = 0; a < d; ++a) {
      if (t.sides[size_t(c)][size_t(a)] == B_SPAN) ++dim;
    }
    t.dim[size_t(c)] = uint8_t(dim);
  }

  // closed box of child i touches dom(b) iff every axis side is B_SPAN or
  // matches the child's half
  for (int i = 0; i < (1 << d); ++i) {
    uint32_t mask = 0;
    for (int c = 0; c < t.num_boundary; ++c) {
      bool touch = true;
      for (int a = 0; a < d; ++a) {
        uint8_t s = t.sides[size_t(c)][size_t(a)];
        uint8_t childside = (i & (1 << a)) ? B_HI : B_LO;
        if (s != B_SPAN && s != childside) {
          touch = false;
          break;
        }
      }
      if (touch) mask |= uint32_t(1) << c;
    }
    t.child_isect[size_t(i)] = mask;
  }

  // closure: b' inside the closed box of b iff per axis b' side is b's side,
  // or b spans and b' is anything
  for (int c = 0; c < t.num_codes; ++c) {
    uint32_t mask = 0;
    for (int c2 = 0; c2 < t.num_codes; ++c2) {
      bool inside = true;
      for (int a = 0; a < d; ++a) {
        uint8_t s = t.sides[size_t(c)][size_t(a)];
        uint8_t s2 = t.sides[size_t(c2)][size_t(a)];
        if (s != B_SPAN && s2 != s) {
          inside = false;
          break;
        }
      }
      if (inside) mask |= uint32_t(1) << c2;
    }
    t.closure[size_t(c)] = mask;
  }
  return t;
}

}  // namespace

const BTables& btables(int d) {
  OF_CHECK(d == 2 || d == 3);
  static const BTables t2 = build_tables(2);
  static const BTables t3 = build_tables(3);
  return d == 2 ? t2 : t3;
}

int BTables::code(BIndex b) const {
  switch (b.kind) {
    case BKind::corner:
      OF_CHECK(0 <= b.i && b.i < (1 << d));
      return b.i;
    case BKind::edge:
      OF_CHECK(d == 3 && 0 <= b.i && b.i < 12);
      return (1 << d) + b.i;
    case BKind::face:
      OF_CHECK(0 <= b.i && b.i < 2 * d);
      return (d == 3 ? 20 : 4) + b.i;
    case BKind::volume:
      return volume_code;
  }
  OF_CHECK(false);
  return -1;
}

BIndex BTables::index(int code) const {
  OF_CHECK(0 <= code && code < num_codes);
  if (code == volume_code) return BIndex{BKind::volume, 0};
  int nc = 1 << d;
  if (code < nc) return BIndex{BKind::corner, code};
  if (d == 3 && code < 20) return BIndex{BKind::edge, code - 8};
  return BIndex{BKind::face, code - (d == 3 ? 20 : 4)};
}

std::string BTables::name(int code) const {
  BIndex b = index(code);
  switch (b.kind) {
    case BKind::corner: return "c" + std::to_string(b.i);
    case BKind::edge: return "e" + std::to_string(b.i);
    case BKind::face: return "f" + std::to_string(b.i);
    case BKind::volume: return "v0";
  }
  return "?";
}

}  // namespace octforest
