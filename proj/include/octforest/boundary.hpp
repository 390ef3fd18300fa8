#ifndef OCTFOREST_BOUNDARY_HPP
#define OCTFOREST_BOUNDARY_HPP

#include <array>
#include <cstdint>
#include <string>

#include "octforest/common.hpp"

namespace octforest {

/// Kinds of octant boundary entities plus the volume alias.
enum class BKind : uint8_t { corner, edge, face, volume };

/// A boundary-or-volume index: one of the 3^d - 1 lower-dimensional
/// hypercubes of an octant's boundary, or the volume v0.
///
/// d=3 layout matches the reference figure: faces -x,+x,-y,+y,-z,+z; corners
/// in z-order; edges grouped by parallel axis (x: e0..e3, y: e4..e7,
/// z: e8..e11), each group z-ordered over the remaining axes.  d=2 has faces
/// -x,+x,-y,+y and z-ordered corners.
struct BIndex {
  BKind kind = BKind::volume;
  int i = 0;
  friend bool operator==(const BIndex&, const BIndex&) = default;
};

// Per-axis placement of an entity within the unit cube.
enum : uint8_t { B_LO = 0, B_HI = 1, B_SPAN = 2 };

/// Precomputed entity tables for one dimension.  Codes order corners, then
/// edges (d=3), then faces; the volume alias is the last code.
struct BTables {
  int d = 0;
  int num_boundary = 0;  // 3^d - 1
  int num_codes = 0;     // num_boundary + 1 (volume)
  int volume_code = 0;

  std::array<std::array<uint8_t, 3>, 27> sides{};  // per code, per axis
  std::array<uint8_t, 27> dim{};                   // topological dimension
  std::array<uint32_t, 8> child_isect{};           // B cap^i, mask over boundary codes
  std::array<uint32_t, 27> closure{};              // codes with closed box inside closed box(b)

  int code(BIndex b) const;
  BIndex index(int code) const;
  std::string name(int code) const;
};

const BTables& btables(int d);

/// Child-boundary intersection B cap^i: boundary entities of an
/// octant whose domains touch the closure of child i.
inline uint32_t child_boundary_mask(int d, int i) {
  const BTables& t = btables(d);
  OF_CHECK(0 <= i && i < (1 << d));
  return t.child_isect[size_t(i)];
}

}  // namespace octforest

#endif
