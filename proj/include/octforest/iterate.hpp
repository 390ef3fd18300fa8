#ifndef OCTFOREST_ITERATE_HPP
#define OCTFOREST_ITERATE_HPP

#include <functional>
#include <span>

#include "octforest/ghost.hpp"
#include "octforest/point.hpp"

namespace octforest {

/// Which points fire: those whose leaf support contains a local leaf (open),
/// or additionally the closure points of those (closed).
enum class RelevanceMode { open, closed };

/// One member of the local leaf support set of a visited point.
struct SupportEntry {
  Octant leaf;     // in its own tree's coordinates
  bool is_local;   // local leaf vs ghost
  int32_t index;   // index within the per-tree local array, or the ghost array
  int owner;       // owning rank
  FrameMap frame;  // reference frame of the visited point -> leaf's tree
  int contact;     // entity code of the leaf touching the point
};

/// A visited point of the (closed) locally relevant partition together with
/// its local leaf support set, ordered by the octant total order.  Entries
/// may repeat an octant when a periodic topology touches the point from
/// several sides.
struct IterPoint {
  Point canonical;
  FrameMap canonical_frame;  // reference frame -> canonical octant's tree
  int dim = 0;
  Box ref_box;  // closed box in the reference tree's frame
  std::span<const SupportEntry> support;
  /// True when every member of the full leaf support set is present.
  bool support_complete = false;
};

using PointCallback = std::function<void(const IterPoint&)>;

/// Per-dimension callbacks; a null entry prunes recursion below the smallest
/// requested dimension.
struct IterateCallbacks {
  std::array<PointCallback, 4> by_dim{};
  static IterateCallbacks all(PointCallback cb, int d) {
    IterateCallbacks c;
    for (int i = 0; i <= d; ++i) c.by_dim[size_t(i)] = cb;
    return c;
  }
};

struct IterateOptions {
  RelevanceMode mode = RelevanceMode::open;
  bool use_split_cache = true;
};

struct IterateStats {
  uint64_t split_calls = 0;  // computed array splits
  uint64_t split_cache_hits = 0;
  uint64_t binary_searches = 0;
  std::array<uint64_t, 4> points_by_dim{};
};

/// Execute the callbacks for every point of the locally relevant partition
/// (or its closure), passing the local leaf support set.  Requires a 2:1
/// balanced forest and a full (codimension d) ghost layer.  Communication
/// free; each rank-local canonical point fires at most once.
void iterate(const Forest& f, const GhostLayer& ghost, const IterateCallbacks& callbacks,
             IterateOptions opts = {}, IterateStats* stats = nullptr);

/// Whether a point with the given local leaf support belongs to the relevant
/// set: open mode requires a local support leaf; closed mode also accepts a
/// point on the boundary of a ghost leaf entity that touches this rank's
/// closed subdomain.  ref_box is the point's closed box in the frame the
/// support entries' maps start from.
bool is_relevant(const Forest& f, const Box& ref_box, int dim,
                 std::span<const SupportEntry> support, RelevanceMode mode);

}  // namespace octforest

#endif
