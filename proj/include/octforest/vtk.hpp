#ifndef OCTFOREST_VTK_HPP
#define OCTFOREST_VTK_HPP

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "octforest/forest.hpp"

namespace octforest {

/// Per-tree geometry map from the unit reference cube into physical space.
using GeometryMap =
    std::function<std::array<double, 3>(uint32_t tree, std::array<double, 3> ref)>;

GeometryMap identity_geometry();

/// Legacy ASCII unstructured-grid export: one pixel/voxel cell per leaf with
/// the owning rank and refinement level as cell data.  Byte-stable for a
/// fixed input.
std::string vtk_unstructured(const std::vector<Forest>& forests, const GeometryMap& geometry);

/// Point cloud of node positions (VTK vertices), used to inspect numberings.
std::string vtk_points(const std::vector<std::array<double, 3>>& points,
                       const std::vector<int64_t>& labels, int d);

}  // namespace octforest

#endif
