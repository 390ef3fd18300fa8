#include "octforest/vtk.hpp"

#include <cstdio>

namespace octforest {

namespace {

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  out += buf;
}

}  // namespace

GeometryMap identity_geometry() {
  return [](uint32_t, std::array<double, 3> ref) { return ref; };
}

std::string vtk_unstructured(const std::vector<Forest>& forests, const GeometryMap& geometry) {
  OF_CHECK(!forests.empty());
  Dimension dm = forests[0].dim;
  int corners = dm.children();
  size_t ncells = 0;
  for (const Forest& f : forests) ncells += f.num_local();

  std::string out;
  out += "# vtk DataFile Version 3.0\n";
  out += "octforest leaves\n";
  out += "ASCII\n";
  out += "DATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(ncells * size_t(corners)) + " double\n";
  double scale = 1.0 / double(dm.root_len());
  for (const Forest& f : forests) {
    for (const auto& tree : f.leaves) {
      for (const Octant& o : tree) {
        uint64_t h = octant_size(dm, o);
        for (int c = 0; c < corners; ++c) {
          std::array<double, 3> ref{0.0, 0.0, 0.0};
          for (int j = 0; j < dm.d; ++j) {
            ref[size_t(j)] = double(o.x[size_t(j)] + ((c >> j) & 1 ? h : 0)) * scale;
          }
          std::array<double, 3> p = geometry(o.tree, ref);
          append_num(out, p[0]);
          out += ' ';
          append_num(out, p[1]);
          out += ' ';
          append_num(out, dm.d == 3 ? p[2] : 0.0);
          out += '\n';
        }
      }
    }
  }
  out += "CELLS " + std::to_string(ncells) + " " + std::to_string(ncells * size_t(corners + 1)) +
         "\n";
  size_t base = 0;
  for (size_t c = 0; c < ncells; ++c) {
    out += std::to_string(corners);
    for (int k = 0; k < corners; ++k) out += " " + std::to_string(base + size_t(k));
    out += '\n';
    base += size_t(corners);
  }
  // pixel (8) for quads, voxel (11) for hexes: corner order matches z-order
  out += "CELL_TYPES " + std::to_string(ncells) + "\n";
  for (size_t c = 0; c < ncells; ++c) out += dm.d == 2 ? "8\n" : "11\n";
  out += "CELL_DATA " + std::to_string(ncells) + "\n";
  out += "SCALARS rank int 1\nLOOKUP_TABLE default\n";
  for (const Forest& f : forests) {
    for (size_t c = 0; c < f.num_local(); ++c) out += std::to_string(f.rank) + "\n";
  }
  out += "SCALARS level int 1\nLOOKUP_TABLE default\n";
  for (const Forest& f : forests) {
    for (const auto& tree : f.leaves) {
      for (const Octant& o : tree) out += std::to_string(o.level) + "\n";
    }
  }
  return out;
}

std::string vtk_points(const std::vector<std::array<double, 3>>& points,
                       const std::vector<int64_t>& labels, int d) {
  OF_CHECK(points.size() == labels.size());
  std::string out;
  out += "# vtk DataFile Version 3.0\n";
  out += "octforest nodes\n";
  out += "ASCII\n";
  out += "DATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(points.size()) + " double\n";
  for (const auto& p : points) {
    append_num(out, p[0]);
    out += ' ';
    append_num(out, p[1]);
    out += ' ';
    append_num(out, d == 3 ? p[2] : 0.0);
    out += '\n';
  }
  out += "CELLS " + std::to_string(points.size()) + " " + std::to_string(points.size() * 2) +
         "\n";
  for (size_t i = 0; i < points.size(); ++i) {
    out += "1 " + std::to_string(i) + "\n";
  }
  out += "CELL_TYPES " + std::to_string(points.size()) + "\n";
  for (size_t i = 0; i < points.size(); ++i) out += "1\n";
  out += "CELL_DATA " + std::to_string(points.size()) + "\n";
  out += "SCALARS node_index int 1\nLOOKUP_TABLE default\n";
  for (int64_t v : labels) out += std::to_string(v) + "\n";
  return out;
}

}  // namespace octforest
