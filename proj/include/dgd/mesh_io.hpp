#pragma once

#include "dgd/geometry.hpp"

#include <filesystem>
#include <string>

namespace dgd {

/// Dispatches on extension: .off, .stl (ASCII or binary).
TriangleMesh read_mesh(const std::filesystem::path& path);
TriangleMesh read_off(const std::filesystem::path& path);
/// STL facets are welded on exact vertex coordinates so closed STL solids
/// come back edge-manifold.
TriangleMesh read_stl(const std::filesystem::path& path);

void write_off(const TriangleMesh& mesh, const std::filesystem::path& path);

/// ASCII PLY with x y z [nx ny nz] [label]. Output bytes depend only on the
/// cloud contents.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path);
/// Reads the subset of PLY that write_ply produces.
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace dgd
