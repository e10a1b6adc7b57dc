#pragma once

#include "dgd/geometry.hpp"

namespace dgd {

// Closed, outward-wound primitive meshes centred at the origin.

TriangleMesh make_box(const Eigen::Vector3d& half_extents);
TriangleMesh make_icosphere(double radius, int subdivisions);
/// Axis along z.
TriangleMesh make_cylinder(double radius, double half_height, int segments);

}  // namespace dgd
