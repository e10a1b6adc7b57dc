#pragma once

#include "dgd/geometry.hpp"

#include <vector>

namespace dgd {

/// Signed distance queries against a closed triangle mesh.
///
/// The mesh is checked for edge-manifoldness once at construction (every
/// undirected edge shared by exactly two triangles with opposite
/// orientation). Unsigned distance comes from an AABB tree; the sign comes
/// from the generalized winding number, negative inside.
class MeshSdf {
 public:
  struct Closest {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    Index triangle = -1;
    double distance = 0.0;
  };

  explicit MeshSdf(TriangleMesh mesh);

  const TriangleMesh& mesh() const { return mesh_; }

  Closest closest(const Eigen::Vector3d& query) const;
  double winding_number(const Eigen::Vector3d& query) const;
  bool inside(const Eigen::Vector3d& query) const;
  double signed_distance(const Eigen::Vector3d& query) const;

  /// Unit direction pointing away from the solid at the closest surface
  /// point; falls back to the face normal when the query is on the surface.
  Eigen::Vector3d outward_direction(const Eigen::Vector3d& query, const Closest& hit,
                                    double signed_dist) const;

  Eigen::Vector3d centroid() const { return centroid_; }
  const Eigen::AlignedBox3d& bounds() const { return bounds_; }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1, right = -1;
    int begin = 0, end = 0;
  };
  int build(int begin, int end);

  TriangleMesh mesh_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  Eigen::AlignedBox3d bounds_;
  Eigen::Vector3d centroid_;
};

/// Throws std::invalid_argument("open mesh: sign undefined") when some edge
/// is not shared by exactly two consistently oriented triangles.
void require_watertight(const TriangleMesh& mesh);

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

}  // namespace dgd
