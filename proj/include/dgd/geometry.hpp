#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace dgd {

using Eigen::Index;

/// N x 3 positions in meters, with optional per-point attributes.
///
/// Attribute matrices, when present, have exactly one row per point. Clouds
/// produced by filters (contact or affordance regions) may be empty.
struct PointCloud {
  Eigen::MatrixX3d points;
  std::optional<Eigen::MatrixX3d> normals;
  std::optional<Eigen::VectorXi> labels;
  std::optional<Eigen::MatrixXd> features;

  PointCloud() = default;
  explicit PointCloud(Eigen::MatrixX3d pts) : points(std::move(pts)) {}

  Index size() const { return points.rows(); }
  bool empty() const { return points.rows() == 0; }
  bool has_normals() const { return normals.has_value(); }
  bool has_labels() const { return labels.has_value(); }

  /// Throws std::invalid_argument if attribute sizes or normal lengths are off.
  void validate() const;

  PointCloud subset(std::span<const Index> rows) const;
};

struct TriangleMesh {
  Eigen::MatrixX3d vertices;
  Eigen::MatrixX3i triangles;

  Index num_vertices() const { return vertices.rows(); }
  Index num_triangles() const { return triangles.rows(); }
  bool empty() const { return triangles.rows() == 0; }

  Eigen::Vector3d vertex(Index tri, int corner) const {
    return vertices.row(triangles(tri, corner)).transpose();
  }
  double triangle_area(Index tri) const;
  /// Unit normal from counter-clockwise winding.
  Eigen::Vector3d triangle_normal(Index tri) const;
  double surface_area() const;

  /// Index range and degeneracy checks (area > 1e-12 m^2).
  void validate() const;

  TriangleMesh transformed(const Eigen::Isometry3d& tf) const;
};

/// Proper rotation, R^T R = I and det R = +1 to 1e-9.
class Rotation3 {
 public:
  Rotation3() : m_(Eigen::Matrix3d::Identity()) {}
  explicit Rotation3(const Eigen::Matrix3d& m);
  static Rotation3 from_quaternion(const Eigen::Quaterniond& q);

  const Eigen::Matrix3d& matrix() const { return m_; }
  Rotation3 inverse() const { return Rotation3(m_.transpose(), Unchecked{}); }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(m_).normalized(); }

  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }
  Rotation3 operator*(const Rotation3& o) const { return Rotation3(m_ * o.m_, Unchecked{}); }

  static bool is_rotation(const Eigen::Matrix3d& m, double tol = 1e-9);

 private:
  struct Unchecked {};
  Rotation3(const Eigen::Matrix3d& m, Unchecked) : m_(m) {}
  Eigen::Matrix3d m_;
};

/// Rotates points and normals; labels and features are carried over.
PointCloud rotated(const PointCloud& cloud, const Rotation3& rot);
PointCloud transformed(const PointCloud& cloud, const Eigen::Isometry3d& tf);
/// Row-wise concatenation; attributes are kept only when both sides have them.
PointCloud concatenate(const PointCloud& a, const PointCloud& b);

PointCloud sample_surface_points(const TriangleMesh& mesh, Index count, std::uint64_t seed);

/// Builds a validated MeshSdf for a one-off query. Use MeshSdf directly for
/// repeated queries on the same mesh.
double signed_distance(const TriangleMesh& mesh, const Eigen::Vector3d& query);

/// Symmetric mean squared nearest-neighbour distance (m^2), exact.
double chamfer_distance(const Eigen::Ref<const Eigen::MatrixX3d>& a,
                        const Eigen::Ref<const Eigen::MatrixX3d>& b);
inline double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  return chamfer_distance(a.points, b.points);
}

std::vector<Index> farthest_point_indices(const Eigen::Ref<const Eigen::MatrixX3d>& points,
                                          Index count, std::uint64_t seed);
PointCloud farthest_point_sample(const PointCloud& cloud, Index count, std::uint64_t seed);

/// Uniform over SO(3) via Shoemake's unit-quaternion construction.
Rotation3 random_rotation(std::uint64_t seed);

/// Object points whose nearest hand point lies within `threshold` and on the
/// side the object normal faces (angle <= 90 degrees).
PointCloud extract_contact_region(const PointCloud& hand_cloud, const PointCloud& object_cloud,
                                  double threshold);

}  // namespace dgd
