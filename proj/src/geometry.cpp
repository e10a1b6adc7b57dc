#include "dgd/geometry.hpp"

#include "dgd/kdtree.hpp"
#include "dgd/mesh_sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace dgd {

void PointCloud::validate() const {
  const Index n = size();
  if (normals) {
    if (normals->rows() != n) throw std::invalid_argument("normals size mismatch");
    for (Index i = 0; i < n; ++i) {
      if (std::abs(normals->row(i).norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("normal is not unit length");
      }
    }
  }
  if (labels && labels->size() != n) throw std::invalid_argument("labels size mismatch");
  if (features && features->rows() != n) throw std::invalid_argument("features size mismatch");
}

PointCloud PointCloud::subset(std::span<const Index> rows) const {
  PointCloud out;
  const auto m = static_cast<Index>(rows.size());
  out.points.resize(m, 3);
  if (normals) out.normals.emplace(m, 3);
  if (labels) out.labels.emplace(m);
  if (features) out.features.emplace(m, features->cols());
  for (Index i = 0; i < m; ++i) {
    const Index r = rows[static_cast<std::size_t>(i)];
    out.points.row(i) = points.row(r);
    if (normals) out.normals->row(i) = normals->row(r);
    if (labels) (*out.labels)(i) = (*labels)(r);
    if (features) out.features->row(i) = features->row(r);
  }
  return out;
}

double TriangleMesh::triangle_area(Index tri) const {
  return 0.5 * (vertex(tri, 1) - vertex(tri, 0)).cross(vertex(tri, 2) - vertex(tri, 0)).norm();
}

Eigen::Vector3d TriangleMesh::triangle_normal(Index tri) const {
  return (vertex(tri, 1) - vertex(tri, 0)).cross(vertex(tri, 2) - vertex(tri, 0)).normalized();
}

double TriangleMesh::surface_area() const {
  double total = 0.0;
  for (Index f = 0; f < num_triangles(); ++f) total += triangle_area(f);
  return total;
}

void TriangleMesh::validate() const {
  const Index nv = num_vertices();
  for (Index f = 0; f < num_triangles(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int idx = triangles(f, k);
      if (idx < 0 || idx >= nv) throw std::invalid_argument("triangle index out of range");
    }
    if (triangle_area(f) <= 1e-12) throw std::invalid_argument("degenerate triangle");
  }
}

TriangleMesh TriangleMesh::transformed(const Eigen::Isometry3d& tf) const {
  TriangleMesh out = *this;
  for (Index v = 0; v < num_vertices(); ++v) {
    out.vertices.row(v) = (tf * vertices.row(v).transpose()).transpose();
  }
  return out;
}

Rotation3::Rotation3(const Eigen::Matrix3d& m) : m_(m) {
  if (!is_rotation(m)) throw std::invalid_argument("matrix is not a proper rotation");
}

Rotation3 Rotation3::from_quaternion(const Eigen::Quaterniond& q) {
  if (q.norm() < 1e-12) throw std::invalid_argument("zero quaternion");
  return Rotation3(q.normalized().toRotationMatrix(), Unchecked{});
}

bool Rotation3::is_rotation(const Eigen::Matrix3d& m, double tol) {
  const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

PointCloud rotated(const PointCloud& cloud, const Rotation3& rot) {
  PointCloud out = cloud;
  out.points = cloud.points * rot.matrix().transpose();
  if (cloud.normals) out.normals = *cloud.normals * rot.matrix().transpose();
  return out;
}

PointCloud transformed(const PointCloud& cloud, const Eigen::Isometry3d& tf) {
  PointCloud out = cloud;
  out.points = (cloud.points * tf.linear().transpose()).rowwise() + tf.translation().transpose();
  if (cloud.normals) out.normals = *cloud.normals * tf.linear().transpose();
  return out;
}

PointCloud concatenate(const PointCloud& a, const PointCloud& b) {
  PointCloud out;
  out.points.resize(a.size() + b.size(), 3);
  out.points << a.points, b.points;
  if (a.normals && b.normals) {
    out.normals.emplace(a.size() + b.size(), 3);
    *out.normals << *a.normals, *b.normals;
  }
  if (a.labels && b.labels) {
    out.labels.emplace(a.size() + b.size());
    *out.labels << *a.labels, *b.labels;
  }
  if (a.features && b.features && a.features->cols() == b.features->cols()) {
    out.features.emplace(a.size() + b.size(), a.features->cols());
    *out.features << *a.features, *b.features;
  }
  return out;
}

PointCloud sample_surface_points(const TriangleMesh& mesh, Index count, std::uint64_t seed) {
  if (mesh.empty()) throw std::invalid_argument("empty mesh");
  if (count < 1) throw std::invalid_argument("count must be positive");

  std::vector<double> cdf(static_cast<std::size_t>(mesh.num_triangles()));
  double acc = 0.0;
  for (Index f = 0; f < mesh.num_triangles(); ++f) {
    acc += mesh.triangle_area(f);
    cdf[static_cast<std::size_t>(f)] = acc;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud out;
  out.points.resize(count, 3);
  out.normals.emplace(count, 3);
  for (Index i = 0; i < count; ++i) {
    const double pick = unit(rng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), pick);
    if (it == cdf.end()) --it;
    const Index f = it - cdf.begin();
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    const Eigen::Vector3d p = (1.0 - r1) * mesh.vertex(f, 0) + r1 * (1.0 - r2) * mesh.vertex(f, 1) +
                              r1 * r2 * mesh.vertex(f, 2);
    out.points.row(i) = p.transpose();
    out.normals->row(i) = mesh.triangle_normal(f).transpose();
  }
  return out;
}

double signed_distance(const TriangleMesh& mesh, const Eigen::Vector3d& query) {
  return MeshSdf(mesh).signed_distance(query);
}

namespace {
double directed_mean_nn(const Eigen::Ref<const Eigen::MatrixX3d>& from, const KdTree& to) {
  double sum = 0.0;
  for (Index i = 0; i < from.rows(); ++i) sum += to.nearest(from.row(i).transpose()).squared_distance;
  return sum / static_cast<double>(from.rows());
}
}  // namespace

double chamfer_distance(const Eigen::Ref<const Eigen::MatrixX3d>& a,
                        const Eigen::Ref<const Eigen::MatrixX3d>& b) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("empty cloud");
  const KdTree ta{Eigen::MatrixX3d(a)};
  const KdTree tb{Eigen::MatrixX3d(b)};
  return directed_mean_nn(a, tb) + directed_mean_nn(b, ta);
}

std::vector<Index> farthest_point_indices(const Eigen::Ref<const Eigen::MatrixX3d>& points,
                                          Index count, std::uint64_t seed) {
  const Index n = points.rows();
  if (count < 1) throw std::invalid_argument("count must be positive");
  if (count > n) throw std::invalid_argument("farthest_point_sample: count exceeds cloud size");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(count));
  chosen.push_back(pick(rng));

  Eigen::VectorXd min_d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  while (static_cast<Index>(chosen.size()) < count) {
    const Eigen::RowVector3d last = points.row(chosen.back());
    min_d2 = min_d2.cwiseMin((points.rowwise() - last).rowwise().squaredNorm());
    for (Index c : chosen) min_d2(c) = -1.0;
    Index best = 0;
    min_d2.maxCoeff(&best);  // first maximal index
    chosen.push_back(best);
  }
  return chosen;
}

PointCloud farthest_point_sample(const PointCloud& cloud, Index count, std::uint64_t seed) {
  const auto idx = farthest_point_indices(cloud.points, count, seed);
  return cloud.subset(idx);
}

Rotation3 random_rotation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u1 = unit(rng), u2 = unit(rng), u3 = unit(rng);
  const double two_pi = 2.0 * std::numbers::pi;
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const Eigen::Quaterniond q(b * std::cos(two_pi * u3), a * std::sin(two_pi * u2),
                             a * std::cos(two_pi * u2), b * std::sin(two_pi * u3));
  return Rotation3::from_quaternion(q);
}

PointCloud extract_contact_region(const PointCloud& hand_cloud, const PointCloud& object_cloud,
                                  double threshold) {
  if (!hand_cloud.normals || !object_cloud.normals) {
    throw std::invalid_argument("extract_contact_region: both clouds need normals");
  }
  if (!(threshold > 0)) throw std::invalid_argument("threshold must be positive");
  if (hand_cloud.empty()) return object_cloud.subset({});

  const KdTree hand_tree(hand_cloud.points);
  const double t2 = threshold * threshold;
  std::vector<Index> keep;
  for (Index i = 0; i < object_cloud.size(); ++i) {
    const Eigen::Vector3d p = object_cloud.points.row(i).transpose();
    const auto hit = hand_tree.nearest(p);
    if (hit.squared_distance > t2) continue;
    const Eigen::Vector3d toward = hand_cloud.points.row(hit.index).transpose() - p;
    if (object_cloud.normals->row(i).dot(toward.transpose()) >= 0.0) keep.push_back(i);
  }
  return object_cloud.subset(keep);
}

}  // namespace dgd
