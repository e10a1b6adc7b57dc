#include "dgd/mesh_sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

namespace dgd {

namespace {
constexpr int kLeafTriangles = 4;
}

void require_watertight(const TriangleMesh& mesh) {
  // directed edge -> count; a closed consistently wound surface uses each
  // directed edge once and its reverse once.
  std::map<std::pair<int, int>, int> directed;
  for (Index f = 0; f < mesh.num_triangles(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = mesh.triangles(f, k), b = mesh.triangles(f, (k + 1) % 3);
      ++directed[{a, b}];
    }
  }
  for (const auto& [edge, count] : directed) {
    const auto rev = directed.find({edge.second, edge.first});
    if (count != 1 || rev == directed.end() || rev->second != 1) {
      throw std::invalid_argument("open mesh: sign undefined");
    }
  }
}

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

MeshSdf::MeshSdf(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.empty()) throw std::invalid_argument("empty mesh");
  mesh_.validate();
  require_watertight(mesh_);

  bounds_.setEmpty();
  for (Index v = 0; v < mesh_.num_vertices(); ++v) bounds_.extend(mesh_.vertices.row(v).transpose());
  centroid_ = mesh_.vertices.colwise().mean().transpose();

  order_.resize(static_cast<std::size_t>(mesh_.num_triangles()));
  std::iota(order_.begin(), order_.end(), Index{0});
  build(0, static_cast<int>(order_.size()));
}

int MeshSdf::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  Eigen::AlignedBox3d box;
  box.setEmpty();
  Eigen::AlignedBox3d centers;
  centers.setEmpty();
  for (int i = begin; i < end; ++i) {
    const Index f = order_[i];
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) {
      box.extend(mesh_.vertex(f, k));
      c += mesh_.vertex(f, k);
    }
    centers.extend(c / 3.0);
  }
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafTriangles) return id;

  int axis = 0;
  centers.sizes().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  auto centroid_along = [&](Index f) {
    return mesh_.vertex(f, 0)(axis) + mesh_.vertex(f, 1)(axis) + mesh_.vertex(f, 2)(axis);
  };
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Index a, Index b) {
                     const double ca = centroid_along(a), cb = centroid_along(b);
                     return ca < cb || (ca == cb && a < b);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

MeshSdf::Closest MeshSdf::closest(const Eigen::Vector3d& query) const {
  Closest best;
  double best_d2 = std::numeric_limits<double>::infinity();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& node = nodes_[id];
    if (node.box.squaredExteriorDistance(query) > best_d2) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const Index f = order_[i];
        const Eigen::Vector3d cp =
            closest_point_on_triangle(query, mesh_.vertex(f, 0), mesh_.vertex(f, 1), mesh_.vertex(f, 2));
        const double d2 = (cp - query).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && f < best.triangle)) {
          best_d2 = d2;
          best.point = cp;
          best.triangle = f;
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.squaredExteriorDistance(query);
    const double dr = nodes_[node.right].box.squaredExteriorDistance(query);
    // Push the farther child first so the nearer one is visited next.
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

double MeshSdf::winding_number(const Eigen::Vector3d& query) const {
  // Van Oosterom & Strackee solid angle per triangle.
  double total = 0.0;
  for (Index f = 0; f < mesh_.num_triangles(); ++f) {
    const Eigen::Vector3d a = mesh_.vertex(f, 0) - query;
    const Eigen::Vector3d b = mesh_.vertex(f, 1) - query;
    const Eigen::Vector3d c = mesh_.vertex(f, 2) - query;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

bool MeshSdf::inside(const Eigen::Vector3d& query) const {
  if (bounds_.squaredExteriorDistance(query) > 0.0) return false;
  return winding_number(query) > 0.5;
}

double MeshSdf::signed_distance(const Eigen::Vector3d& query) const {
  const Closest hit = closest(query);
  return inside(query) ? -hit.distance : hit.distance;
}

Eigen::Vector3d MeshSdf::outward_direction(const Eigen::Vector3d& query, const Closest& hit,
                                           double signed_dist) const {
  const Eigen::Vector3d delta = query - hit.point;
  const double len = delta.norm();
  if (len > 1e-9) return (signed_dist < 0 ? -delta : delta) / len;
  return mesh_.triangle_normal(hit.triangle);
}

}  // namespace dgd
