#pragma once

#include <Eigen/Dense>

#include <vector>

namespace dgd {

/// Exact nearest-neighbour index over a fixed set of 3D points.
class KdTree {
 public:
  struct Hit {
    Eigen::Index index = -1;
    double squared_distance = 0.0;
  };

  explicit KdTree(Eigen::MatrixX3d points);

  Hit nearest(const Eigen::Vector3d& query) const;
  /// k nearest, sorted by distance (ties by index).
  std::vector<Hit> k_nearest(const Eigen::Vector3d& query, Eigen::Index k) const;

  const Eigen::MatrixX3d& points() const { return points_; }
  Eigen::Index size() const { return points_.rows(); }

 private:
  struct Node {
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;
  };

  int build(int begin, int end, int depth);
  template <typename Visit>
  void descend(int node, const Eigen::Vector3d& q, double& bound, Visit&& visit) const;

  Eigen::MatrixX3d points_;
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
};

}  // namespace dgd
