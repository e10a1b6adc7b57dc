#include "dgd/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace dgd {

namespace {
constexpr int kLeafSize = 8;
}

KdTree::KdTree(Eigen::MatrixX3d points) : points_(std::move(points)) {
  order_.resize(static_cast<std::size_t>(points_.rows()));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  if (points_.rows() > 0) {
    nodes_.reserve(static_cast<std::size_t>(2 * points_.rows() / kLeafSize + 2));
    build(0, static_cast<int>(points_.rows()), 0);
  }
}

int KdTree::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (int i = begin; i < end; ++i) {
    const Eigen::Vector3d p = points_.row(order_[i]).transpose();
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  (void)depth;

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Eigen::Index a, Eigen::Index b) {
                     const double va = points_(a, axis), vb = points_(b, axis);
                     return va < vb || (va == vb && a < b);
                   });
  const double split = points_(order_[mid], axis);
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

template <typename Visit>
void KdTree::descend(int node_id, const Eigen::Vector3d& q, double& bound, Visit&& visit) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const Eigen::Index idx = order_[i];
      const double d2 = (points_.row(idx).transpose() - q).squaredNorm();
      visit(idx, d2, bound);
    }
    return;
  }
  const double diff = q(node.axis) - node.split;
  const int near = diff < 0 ? node.left : node.right;
  const int far = diff < 0 ? node.right : node.left;
  descend(near, q, bound, visit);
  // Points equal to the split value may live on either side.
  if (diff * diff <= bound) descend(far, q, bound, visit);
}

KdTree::Hit KdTree::nearest(const Eigen::Vector3d& query) const {
  Hit best;
  best.squared_distance = std::numeric_limits<double>::infinity();
  if (nodes_.empty()) return best;
  double bound = best.squared_distance;
  descend(0, query, bound, [&](Eigen::Index idx, double d2, double& b) {
    if (d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index)) {
      best = {idx, d2};
      b = d2;
    }
  });
  return best;
}

std::vector<KdTree::Hit> KdTree::k_nearest(const Eigen::Vector3d& query, Eigen::Index k) const {
  auto worse = [](const Hit& a, const Hit& b) {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
  };
  std::priority_queue<Hit, std::vector<Hit>, decltype(worse)> heap(worse);
  if (nodes_.empty() || k <= 0) return {};
  double bound = std::numeric_limits<double>::infinity();
  descend(0, query, bound, [&](Eigen::Index idx, double d2, double& b) {
    const Hit h{idx, d2};
    if (static_cast<Eigen::Index>(heap.size()) < k) {
      heap.push(h);
    } else if (worse(h, heap.top())) {
      heap.pop();
      heap.push(h);
    }
    if (static_cast<Eigen::Index>(heap.size()) == k) b = heap.top().squared_distance;
  });
  std::vector<Hit> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace dgd
