#include "dgd/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace dgd {

void HandSpec::finalize() {
  finalized_ = false;
  const int nl = static_cast<int>(links.size());
  if (class_id < 0 || class_id >= kNumHandClasses) throw std::invalid_argument(name + ": class_id out of range");
  if (nl == 0) throw std::invalid_argument(name + ": no links");
  if (palm_link < 0 || palm_link >= nl) throw std::invalid_argument(name + ": palm_link out of range");
  if (dof() > kMaxJoints) throw std::invalid_argument(name + ": more than 24 joints");
  if (links[palm_link].finger_label != 0) throw std::invalid_argument(name + ": palm must carry label 0");

  for (const auto& link : links) {
    if (link.finger_label < 0 || link.finger_label > kMaxFingerLabel) {
      throw std::invalid_argument(name + ": finger label outside 0..8 on " + link.name);
    }
    link.mesh.validate();
  }

  parent_joint_.assign(static_cast<std::size_t>(nl), -1);
  for (int j = 0; j < dof(); ++j) {
    const auto& js = joints[j];
    if (js.parent_link < 0 || js.parent_link >= nl || js.child_link < 0 || js.child_link >= nl) {
      throw std::invalid_argument(name + ": joint link index out of range");
    }
    if (js.child_link == palm_link) throw std::invalid_argument(name + ": palm cannot be a child");
    if (parent_joint_[js.child_link] != -1) throw std::invalid_argument(name + ": link with two parents");
    if (!(js.lower < js.upper)) throw std::invalid_argument(name + ": joint " + js.name + " has lower >= upper");
    if (std::abs(js.axis.norm() - 1.0) > 1e-9) throw std::invalid_argument(name + ": non-unit axis");
    if (js.type == JointType::Prismatic && js.lower < 0.0) {
      throw std::invalid_argument(name + ": prismatic joint with negative extension");
    }
    parent_joint_[js.child_link] = j;
  }

  // Breadth-first from the palm; anything unreached is disconnected or cyclic.
  joint_order_.clear();
  std::vector<int> frontier{palm_link};
  std::vector<bool> reached(static_cast<std::size_t>(nl), false);
  reached[palm_link] = true;
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int link : frontier) {
      for (int j = 0; j < dof(); ++j) {
        if (joints[j].parent_link != link) continue;
        const int child = joints[j].child_link;
        if (reached[child]) throw std::invalid_argument(name + ": kinematic cycle");
        reached[child] = true;
        joint_order_.push_back(j);
        next.push_back(child);
      }
    }
    frontier = std::move(next);
  }
  if (std::find(reached.begin(), reached.end(), false) != reached.end()) {
    throw std::invalid_argument(name + ": link not connected to palm");
  }

  tip_links_.clear();
  for (int l = 0; l < nl; ++l) {
    if (l == palm_link || links[l].finger_label == 0) continue;
    const bool has_child = std::any_of(joints.begin(), joints.end(), [&](const JointSpec& j) { return j.parent_link == l; });
    if (!has_child) tip_links_.push_back(l);
  }

  total_area_ = 0.0;
  for (const auto& link : links) total_area_ += link.mesh.surface_area();
  finalized_ = true;
}

PoseVector HandPose::to_vector() const {
  PoseVector v;
  v << translation, joints;
  return v;
}

HandPose HandPose::from_vector(const PoseVector& v) {
  HandPose p;
  p.translation = v.head<3>();
  p.joints = v.tail<kMaxJoints>();
  return p;
}

PaddingMask make_padding_mask(const HandSpec& spec) {
  PaddingMask m;
  m.mask.head<3>().setOnes();
  for (int j = 0; j < spec.dof(); ++j) m.mask(3 + j) = 1.0;
  return m;
}

bool satisfies_padding(const HandSpec& spec, const HandPose& pose) {
  for (int j = spec.dof(); j < kMaxJoints; ++j) {
    if (pose.joints(j) != 0.0) return false;
  }
  return true;
}

void require_padding(const HandSpec& spec, const HandPose& pose) {
  for (int j = spec.dof(); j < kMaxJoints; ++j) {
    if (pose.joints(j) != 0.0) {
      throw std::logic_error(spec.name + ": padded joint " + std::to_string(j) + " is nonzero");
    }
  }
}

bool within_limits(const HandSpec& spec, const HandPose& pose) {
  for (int j = 0; j < spec.dof(); ++j) {
    const double q = pose.joints(j);
    if (q < spec.joints[j].lower || q > spec.joints[j].upper) return false;
  }
  return true;
}

std::vector<Eigen::Isometry3d> forward_kinematics(const HandSpec& spec, const HandPose& pose) {
  if (!spec.finalized()) throw std::logic_error("forward_kinematics: spec not finalized");
  if (spec.dof() > kMaxJoints) throw std::out_of_range("forward_kinematics: joint index out of range");
  require_padding(spec, pose);

  std::vector<Eigen::Isometry3d> tf(spec.links.size(), Eigen::Isometry3d::Identity());
  tf[spec.palm_link].translation() = pose.translation;
  for (int j : spec.joint_order()) {
    const JointSpec& js = spec.joints[j];
    Eigen::Isometry3d motion = Eigen::Isometry3d::Identity();
    const double q = pose.joints(j);
    if (js.type == JointType::Revolute) {
      motion.linear() = Eigen::AngleAxisd(q, js.axis).toRotationMatrix();
    } else {
      motion.translation() = q * js.axis;
    }
    tf[js.child_link] = tf[js.parent_link] * js.origin * motion;
  }
  return tf;
}

HandPose clamp_to_limits(const HandSpec& spec, const HandPose& pose) {
  HandPose out = pose;
  for (int j = 0; j < kMaxJoints; ++j) {
    if (j < spec.dof()) {
      out.joints(j) = std::clamp(pose.joints(j), spec.joints[j].lower, spec.joints[j].upper);
    } else {
      out.joints(j) = 0.0;
    }
  }
  return out;
}

LinkSurfaceSamples sample_link_surfaces(const HandSpec& spec, Index count, std::uint64_t seed) {
  if (count < static_cast<Index>(spec.links.size())) {
    throw std::invalid_argument("sample_hand_cloud: count must be at least the number of links");
  }
  struct Face {
    int link;
    Index tri;
  };
  std::vector<Face> faces;
  std::vector<double> cdf;
  double acc = 0.0;
  for (int l = 0; l < static_cast<int>(spec.links.size()); ++l) {
    const auto& mesh = spec.links[l].mesh;
    for (Index f = 0; f < mesh.num_triangles(); ++f) {
      acc += mesh.triangle_area(f);
      faces.push_back({l, f});
      cdf.push_back(acc);
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LinkSurfaceSamples out;
  out.link.resize(count);
  out.local_points.resize(count, 3);
  out.local_normals.resize(count, 3);
  for (Index i = 0; i < count; ++i) {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), unit(rng) * acc);
    if (it == cdf.end()) --it;
    const Face face = faces[static_cast<std::size_t>(it - cdf.begin())];
    const auto& mesh = spec.links[face.link].mesh;
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    out.link(i) = face.link;
    out.local_points.row(i) = ((1.0 - r1) * mesh.vertex(face.tri, 0) + r1 * (1.0 - r2) * mesh.vertex(face.tri, 1) +
                               r1 * r2 * mesh.vertex(face.tri, 2))
                                  .transpose();
    out.local_normals.row(i) = mesh.triangle_normal(face.tri).transpose();
  }
  return out;
}

PointCloud pose_samples(const HandSpec& spec, const LinkSurfaceSamples& samples,
                        const std::vector<Eigen::Isometry3d>& link_tf) {
  const Index n = samples.link.size();
  PointCloud cloud;
  cloud.points.resize(n, 3);
  cloud.normals.emplace(n, 3);
  cloud.labels.emplace(n);
  for (Index i = 0; i < n; ++i) {
    const int l = samples.link(i);
    const Eigen::Isometry3d& tf = link_tf[l];
    cloud.points.row(i) = (tf * samples.local_points.row(i).transpose()).transpose();
    cloud.normals->row(i) = (tf.linear() * samples.local_normals.row(i).transpose()).transpose();
    (*cloud.labels)(i) = spec.links[l].finger_label;
  }
  return cloud;
}

PointCloud sample_hand_cloud(const HandSpec& spec, const HandPose& pose, Index count, std::uint64_t seed) {
  const auto tf = forward_kinematics(spec, pose);
  return pose_samples(spec, sample_link_surfaces(spec, count, seed), tf);
}

std::vector<Eigen::Vector3d> tip_points(const HandSpec& spec, const std::vector<Eigen::Isometry3d>& link_tf) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(spec.tip_links().size());
  for (int l : spec.tip_links()) out.push_back(link_tf[l] * spec.links[l].contact_point);
  return out;
}

PointCloud canonicalize(const PointCloud& cloud, const Rotation3& rot) { return rotated(cloud, rot.inverse()); }
PointCloud decanonicalize(const PointCloud& cloud, const Rotation3& rot) { return rotated(cloud, rot); }

HandPose canonicalize(const HandPose& pose, const Rotation3& rot) {
  HandPose out = pose;
  out.translation = rot.inverse() * pose.translation;
  return out;
}

HandPose decanonicalize(const HandPose& pose, const Rotation3& rot) {
  HandPose out = pose;
  out.translation = rot * pose.translation;
  return out;
}

PoseVector to_network_space(const PoseVector& v) {
  PoseVector out = v;
  out.tail<kMaxJoints>() /= std::numbers::pi;
  return out;
}

PoseVector from_network_space(const PoseVector& v) {
  PoseVector out = v;
  out.tail<kMaxJoints>() *= std::numbers::pi;
  return out;
}

}  // namespace dgd
