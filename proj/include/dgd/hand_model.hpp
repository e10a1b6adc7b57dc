#pragma once

#include "dgd/geometry.hpp"

#include <string>
#include <vector>

namespace dgd {

inline constexpr int kMaxJoints = 24;
inline constexpr int kPoseDim = 3 + kMaxJoints;
inline constexpr int kNumHandClasses = 5;
inline constexpr int kMaxFingerLabel = 8;

using PoseVector = Eigen::Matrix<double, kPoseDim, 1>;

enum class JointType { Revolute, Prismatic };

struct JointSpec {
  std::string name;
  int parent_link = 0;
  int child_link = 0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  /// Joint frame in the parent link frame.
  Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();
  JointType type = JointType::Revolute;
  double lower = 0.0;
  double upper = 0.0;
};

struct LinkGeometry {
  std::string name;
  /// Surface in the link frame (already scaled and offset).
  TriangleMesh mesh;
  int finger_label = 0;
  /// Point on or just behind the contact pad, link frame. Refinement pulls
  /// this point toward the object.
  Eigen::Vector3d contact_point = Eigen::Vector3d::Zero();

  // Provenance for serialization: mesh file and the scale/offset applied.
  std::string mesh_path;
  Eigen::Vector3d mesh_scale = Eigen::Vector3d::Ones();
  Eigen::Vector3d mesh_offset = Eigen::Vector3d::Zero();
};

/// Kinematic description of one hand. Construct, fill, then call finalize()
/// which validates and caches the traversal order.
class HandSpec {
 public:
  std::string name;
  int class_id = 0;
  int palm_link = 0;
  std::vector<JointSpec> joints;
  std::vector<LinkGeometry> links;

  int dof() const { return static_cast<int>(joints.size()); }

  /// Checks the invariants (acyclic tree rooted at the palm, dof <= 24,
  /// labels in 0..8, palm label 0, lower < upper, unit axes, prismatic
  /// lower >= 0) and caches joint order. Throws std::invalid_argument.
  void finalize();
  bool finalized() const { return finalized_; }

  /// Joints ordered parents-first.
  const std::vector<int>& joint_order() const { return joint_order_; }
  /// Joint driving each link, -1 for the palm.
  const std::vector<int>& parent_joint() const { return parent_joint_; }
  /// Finger links (label != 0) with no child joint: the fingertips.
  const std::vector<int>& tip_links() const { return tip_links_; }
  double total_area() const { return total_area_; }

 private:
  std::vector<int> joint_order_;
  std::vector<int> parent_joint_;
  std::vector<int> tip_links_;
  double total_area_ = 0.0;
  bool finalized_ = false;
};

/// h = (t, theta), padded to 27 entries. Entries past the hand's dof are 0.
struct HandPose {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Matrix<double, kMaxJoints, 1> joints = Eigen::Matrix<double, kMaxJoints, 1>::Zero();

  PoseVector to_vector() const;
  static HandPose from_vector(const PoseVector& v);
};

struct PaddingMask {
  PoseVector mask = PoseVector::Zero();
  int valid_count() const { return static_cast<int>(mask.sum()); }
};

PaddingMask make_padding_mask(const HandSpec& spec);

bool satisfies_padding(const HandSpec& spec, const HandPose& pose);
/// Throws std::logic_error naming the offending index.
void require_padding(const HandSpec& spec, const HandPose& pose);
bool within_limits(const HandSpec& spec, const HandPose& pose);

/// Per-link transforms in the canonical frame: palm at pose.translation with
/// identity orientation.
std::vector<Eigen::Isometry3d> forward_kinematics(const HandSpec& spec, const HandPose& pose);

HandPose clamp_to_limits(const HandSpec& spec, const HandPose& pose);

/// Link-frame surface samples drawn area-weighted across all links.
struct LinkSurfaceSamples {
  Eigen::VectorXi link;
  Eigen::MatrixX3d local_points;
  Eigen::MatrixX3d local_normals;
};

LinkSurfaceSamples sample_link_surfaces(const HandSpec& spec, Index count, std::uint64_t seed);
/// Places link-frame samples with the given link transforms; labels are the
/// links' finger labels.
PointCloud pose_samples(const HandSpec& spec, const LinkSurfaceSamples& samples,
                        const std::vector<Eigen::Isometry3d>& link_tf);

/// Labelled hand cloud with normals at `pose`.
PointCloud sample_hand_cloud(const HandSpec& spec, const HandPose& pose, Index count, std::uint64_t seed);

/// World positions of each tip link's contact point.
std::vector<Eigen::Vector3d> tip_points(const HandSpec& spec, const std::vector<Eigen::Isometry3d>& link_tf);

// Canonical frame: the object counter-rotated by R^-1, hand orientation identity.
PointCloud canonicalize(const PointCloud& cloud, const Rotation3& rot);
PointCloud decanonicalize(const PointCloud& cloud, const Rotation3& rot);
HandPose canonicalize(const HandPose& pose, const Rotation3& rot);
HandPose decanonicalize(const HandPose& pose, const Rotation3& rot);

/// Network-space pose: translation as-is, joints divided by pi.
PoseVector to_network_space(const PoseVector& v);
PoseVector from_network_space(const PoseVector& v);

}  // namespace dgd
