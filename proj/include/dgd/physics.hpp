#pragma once

#include "dgd/hand_model.hpp"
#include "dgd/mesh_sdf.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dgd {

struct ContactPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // on the object surface
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();   // outward from the object
  int hand_link = -1;
  double gap = 0.0;  // signed, negative when the hand penetrates
};

/// +x, -x, +y, -y, +z, -z.
std::array<Eigen::Vector3d, 6> displacement_axes();

struct WrenchTestConfig {
  double acceleration = 0.5;         // m/s^2
  int duration_steps = 60;           // kept for the record, not used by the LP
  double displacement_limit = 0.02;  // m, kept for the record
  std::array<Eigen::Vector3d, 6> axes = displacement_axes();
  double friction_mu = 0.5;
  double object_mass = 0.1;  // kg
  int cone_facets = 8;
  double contact_threshold = 0.005;   // m
  double contact_merge_radius = 0.002;  // m
  double force_cap = 50.0;            // N, per contact normal force
  double balance_tolerance = 1e-3;    // per wrench component
  Index hand_samples = 1024;          // link surface samples for contact tests
  std::uint64_t sample_seed = 0;

  void validate() const;
};

struct PhysicsVerdict {
  bool passed = false;
  std::array<bool, 6> per_axis{};
  double max_penetration = 0.0;  // m
  HandPose refined_pose;
  int contact_count = 0;
};

/// Contacts from hand surface samples within `threshold` of the object
/// (signed distance <= threshold), merged greedily within `merge_radius`.
std::vector<ContactPoint> detect_contacts(const MeshSdf& sdf, const HandSpec& spec, const LinkSurfaceSamples& samples,
                                          const HandPose& pose, double threshold, double merge_radius = 0.002);
std::vector<ContactPoint> detect_contacts(const TriangleMesh& object_mesh, const HandSpec& spec, const HandPose& pose,
                                          double threshold);

/// Fingertip goals 5 mm outside the object along the outward direction at the
/// closest surface point, fixed at `pose`.
std::vector<Eigen::Vector3d> fingertip_goals(const MeshSdf& sdf, const HandSpec& spec, const HandPose& pose,
                                             double standoff = 0.005);
/// Mean squared distance from the fingertips to their goals.
double goal_objective(const HandSpec& spec, const HandPose& pose, const std::vector<Eigen::Vector3d>& goals);

/// One gradient step on goal_objective over the valid dims (central
/// differences, step 1e-4), with a halving backtrack (at most 5 halvings)
/// that only accepts a strict decrease. The result is within limits.
HandPose refine_grasp(const MeshSdf& sdf, const HandSpec& spec, const HandPose& pose);
HandPose refine_grasp(const TriangleMesh& object_mesh, const HandSpec& spec, const HandPose& pose);

/// Required net contact wrench (m a axis, 0) about the object centroid.
bool wrench_feasibility(const std::vector<ContactPoint>& contacts, const WrenchTestConfig& cfg,
                        const Eigen::Vector3d& axis, const Eigen::Vector3d& centroid);

/// Random subsets of at most six cone edges solved by least squares; true
/// when some nonnegative, capped combination balances the load to within
/// cfg.balance_tolerance.
bool brute_force_wrench_check(const std::vector<ContactPoint>& contacts, const WrenchTestConfig& cfg,
                              const Eigen::Vector3d& axis, const Eigen::Vector3d& centroid, int samples,
                              std::uint64_t seed);

/// Linearized cone edge forces, one column per edge: -n + mu (cos phi t1 + sin phi t2).
Eigen::Matrix3Xd cone_edges(const ContactPoint& c, double mu, int facets);
/// 6 x (contacts * facets) edge wrench matrix about `centroid`.
Eigen::MatrixXd edge_wrenches(const std::vector<ContactPoint>& contacts, double mu, int facets,
                              const Eigen::Vector3d& centroid);

/// max(0, -min signed distance) over the hand samples.
double max_penetration(const MeshSdf& sdf, const HandSpec& spec, const LinkSurfaceSamples& samples,
                       const HandPose& pose);

/// Refine, detect contacts, then the wrench test on all six axes. Inputs are
/// in the hand's canonical frame; `frame` rotates canonical directions into
/// the frame the axes are given in, so each axis is tested as frame^-1 axis.
PhysicsVerdict displacement_test(const MeshSdf& sdf, const HandSpec& spec, const HandPose& pose,
                                 const WrenchTestConfig& cfg, const Rotation3& frame = Rotation3());
PhysicsVerdict displacement_test(const TriangleMesh& object_mesh, const HandSpec& spec, const HandPose& pose,
                                 const WrenchTestConfig& cfg);

/// One JSON line: {candidate_id, passed, per_axis, max_penetration_m, refined_pose}.
std::string verdict_json_line(int candidate_id, const PhysicsVerdict& verdict);

}  // namespace dgd
