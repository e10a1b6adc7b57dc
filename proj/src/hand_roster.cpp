#include "dgd/hand_roster.hpp"

#include "dgd/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dgd {

namespace {

constexpr double kPalmHalfThickness = 0.01;
constexpr double kFlexLower = -0.3;
constexpr double kFlexUpper = 1.6;
constexpr double kSpread = 0.35;
// Refinement targets sit this far behind the pad surface so that a pad at
// the goal gap registers as a contact.
constexpr double kPadInset = 0.0015;

struct FingerLayout {
  std::string name;
  double angle;  // around the palm normal
  int label;
  bool spread;
  std::vector<double> lengths;
};

int add_box_link(HandSpec& spec, const std::string& name, const Eigen::Vector3d& size,
                 const Eigen::Vector3d& offset, int label) {
  LinkGeometry link;
  link.name = name;
  link.finger_label = label;
  link.mesh_path = kUnitBoxMesh;
  link.mesh_scale = size;
  link.mesh_offset = offset;
  link.mesh = make_box(Eigen::Vector3d::Constant(0.5));
  for (Index v = 0; v < link.mesh.num_vertices(); ++v) {
    link.mesh.vertices.row(v) = link.mesh.vertices.row(v).cwiseProduct(size.transpose()) + offset.transpose();
  }
  link.contact_point = offset;
  spec.links.push_back(std::move(link));
  return static_cast<int>(spec.links.size()) - 1;
}

void add_joint(HandSpec& spec, const std::string& name, int parent, int child, const Eigen::Vector3d& axis,
               const Eigen::Vector3d& xyz, double lower, double upper) {
  JointSpec js;
  js.name = name;
  js.parent_link = parent;
  js.child_link = child;
  js.axis = axis.normalized();
  js.origin = Eigen::Isometry3d::Identity();
  js.origin.translation() = xyz;
  js.type = JointType::Revolute;
  js.lower = lower;
  js.upper = upper;
  spec.joints.push_back(js);
}

void add_finger(HandSpec& spec, const FingerLayout& f, double base_radius, double half_width) {
  const Eigen::Vector3d base(base_radius * std::cos(f.angle), base_radius * std::sin(f.angle), kPalmHalfThickness);
  const Eigen::Vector3d inward = -Eigen::Vector3d(std::cos(f.angle), std::sin(f.angle), 0.0);
  // Positive flexion curls the finger toward the palm axis.
  const Eigen::Vector3d flex_axis = Eigen::Vector3d::UnitZ().cross(inward).normalized();
  const double w2 = 2.0 * half_width;

  int parent = spec.palm_link;
  Eigen::Vector3d at = base;
  if (f.spread) {
    const int knuckle = add_box_link(spec, f.name + "_knuckle", {w2, w2, 0.01}, {0, 0, 0.005}, f.label);
    add_joint(spec, f.name + "_spread", parent, knuckle, inward, at, -kSpread, kSpread);
    parent = knuckle;
    at = {0, 0, 0.01};
  }
  for (std::size_t k = 0; k < f.lengths.size(); ++k) {
    const double len = f.lengths[k];
    const int link = add_box_link(spec, f.name + "_phalanx" + std::to_string(k), {w2, w2, len},
                                  {0, 0, len / 2}, f.label);
    add_joint(spec, f.name + "_flex" + std::to_string(k), parent, link, flex_axis, at, kFlexLower, kFlexUpper);
    parent = link;
    at = {0, 0, len};
    if (k + 1 == f.lengths.size()) {
      spec.links[link].contact_point = Eigen::Vector3d(0, 0, 0.65 * len) + inward * (half_width - kPadInset);
    }
  }
}

HandSpec make_hand(const std::string& name, int class_id, const std::vector<FingerLayout>& fingers,
                   double base_radius, double half_width, bool wrist) {
  HandSpec spec;
  spec.name = name;
  spec.class_id = class_id;
  spec.palm_link = add_box_link(spec, "palm", {0.1, 0.1, 2 * kPalmHalfThickness}, Eigen::Vector3d::Zero(), 0);
  if (wrist) {
    const int w1 = add_box_link(spec, "wrist_flex", {0.03, 0.03, 0.02}, {0, 0, -0.01}, 0);
    add_joint(spec, "wrist_flex", spec.palm_link, w1, Eigen::Vector3d::UnitX(), {0, 0, -kPalmHalfThickness}, -0.5, 0.5);
    const int w2 = add_box_link(spec, "wrist_dev", {0.03, 0.03, 0.02}, {0, 0, -0.01}, 0);
    add_joint(spec, "wrist_dev", w1, w2, Eigen::Vector3d::UnitY(), {0, 0, -0.02}, -0.5, 0.5);
  }
  for (const auto& f : fingers) add_finger(spec, f, base_radius, half_width);
  spec.finalize();
  return spec;
}

}  // namespace

std::vector<HandSpec> builtin_roster() {
  const double pi = std::numbers::pi;
  std::vector<HandSpec> roster;
  roster.push_back(make_hand("ezgripper", 0,
                             {{"left", 0.0, 1, false, {0.1}}, {"right", pi, 2, false, {0.1}}},
                             0.03, 0.01, false));
  roster.push_back(make_hand("barrett", 1,
                             {{"f1", pi / 3, 1, true, {0.06, 0.05}},
                              {"f2", -pi / 3, 2, true, {0.06, 0.05}},
                              {"f3", pi, 3, false, {0.06, 0.05}}},
                             0.035, 0.01, false));
  roster.push_back(make_hand("robotiq_3f", 2,
                             {{"a", pi / 4, 1, true, {0.045, 0.035, 0.03}},
                              {"b", -pi / 4, 2, true, {0.045, 0.035, 0.03}},
                              {"c", pi, 3, false, {0.045, 0.035, 0.03}}},
                             0.035, 0.01, false));
  roster.push_back(make_hand("allegro", 3,
                             {{"thumb", pi, 1, true, {0.04, 0.035, 0.03}},
                              {"index", 0.6, 2, true, {0.045, 0.035, 0.03}},
                              {"middle", 0.0, 3, true, {0.045, 0.035, 0.03}},
                              {"ring", -0.6, 4, true, {0.045, 0.035, 0.03}}},
                             0.04, 0.0095, false));
  roster.push_back(make_hand("shadowhand", 4,
                             {{"thumb", pi, 1, true, {0.02, 0.035, 0.03, 0.025}},
                              {"index", 0.75, 2, true, {0.045, 0.03, 0.025}},
                              {"middle", 0.25, 3, true, {0.045, 0.03, 0.025}},
                              {"ring", -0.25, 4, true, {0.045, 0.03, 0.025}},
                              {"little", -0.75, 5, true, {0.02, 0.04, 0.028, 0.022}}},
                             0.04, 0.009, true));
  return roster;
}

HandPose open_pose(const HandSpec& spec) {
  HandPose pose;
  for (int j = 0; j < spec.dof(); ++j) {
    const auto& js = spec.joints[j];
    pose.joints(j) = js.name.find("_flex") != std::string::npos && js.name.rfind("wrist", 0) != 0
                         ? js.lower
                         : std::clamp(0.0, js.lower, js.upper);
  }
  return pose;
}

}  // namespace dgd
