#include "dgd/physics.hpp"

#include "dgd/linear_program.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dgd {

namespace {

constexpr double kFdStep = 1e-4;
constexpr int kMaxHalvings = 5;

Eigen::Vector3d any_perpendicular(const Eigen::Vector3d& n) {
  Index k = 0;
  n.cwiseAbs().minCoeff(&k);
  return n.cross(Eigen::Vector3d::Unit(k)).normalized();
}

}  // namespace

std::array<Eigen::Vector3d, 6> displacement_axes() {
  return {Eigen::Vector3d::UnitX(), -Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
          -Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ(), -Eigen::Vector3d::UnitZ()};
}

void WrenchTestConfig::validate() const {
  if (!(acceleration > 0) || duration_steps <= 0 || !(displacement_limit > 0) || !(object_mass > 0) ||
      !(friction_mu >= 0) || !(contact_threshold > 0) || !(force_cap > 0) || !(balance_tolerance > 0) ||
      contact_merge_radius < 0 || hand_samples < 1) {
    throw std::invalid_argument("physics config values must be positive");
  }
  if (cone_facets < 3) throw std::invalid_argument("cone_facets must be >= 3");
  const auto expected = displacement_axes();
  for (std::size_t i = 0; i < 6; ++i) {
    if (axes[i] != expected[i]) throw std::invalid_argument("axes must be exactly +-x, +-y, +-z");
  }
}

std::vector<ContactPoint> detect_contacts(const MeshSdf& sdf, const HandSpec& spec, const LinkSurfaceSamples& samples,
                                          const HandPose& pose, double threshold, double merge_radius) {
  if (!(threshold > 0)) throw std::invalid_argument("contact threshold must be positive");
  const PointCloud cloud = pose_samples(spec, samples, forward_kinematics(spec, pose));
  std::vector<ContactPoint> raw;
  for (Index i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = cloud.points.row(i).transpose();
    const MeshSdf::Closest hit = sdf.closest(p);
    const double sd = sdf.inside(p) ? -hit.distance : hit.distance;
    if (sd > threshold) continue;
    ContactPoint c;
    c.position = hit.point;
    c.normal = sdf.outward_direction(p, hit, sd);
    c.hand_link = samples.link(i);
    c.gap = sd;
    raw.push_back(c);
  }
  // Deepest first, then merge neighbours.
  std::stable_sort(raw.begin(), raw.end(), [](const ContactPoint& a, const ContactPoint& b) { return a.gap < b.gap; });
  std::vector<ContactPoint> kept;
  for (const auto& c : raw) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const ContactPoint& k) {
      return (k.position - c.position).norm() < merge_radius;
    });
    if (!dup) kept.push_back(c);
  }
  return kept;
}

std::vector<ContactPoint> detect_contacts(const TriangleMesh& object_mesh, const HandSpec& spec, const HandPose& pose,
                                          double threshold) {
  const MeshSdf sdf(object_mesh);
  const WrenchTestConfig defaults;
  return detect_contacts(sdf, spec, sample_link_surfaces(spec, defaults.hand_samples, defaults.sample_seed), pose,
                         threshold, defaults.contact_merge_radius);
}

std::vector<Eigen::Vector3d> fingertip_goals(const MeshSdf& sdf, const HandSpec& spec, const HandPose& pose,
                                             double standoff) {
  std::vector<Eigen::Vector3d> goals;
  for (const auto& tip : tip_points(spec, forward_kinematics(spec, pose))) {
    const MeshSdf::Closest hit = sdf.closest(tip);
    const double sd = sdf.inside(tip) ? -hit.distance : hit.distance;
    goals.push_back(hit.point + standoff * sdf.outward_direction(tip, hit, sd));
  }
  return goals;
}

double goal_objective(const HandSpec& spec, const HandPose& pose, const std::vector<Eigen::Vector3d>& goals) {
  const auto tips = tip_points(spec, forward_kinematics(spec, pose));
  if (tips.size() != goals.size()) throw std::invalid_argument("goal count does not match fingertips");
  if (tips.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < tips.size(); ++k) total += (tips[k] - goals[k]).squaredNorm();
  return total / static_cast<double>(tips.size());
}

HandPose refine_grasp(const MeshSdf& sdf, const HandSpec& spec, const HandPose& pose) {
  const HandPose start = clamp_to_limits(spec, pose);
  if (spec.tip_links().empty()) return start;
  const auto goals = fingertip_goals(sdf, spec, pose);
  const PaddingMask mask = make_padding_mask(spec);
  const PoseVector x = pose.to_vector();
  auto f = [&](const PoseVector& v) { return goal_objective(spec, HandPose::from_vector(v), goals); };

  const double f0 = f(x);
  if (!(f0 > 1e-16)) return start;
  PoseVector g = PoseVector::Zero();
  for (int i = 0; i < kPoseDim; ++i) {
    if (mask.mask(i) == 0.0) continue;
    PoseVector hi = x, lo = x;
    hi(i) += kFdStep;
    lo(i) -= kFdStep;
    g(i) = (f(hi) - f(lo)) / (2.0 * kFdStep);
  }
  const double gn2 = g.squaredNorm();
  if (!(gn2 > 1e-20)) return start;

  double step = f0 / gn2;
  for (int k = 0; k <= kMaxHalvings; ++k) {
    const HandPose cand = clamp_to_limits(spec, HandPose::from_vector(x - step * g));
    if (f(cand.to_vector()) < f0) return cand;
    step *= 0.5;
  }
  return start;
}

HandPose refine_grasp(const TriangleMesh& object_mesh, const HandSpec& spec, const HandPose& pose) {
  return refine_grasp(MeshSdf(object_mesh), spec, pose);
}

Eigen::Matrix3Xd cone_edges(const ContactPoint& c, double mu, int facets) {
  if (facets < 3) throw std::invalid_argument("cone_facets must be >= 3");
  const Eigen::Vector3d n = c.normal.normalized();
  const Eigen::Vector3d t1 = any_perpendicular(n);
  const Eigen::Vector3d t2 = n.cross(t1);
  Eigen::Matrix3Xd out(3, facets);
  for (int k = 0; k < facets; ++k) {
    const double phi = 2.0 * M_PI * k / facets;
    out.col(k) = -n + mu * (std::cos(phi) * t1 + std::sin(phi) * t2);
  }
  return out;
}

Eigen::MatrixXd edge_wrenches(const std::vector<ContactPoint>& contacts, double mu, int facets,
                              const Eigen::Vector3d& centroid) {
  Eigen::MatrixXd W(6, static_cast<Index>(contacts.size()) * facets);
  for (std::size_t c = 0; c < contacts.size(); ++c) {
    const Eigen::Matrix3Xd edges = cone_edges(contacts[c], mu, facets);
    const Eigen::Vector3d r = contacts[c].position - centroid;
    for (int k = 0; k < facets; ++k) {
      const Index col = static_cast<Index>(c) * facets + k;
      W.block<3, 1>(0, col) = edges.col(k);
      W.block<3, 1>(3, col) = r.cross(Eigen::Vector3d(edges.col(k)));
    }
  }
  return W;
}

namespace {

Eigen::Matrix<double, 6, 1> required_wrench(const WrenchTestConfig& cfg, const Eigen::Vector3d& axis) {
  Eigen::Matrix<double, 6, 1> w = Eigen::Matrix<double, 6, 1>::Zero();
  w.head<3>() = cfg.object_mass * cfg.acceleration * axis.normalized();
  return w;
}

}  // namespace

bool wrench_feasibility(const std::vector<ContactPoint>& contacts, const WrenchTestConfig& cfg,
                        const Eigen::Vector3d& axis, const Eigen::Vector3d& centroid) {
  if (cfg.cone_facets < 3) throw std::invalid_argument("cone_facets must be >= 3");
  if (contacts.empty()) return false;
  const Eigen::MatrixXd W = edge_wrenches(contacts, cfg.friction_mu, cfg.cone_facets, centroid);
  const auto w = required_wrench(cfg, axis);
  const Index n = W.cols();
  const Index nc = static_cast<Index>(contacts.size());
  // |W l - w| <= tol component-wise, per-contact normal force <= cap, l >= 0.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(12 + nc, n);
  Eigen::VectorXd b(12 + nc);
  A.topRows(6) = W;
  A.middleRows(6, 6) = -W;
  b.head(6) = w.array() + cfg.balance_tolerance;
  b.segment(6, 6) = -w.array() + cfg.balance_tolerance;
  for (Index c = 0; c < nc; ++c) {
    A.block(12 + c, c * cfg.cone_facets, 1, cfg.cone_facets).setOnes();
    b(12 + c) = cfg.force_cap;
  }
  return find_feasible_point(A, b).has_value();
}

bool brute_force_wrench_check(const std::vector<ContactPoint>& contacts, const WrenchTestConfig& cfg,
                              const Eigen::Vector3d& axis, const Eigen::Vector3d& centroid, int samples,
                              std::uint64_t seed) {
  if (samples < 10000) throw std::invalid_argument("brute_force_wrench_check needs at least 1e4 samples");
  if (contacts.empty()) return false;
  const Eigen::MatrixXd W = edge_wrenches(contacts, cfg.friction_mu, cfg.cone_facets, centroid);
  const auto w = required_wrench(cfg, axis);
  const int n = static_cast<int>(W.cols());
  const int kmax = std::min(6, n);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size_dist(1, kmax);
  std::vector<int> cols(static_cast<std::size_t>(n));
  std::iota(cols.begin(), cols.end(), 0);
  using Sub = Eigen::Matrix<double, 6, Eigen::Dynamic, 0, 6, 6>;
  for (int s = 0; s < samples; ++s) {
    const int k = size_dist(rng);
    // Partial Fisher-Yates for k distinct columns.
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(pick(rng))]);
    }
    Sub A(6, k);
    for (int i = 0; i < k; ++i) A.col(i) = W.col(cols[static_cast<std::size_t>(i)]);
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1> lambda = A.colPivHouseholderQr().solve(w);
    if (!lambda.allFinite()) continue;
    lambda = lambda.cwiseMax(0.0);
    Eigen::VectorXd force = Eigen::VectorXd::Zero(static_cast<Index>(contacts.size()));
    for (int i = 0; i < k; ++i) force(cols[static_cast<std::size_t>(i)] / cfg.cone_facets) += lambda(i);
    if ((force.array() > cfg.force_cap).any()) continue;
    const double resid = (A * lambda - w).cwiseAbs().maxCoeff();
    if (resid <= cfg.balance_tolerance) return true;
  }
  return false;
}

double max_penetration(const MeshSdf& sdf, const HandSpec& spec, const LinkSurfaceSamples& samples,
                       const HandPose& pose) {
  const PointCloud cloud = pose_samples(spec, samples, forward_kinematics(spec, pose));
  double depth = 0.0;
  for (Index i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = cloud.points.row(i).transpose();
    if (!sdf.inside(p)) continue;
    depth = std::max(depth, sdf.closest(p).distance);
  }
  return depth;
}

PhysicsVerdict displacement_test(const MeshSdf& sdf, const HandSpec& spec, const HandPose& pose,
                                 const WrenchTestConfig& cfg, const Rotation3& frame) {
  cfg.validate();
  PhysicsVerdict v;
  v.refined_pose = refine_grasp(sdf, spec, pose);
  const LinkSurfaceSamples samples = sample_link_surfaces(spec, cfg.hand_samples, cfg.sample_seed);
  const auto contacts =
      detect_contacts(sdf, spec, samples, v.refined_pose, cfg.contact_threshold, cfg.contact_merge_radius);
  v.contact_count = static_cast<int>(contacts.size());
  const Rotation3 inv = frame.inverse();
  v.passed = true;
  for (std::size_t a = 0; a < 6; ++a) {
    v.per_axis[a] = wrench_feasibility(contacts, cfg, inv * cfg.axes[a], sdf.centroid());
    v.passed = v.passed && v.per_axis[a];
  }
  v.max_penetration = max_penetration(sdf, spec, samples, v.refined_pose);
  return v;
}

PhysicsVerdict displacement_test(const TriangleMesh& object_mesh, const HandSpec& spec, const HandPose& pose,
                                 const WrenchTestConfig& cfg) {
  return displacement_test(MeshSdf(object_mesh), spec, pose, cfg);
}

std::string verdict_json_line(int candidate_id, const PhysicsVerdict& verdict) {
  nlohmann::json j;
  j["candidate_id"] = candidate_id;
  j["passed"] = verdict.passed;
  j["per_axis"] = std::vector<bool>(verdict.per_axis.begin(), verdict.per_axis.end());
  j["max_penetration_m"] = verdict.max_penetration;
  const PoseVector v = verdict.refined_pose.to_vector();
  j["refined_pose"] = std::vector<double>(v.data(), v.data() + v.size());
  return j.dump();
}

}  // namespace dgd
