// Acceptance checks, one line per criterion. Tolerances and budgets are fixed
// here; run with --only AC3,AC5 to pick a subset.

#include "dgd/checkpoint.hpp"
#include "dgd/functional.hpp"
#include "dgd/hand_io.hpp"
#include "dgd/hand_roster.hpp"
#include "dgd/mesh_sdf.hpp"
#include "dgd/physics.hpp"
#include "dgd/pipeline.hpp"
#include "dgd/primitives.hpp"
#include "dgd/sampler.hpp"
#include "dgd/seed.hpp"
#include "dgd/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef DGD_CLI_PATH
#define DGD_CLI_PATH "dgd"
#endif

using namespace dgd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PoseVector gaussian_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  PoseVector v;
  for (int i = 0; i < kPoseDim; ++i) v(i) = n(rng);
  return v;
}

HandPose random_pose_in_limits(const HandSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HandPose p;
  for (int j = 0; j < spec.dof(); ++j) {
    const auto& js = spec.joints[j];
    p.joints(j) = js.lower + u(rng) * (js.upper - js.lower);
  }
  return p;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dgd_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------

Outcome ac1_forward_noise() {
  constexpr int kDraws = 100000;
  constexpr double kSigmas = 3.0;
  const Eigen::Vector2d h0(0.8, -0.5);
  bool ok = true;
  std::string detail;
  for (int T : {100, 1000}) {
    const NoiseSchedule s = make_linear_schedule(T);
    std::mt19937_64 rng(mix_seed(1, T));
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector2d sum_a = Eigen::Vector2d::Zero(), sq_a = sum_a, sum_b = sum_a, sq_b = sum_a;
    for (int k = 0; k < kDraws; ++k) {
      const Eigen::Vector2d a = forward_noise(s, h0, T, Eigen::Vector2d(n(rng), n(rng)));
      Eigen::Vector2d b = h0;
      for (int t = 1; t <= T; ++t) b = forward_step(s, b, t, Eigen::Vector2d(n(rng), n(rng)));
      sum_a += a;
      sq_a += a.cwiseAbs2();
      sum_b += b;
      sq_b += b.cwiseAbs2();
    }
    double worst = 0.0;
    for (int d = 0; d < 2; ++d) {
      const double ma = sum_a(d) / kDraws, mb = sum_b(d) / kDraws;
      const double va = (sq_a(d) - kDraws * ma * ma) / (kDraws - 1), vb = (sq_b(d) - kDraws * mb * mb) / (kDraws - 1);
      const double se_mean = std::sqrt(va / kDraws + vb / kDraws);
      const double se_var = std::sqrt(2 * va * va / (kDraws - 1) + 2 * vb * vb / (kDraws - 1));
      worst = std::max({worst, std::abs(ma - mb) / se_mean, std::abs(va - vb) / se_var});
      // and against the closed form itself
      const double ab = s.alpha_bar(T);
      worst = std::max({worst, std::abs(mb - std::sqrt(ab) * h0(d)) / std::sqrt(vb / kDraws),
                        std::abs(vb - (1 - ab)) / std::sqrt(2 * vb * vb / (kDraws - 1))});
    }
    ok = ok && worst <= kSigmas;
    detail += fmt("T=%d worst %.2f SE; ", T, worst);
  }
  return {ok, detail + "limit 3 SE"};
}

// ---------------------------------------------------------------------------

Outcome ac2_gradients() {
  DenoiserConfig cfg;
  cfg.width = 16;
  cfg.fusion_layers = 2;
  cfg.object_points = 32;
  cfg.hand_points = 32;
  DenoiserParams params = DenoiserParams::initialize(cfg, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> jitter(0.0, 0.05);
  // biases and the skip gain away from their init values
  for (auto& p : params.params) {
    for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += jitter(rng);
  }
  const auto roster = builtin_roster();
  const PointCloud cloud = sample_surface_points(make_icosphere(0.035, 2), 256, 5);
  std::vector<TrainingExample> examples;
  for (int cls : {0, 4}) {
    const HandSpec& spec = hand_by_class(roster, cls);
    GraspRecord rec;
    rec.hand_class = cls;
    rec.rotation = random_rotation(mix_seed(6, cls));
    HandPose pose = random_pose_in_limits(spec, rng);
    pose.translation = Eigen::Vector3d(0.01, 0.0, -0.05);
    rec.pose = pose;
    examples.push_back(make_training_example(spec, rec, cloud, cfg, mix_seed(7, cls)));
  }
  const NoiseSchedule sched = make_linear_schedule(100);
  std::vector<NoisedSample> batch;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    NoisedSample s;
    s.example = &examples[i];
    s.t = i == 0 ? 7 : 63;
    s.noise = gaussian_pose(rng).cwiseProduct(examples[i].mask.mask);
    batch.push_back(s);
  }
  const LossAndGrad base = loss_and_grad(params, batch, sched, true);

  constexpr double kStep = 1e-4;  // smaller steps drown the 1e-7 gradients in round-off
  constexpr double kRelTol = 1e-3;
  constexpr double kFloor = 1e-6;
  double worst = 0.0;
  std::string worst_name;
  Index checked = 0;
  for (std::size_t k = 0; k < params.params.size(); ++k) {
    auto& value = params.params[k].value;
    for (Index i = 0; i < value.size(); ++i) {
      const double keep = value.data()[i];
      value.data()[i] = keep + kStep;
      const double up = loss_and_grad(params, batch, sched, true).loss;
      value.data()[i] = keep - kStep;
      const double down = loss_and_grad(params, batch, sched, true).loss;
      value.data()[i] = keep;
      const double fd = (up - down) / (2 * kStep);
      const double g = base.grads[k].data()[i];
      const double rel = std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), kFloor});
      if (rel > worst) {
        worst = rel;
        worst_name = params.params[k].name;
      }
      ++checked;
    }
  }
  return {worst <= kRelTol,
          fmt("%lld entries over %zu tensors, worst rel err %.2e (%s), limit 1e-3", static_cast<long long>(checked),
              params.params.size(), worst, worst_name.c_str())};
}

// ---------------------------------------------------------------------------

Outcome ac3_overfit() {
  const auto roster = builtin_roster();
  const HandSpec& spec = hand_by_class(roster, 4);
  const PointCloud cloud = farthest_point_sample(sample_surface_points(make_icosphere(0.035, 2), 1024, 1), 128, 2);
  DenoiserConfig cfg;
  cfg.width = 64;
  cfg.fusion_layers = 2;
  cfg.object_points = 128;
  cfg.hand_points = 64;

  GraspRecord rec;
  rec.hand_class = 4;
  rec.rotation = random_rotation(5);
  HandPose p = open_pose(spec);
  p.translation = Eigen::Vector3d(0.01, -0.02, -0.05);
  for (int j = 0; j < spec.dof(); ++j) p.joints(j) = 0.3 + 0.02 * j;
  p = clamp_to_limits(spec, p);
  rec.pose = decanonicalize(p, rec.rotation);
  const std::vector<TrainingExample> examples = {make_training_example(spec, rec, cloud, cfg, 3)};

  const NoiseSchedule sched = make_linear_schedule(1000);
  DenoiserParams params = DenoiserParams::initialize(cfg, 11);
  TrainConfig tc;
  tc.steps = 5000;
  tc.batch_size = 16;
  tc.adam.lr = 1e-3;
  tc.cosine_decay = true;
  tc.seed = 4;
  const auto curve = train(params, examples, sched, tc);
  double first = 0, last = 0;
  for (int i = 0; i < 100; ++i) {
    first += curve[static_cast<std::size_t>(i)] / 100;
    last += curve[curve.size() - 1 - static_cast<std::size_t>(i)] / 100;
  }
  const double drop = 1.0 - last / first;

  const PaddingMask mask = make_padding_mask(spec);
  int recovered = 0;
  double worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    const GraspRecord out = reverse_sample(params, sched, spec, cloud, rec.rotation, 100 + s);
    const double linf = (out.pose.to_vector() - rec.pose.to_vector()).cwiseProduct(mask.mask).cwiseAbs().maxCoeff();
    recovered += linf <= 0.05;
    worst = std::max(worst, linf);
  }
  return {drop >= 0.9 && recovered >= 8,
          fmt("loss %.4f -> %.4f (%.1f%% drop, need 90%%), recovered %d/10 within 0.05 (worst %.4f), need 8",
              first, last, 100 * drop, recovered, worst)};
}

// ---------------------------------------------------------------------------

Outcome ac4_padding() {
  DenoiserConfig cfg;
  cfg.width = 16;
  cfg.fusion_layers = 1;
  cfg.object_points = 32;
  cfg.hand_points = 32;
  const DenoiserParams params = DenoiserParams::initialize(cfg, 21);
  const NoiseSchedule sched = make_linear_schedule(100);
  const auto roster = builtin_roster();
  const PointCloud cloud = farthest_point_sample(sample_surface_points(make_box({0.03, 0.02, 0.04}), 512, 1), 32, 2);
  int padding = 0, limits = 0, total = 0;
  for (int k = 0; k < 1000; ++k) {
    const HandSpec& spec = roster[static_cast<std::size_t>(k % 5)];
    const GraspRecord r =
        reverse_sample(params, sched, spec, cloud, random_rotation(mix_seed(22, k)), mix_seed(23, k));
    padding += !satisfies_padding(spec, r.pose);
    limits += !within_limits(spec, r.pose);
    ++total;
  }
  return {padding == 0 && limits == 0,
          fmt("%d samples over 5 hands: %d padding violations, %d out-of-limit", total, padding, limits)};
}

// ---------------------------------------------------------------------------

ContactPoint contact(const Eigen::Vector3d& p, const Eigen::Vector3d& n) {
  ContactPoint c;
  c.position = p;
  c.normal = n.normalized();
  return c;
}

Outcome ac5_lp() {
  const auto axes = displacement_axes();
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 5), axis_pick(0, 5);
  const std::vector<double> mus = {0.0, 0.1, 0.3, 0.5, 1.0};
  std::uniform_int_distribution<std::size_t> mu_pick(0, mus.size() - 1);
  int unsound = 0, both_true = 0, lp_only = 0, both_false = 0;
  for (int k = 0; k < 200; ++k) {
    std::vector<ContactPoint> contacts;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d d = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
      const Eigen::Vector3d tilt = 0.2 * Eigen::Vector3d(g(rng), g(rng), g(rng));
      contacts.push_back(contact(0.04 * d, d + tilt));
    }
    WrenchTestConfig cfg;
    cfg.friction_mu = mus[mu_pick(rng)];
    const Eigen::Vector3d axis = axes[static_cast<std::size_t>(axis_pick(rng))];
    const bool lp = wrench_feasibility(contacts, cfg, axis, Eigen::Vector3d::Zero());
    const bool brute = brute_force_wrench_check(contacts, cfg, axis, Eigen::Vector3d::Zero(), 100000, mix_seed(32, k));
    unsound += brute && !lp;
    both_true += brute && lp;
    lp_only += lp && !brute;
    both_false += !lp && !brute;
  }

  const std::vector<ContactPoint> cube = {contact({0.5, 0, 0}, {1, 0, 0}), contact({-0.5, 0, 0}, {-1, 0, 0})};
  WrenchTestConfig friction;
  friction.friction_mu = 0.5;
  int cube_axes = 0;
  for (const auto& a : axes) cube_axes += wrench_feasibility(cube, friction, a, Eigen::Vector3d::Zero());
  WrenchTestConfig frictionless;
  frictionless.friction_mu = 0.0;
  const bool tangential = wrench_feasibility(cube, frictionless, Eigen::Vector3d::UnitY(), Eigen::Vector3d::Zero());

  return {unsound == 0 && cube_axes == 6 && !tangential,
          fmt("200 configs: %d brute-true/LP-false (need 0), agree true %d, LP-only %d, agree false %d; "
              "cube %d/6 axes at mu 0.5, frictionless tangential %s",
              unsound, both_true, lp_only, both_false, cube_axes, tangential ? "feasible" : "infeasible")};
}

// ---------------------------------------------------------------------------

Outcome ac6_refinement() {
  const auto roster = builtin_roster();
  const MeshSdf sdf(make_icosphere(0.035, 2));
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> hand_pick(0, roster.size() - 1);
  int increased = 0, decreased = 0;
  for (int k = 0; k < 100; ++k) {
    const HandSpec& spec = roster[hand_pick(rng)];
    HandPose p = random_pose_in_limits(spec, rng);
    p.translation = Eigen::Vector3d(0.02 * (u(rng) - 0.5), 0.02 * (u(rng) - 0.5), -0.035 - 0.005 - 0.03 * u(rng));
    const auto goals = fingertip_goals(sdf, spec, p);
    const double before = goal_objective(spec, p, goals);
    const double after = goal_objective(spec, refine_grasp(sdf, spec, p), goals);
    increased += after > before;
    decreased += after < before;
  }
  return {increased == 0 && decreased >= 95,
          fmt("100 poses: %d increased (need 0), %d strictly decreased (need 95)", increased, decreased)};
}

// ---------------------------------------------------------------------------

Outcome ac7_cosine_softmax() {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  double worst_cos = 0.0, worst_soft = 0.0, worst_row = 0.0;
  constexpr int kInstances = 50;
  for (int k = 0; k < kInstances; ++k) {
    const Index z = 64, n = 8, d = 24;
    PointFeatureField field;
    field.cloud.points.resize(z, 3);
    for (Index i = 0; i < field.cloud.points.size(); ++i) field.cloud.points.data()[i] = g(rng);
    field.features.resize(z, d);
    for (Index i = 0; i < z; ++i)
      for (Index j = 0; j < d; ++j) field.features(i, j) = g(rng) * (j == 0 ? scale(rng) : 1.0);
    LabelEmbeddingSet labels;
    labels.embeddings.resize(n, d);
    for (Index i = 0; i < n; ++i) {
      labels.labels.push_back("l" + std::to_string(i));
      for (Index j = 0; j < d; ++j) labels.embeddings(i, j) = g(rng);
      labels.embeddings.row(i) *= scale(rng);
    }
    const double temperature = k % 2 ? 0.07 : 0.5;
    const Eigen::MatrixXd S = correlation_matrix(field, labels);
    const AffordanceSegmentation seg = affordance_softmax(S, temperature);
    for (Index x = 0; x < z; ++x) {
      long double denom = 0;
      std::vector<long double> cosines(static_cast<std::size_t>(n));
      for (Index y = 0; y < n; ++y) {
        long double dot = 0, nf = 0, ne = 0;
        for (Index j = 0; j < d; ++j) {
          dot += static_cast<long double>(field.features(x, j)) * labels.embeddings(y, j);
          nf += static_cast<long double>(field.features(x, j)) * field.features(x, j);
          ne += static_cast<long double>(labels.embeddings(y, j)) * labels.embeddings(y, j);
        }
        cosines[static_cast<std::size_t>(y)] = dot / (std::sqrt(nf) * std::sqrt(ne));
        worst_cos = std::max(worst_cos, static_cast<double>(std::abs(S(x, y) - cosines[static_cast<std::size_t>(y)])));
        denom += std::exp(cosines[static_cast<std::size_t>(y)] / temperature);
      }
      for (Index y = 0; y < n; ++y) {
        const long double p = std::exp(cosines[static_cast<std::size_t>(y)] / temperature) / denom;
        worst_soft = std::max(worst_soft, static_cast<double>(std::abs(seg.probabilities(x, y) - p)));
      }
      worst_row = std::max(worst_row, std::abs(seg.probabilities.row(x).sum() - 1.0));
    }
  }
  return {worst_cos <= 1e-12 && worst_soft <= 1e-9 && worst_row <= 1e-6,
          fmt("%d instances of 64x8: cosine err %.1e (<=1e-12), softmax err %.1e (<=1e-9), row sum err %.1e (<=1e-6)",
              kInstances, worst_cos, worst_soft, worst_row)};
}

// ---------------------------------------------------------------------------

double oracle_chamfer(const Eigen::MatrixX3d& a, const Eigen::MatrixX3d& b) {
  auto directed = [](const Eigen::MatrixX3d& p, const Eigen::MatrixX3d& q) {
    double total = 0;
    for (Index i = 0; i < p.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < q.rows(); ++j) best = std::min(best, (p.row(i) - q.row(j)).squaredNorm());
      total += best;
    }
    return total / static_cast<double>(p.rows());
  };
  return directed(a, b) + directed(b, a);
}

PointCloud random_cloud(Index n, std::mt19937_64& rng, const Eigen::Vector3d& center, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  Eigen::MatrixX3d p(n, 3);
  for (Index i = 0; i < n; ++i) p.row(i) = (center + Eigen::Vector3d(u(rng), u(rng), u(rng))).transpose();
  return PointCloud(p);
}

// A long bar: handle on x < 0, blade on x > 0. One candidate pinches each half.
bool handle_blade_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const PointCloud object = sample_surface_points(make_box({0.1, 0.015, 0.01}), 3000, seed);
  const Index dim = 16;
  Eigen::RowVectorXd handle(dim), blade(dim);
  for (Index j = 0; j < dim; ++j) {
    handle(j) = g(rng);
    blade(j) = g(rng);
  }
  PointFeatureField field;
  field.cloud = object;
  field.features.resize(object.size(), dim);
  for (Index i = 0; i < object.size(); ++i) {
    field.features.row(i) = object.points(i, 0) < 0 ? handle : blade;
    for (Index j = 0; j < dim; ++j) field.features(i, j) += 0.3 * g(rng);
  }
  LabelEmbeddingSet labels;
  labels.labels = {"blade", "handle"};
  labels.embeddings.resize(2, dim);
  labels.embeddings.row(0) = blade;
  labels.embeddings.row(1) = handle;
  const auto seg = affordance_softmax(correlation_matrix(field, labels), labels.temperature);
  const PointCloud region = extract_affordance_region(seg, object, labels.index_of("handle"));

  // finger pads 2 mm off the top and bottom faces around x = center
  auto pinch = [&](double center) {
    std::vector<Index> keep;
    for (Index i = 0; i < object.size(); ++i) {
      if (std::abs(object.points(i, 0) - center) < 0.012 && std::abs((*object.normals)(i, 2)) > 0.9) keep.push_back(i);
    }
    PointCloud pads = object.subset(keep);
    pads.points += 0.002 * *pads.normals;
    *pads.normals = -*pads.normals;
    return extract_contact_region(pads, object, 0.005);
  };
  std::uniform_real_distribution<double> where(0.03, 0.07);
  const bool handle_first = seed % 2 == 0;
  const PointCloud on_handle = pinch(-where(rng)), on_blade = pinch(where(rng));
  std::vector<PointCloud> regions = handle_first ? std::vector{on_handle, on_blade} : std::vector{on_blade, on_handle};
  return select_functional_grasp(regions, region).index == (handle_first ? 0 : 1);
}

Outcome ac8_selection() {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> m_dist(1, 8), size(1, 30);
  int matched = 0, with_ties = 0;
  for (int k = 0; k < 100; ++k) {
    const PointCloud region = random_cloud(size(rng), rng, Eigen::Vector3d::Zero(), 0.05);
    const int m = m_dist(rng);
    std::vector<PointCloud> regions;
    for (int i = 0; i < m; ++i) {
      const double r = u(rng);
      if (r < 0.2) {
        regions.emplace_back();
      } else if (r < 0.35 && i > 0) {
        regions.push_back(regions[static_cast<std::size_t>(std::uniform_int_distribution<int>(0, i - 1)(rng))]);
      } else {
        const Eigen::Vector3d c(0.05 * (u(rng) - 0.5), 0.05 * (u(rng) - 0.5), 0.05 * (u(rng) - 0.5));
        regions.push_back(random_cloud(size(rng), rng, c, 0.03));
      }
    }
    Index expect = -1;
    double best = std::numeric_limits<double>::infinity();
    std::set<double> seen;
    bool tie = false;
    for (std::size_t i = 0; i < regions.size(); ++i) {
      if (regions[i].empty()) continue;
      const double d = oracle_chamfer(regions[i].points, region.points);
      tie = tie || !seen.insert(d).second;
      if (d < best) {
        best = d;
        expect = static_cast<Index>(i);
      }
    }
    with_ties += tie;
    Index got = -1;
    try {
      got = select_functional_grasp(regions, region).index;
    } catch (const std::runtime_error&) {
      got = -1;
    }
    matched += got == expect;
  }
  int handle = 0;
  for (std::uint64_t s = 0; s < 10; ++s) handle += handle_blade_fixture(mix_seed(62, s));
  return {matched == 100 && handle == 10,
          fmt("%d/100 fixtures match the exhaustive argmin (%d with tied scores); handle chosen in %d/10 seeds",
              matched, with_ties, handle)};
}

// ---------------------------------------------------------------------------

// Tiny end-to-end setup shared by the determinism and report checks.
fs::path prepare_workspace(int train_steps, std::string& log) {
  const fs::path dir = fresh_dir("workspace");
  save_roster(builtin_roster(), dir / "hands");
  const nlohmann::json cfg = {
      {"schema", kConfigSchema},
      {"paths", {{"roster", "hands/roster.json"}, {"dataset", "dataset"}, {"checkpoint", "checkpoint"}}},
      {"diffusion", {{"steps", 100}, {"width", 32}, {"fusion_layers", 2}, {"object_points", 64}, {"hand_points", 32}}},
      {"training", {{"steps", train_steps}, {"batch_size", 8}, {"lr", 1e-3}, {"cosine_decay", true}}},
      {"generation", {{"hands", {0, 1, 2, 3, 4}}, {"grasps_per_pair", 2}, {"retry_budget", 10}, {"scales", {1.0}},
                      {"cloud_points", 512}}},
      {"sampling", {{"num_candidates", 16}, {"hands", {0, 1, 2, 3, 4}}}},
      {"functional", {{"feature_dim", 32}}}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  const std::string cli = std::string(DGD_CLI_PATH) + " --config " + (dir / "config.json").string() + " --seed 3 ";
  const int gen = shell(cli + "gen-data > " + (dir / "gen.log").string() + " 2>&1");
  const int train = shell(cli + "train > " + (dir / "train.log").string() + " 2>&1");
  log = fmt("gen-data exit %d, train exit %d", gen, train);
  if (gen != 0 || train != 0) return {};
  return dir;
}

Outcome ac9_determinism(const fs::path& ws, const std::string& setup) {
  if (ws.empty()) return {false, "workspace setup failed: " + setup};
  const std::string cli = std::string(DGD_CLI_PATH) + " --config " + (ws / "config.json").string() + " --seed 9 ";
  std::vector<int> codes;
  for (const char* out : {"run_a", "run_b"}) {
    fs::remove_all(ws / out);
    codes.push_back(shell(cli + "--out " + (ws / out).string() +
                          " run --object sphere_100 --hand barrett --affordance top > " +
                          (ws / (std::string(out) + ".log")).string() + " 2>&1"));
  }
  std::vector<std::string> files;
  bool same = codes[0] == codes[1];
  for (const auto& e : fs::directory_iterator(ws / "run_a")) files.push_back(e.path().filename().string());
  std::sort(files.begin(), files.end());
  for (const auto& e : fs::directory_iterator(ws / "run_b")) {
    same = same && std::find(files.begin(), files.end(), e.path().filename().string()) != files.end();
  }
  int ply = 0, json = 0;
  for (const auto& f : files) {
    same = same && slurp(ws / "run_a" / f) == slurp(ws / "run_b" / f);
    ply += f.ends_with(".ply");
    json += f.ends_with(".json") || f.ends_with(".jsonl");
  }
  // a full selection writes every artifact, so insist on it
  return {same && codes[0] == kExitOk && ply == 4 && json == 2,
          fmt("exit codes %d/%d, %d JSON and %d PLY files compared, %s", codes[0], codes[1], json, ply,
              same ? "byte-identical" : "DIFFER")};
}

bool mean_is_exact(const nlohmann::json& report, std::string& why) {
  double sr = 0.0, div = 0.0, col = 0.0;
  int n = 0, n_div = 0, n_col = 0;
  for (const auto& h : report.at("hands")) {
    if (!h.at("in_mean").get<bool>()) continue;
    ++n;
    sr += h.at("success_rate_pct").get<double>();
    if (!h.at("diversity_rad").is_null()) {
      div += h.at("diversity_rad").get<double>();
      ++n_div;
    }
    if (!h.at("collision_depth_mm").is_null()) {
      col += h.at("collision_depth_mm").get<double>();
      ++n_col;
    }
  }
  const auto& m = report.at("mean");
  bool ok = n > 0 && m.at("hands").get<int>() == n && m.at("success_rate_pct").get<double>() == sr / n;
  ok = ok && (n_div == 0 ? m.at("diversity_rad").is_null() : m.at("diversity_rad").get<double>() == div / n_div);
  ok = ok && (n_col == 0 ? m.at("collision_depth_mm").is_null() : m.at("collision_depth_mm").get<double>() == col / n_col);
  why += fmt("%s: mean SR %.2f over %d hands; ", report.at("label").get<std::string>().c_str(), sr / n, n);
  return ok;
}

Outcome ac10_reports(const fs::path& ws, const std::string& setup) {
  if (ws.empty()) return {false, "workspace setup failed: " + setup};
  const auto t0 = std::chrono::steady_clock::now();
  const int code = shell(std::string(DGD_CLI_PATH) + " --config " + (ws / "config.json").string() + " --seed 5 --out " +
                         (ws / "sweep.json").string() + " eval --sweep 100,500,1000 > " + (ws / "sweep.txt").string() +
                         " 2> " + (ws / "sweep.log").string());
  const double elapsed = seconds_since(t0);
  if (code != 0) return {false, fmt("sweep exit code %d", code)};
  const auto j = nlohmann::json::parse(slurp(ws / "sweep.json"));
  std::string why;
  bool ok = j.at("reports").size() == 3;
  for (const auto& r : j.at("reports")) ok = mean_is_exact(r, why) && ok;
  const std::string table = slurp(ws / "sweep.txt");
  ok = ok && table.find("Mean") != std::string::npos;
  return {ok && elapsed < 1800.0, why + fmt("sweep over T=100,500,1000 took %.0f s (limit 1800 s)", elapsed)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<std::string> only;
  app.add_option("--only", only, "Subset of criteria, e.g. AC1,AC5")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  auto wanted = [&](const std::string& id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  struct Check {
    std::string id;
    std::string title;
    double budget_s;
    std::function<Outcome()> run;
  };
  fs::path ws;
  std::string setup;
  auto workspace = [&]() -> const fs::path& {
    if (ws.empty() && setup.empty()) ws = prepare_workspace(6000, setup);
    return ws;
  };
  const std::vector<Check> checks = {
      {"AC1", "forward noising closed form vs chain", 10, ac1_forward_noise},
      {"AC2", "denoiser gradients vs central differences", 60, ac2_gradients},
      {"AC3", "single-grasp overfit and recovery", 600, ac3_overfit},
      {"AC4", "sampled grasps respect padding and limits", 0, ac4_padding},
      {"AC5", "wrench LP soundness", 120, ac5_lp},
      {"AC6", "refinement never increases the objective", 0, ac6_refinement},
      {"AC7", "cosine correlation and affordance softmax", 0, ac7_cosine_softmax},
      {"AC8", "functional selection", 0, ac8_selection},
      {"AC9", "run is byte-deterministic", 0, [&] { return ac9_determinism(workspace(), setup); }},
      {"AC10", "report Mean and step sweep", 0, [&] { return ac10_reports(workspace(), setup); }},
  };

  int failed = 0;
  for (const auto& c : checks) {
    if (!wanted(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double t = seconds_since(t0);
    if (c.budget_s > 0 && t > c.budget_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.budget_s);
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.title << ": " << o.detail
              << fmt(" (%.1f s)", t) << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : fmt("%d criteria failed", failed)) << std::endl;
  return failed == 0 ? 0 : 1;
}
