#include "dgd/pipeline.hpp"

#include "dgd/hand_io.hpp"
#include "dgd/hand_roster.hpp"
#include "dgd/mesh_io.hpp"
#include "dgd/primitives.hpp"
#include "dgd/sampler.hpp"
#include "dgd/seed.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>

namespace dgd {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).get<std::string>().empty()) return {};
  std::filesystem::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

void check_hands(const std::vector<int>& hands, const char* what) {
  if (hands.empty()) throw UsageError(std::string(what) + ": no hands listed");
  for (int h : hands) {
    if (h < 0 || h >= kNumHandClasses) throw UsageError(std::string(what) + ": hand class out of range");
  }
}

Eigen::Isometry3d rotation_tf(const Rotation3& r) {
  Eigen::Isometry3d tf = Eigen::Isometry3d::Identity();
  tf.linear() = r.matrix();
  return tf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

void PipelineConfig::validate() const {
  if (diffusion_steps < 1) throw UsageError("diffusion steps must be positive");
  if (!(beta_start > 0) || !(beta_end < 1) || beta_end < beta_start) throw UsageError("bad beta range");
  try {
    denoiser.validate();
    physics.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (training.steps < 0 || training.batch_size < 1 || !(training.adam.lr > 0)) {
    throw UsageError("bad training settings");
  }
  if (sampling.num_candidates < 1) throw UsageError("num_candidates must be at least 1");
  check_hands(sampling.hands, "sampling");
  check_hands(generation.hands, "generation");
  if (generation.grasps_per_pair < 1 || generation.retry_budget < 1 || generation.closure_iterations < 1) {
    throw UsageError("bad generation settings");
  }
  if (generation.cloud_points < denoiser.object_points) {
    throw UsageError("cloud_points must be at least the denoiser's object_points");
  }
  if (generation.scales.empty()) throw UsageError("no object scales");
  if (functional.feature_dim < 1 || !(functional.contact_threshold > 0)) throw UsageError("bad functional settings");
  if (!roster.empty() && !std::filesystem::exists(roster)) throw UsageError("roster not found: " + roster.string());
  if (!labels.empty() && !std::filesystem::exists(labels)) throw UsageError("label file not found: " + labels.string());
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  PipelineConfig c;
  try {
    const json j = json::parse(in);
    if (j.value("schema", "") != kConfigSchema) throw UsageError("config schema must be " + std::string(kConfigSchema));
    const auto base = path.parent_path();
    const json paths = j.value("paths", json::object());
    c.roster = resolve(base, paths, "roster");
    c.dataset = resolve(base, paths, "dataset");
    c.checkpoint = resolve(base, paths, "checkpoint");
    c.labels = resolve(base, paths, "labels");

    const json d = j.value("diffusion", json::object());
    c.diffusion_steps = d.value("steps", c.diffusion_steps);
    c.beta_start = d.value("beta_start", c.beta_start);
    c.beta_end = d.value("beta_end", c.beta_end);
    c.denoiser.width = d.value("width", c.denoiser.width);
    c.denoiser.fusion_layers = d.value("fusion_layers", c.denoiser.fusion_layers);
    c.denoiser.object_points = d.value("object_points", c.denoiser.object_points);
    c.denoiser.hand_points = d.value("hand_points", c.denoiser.hand_points);
    c.denoiser.use_class = d.value("use_class", c.denoiser.use_class);
    c.denoiser.use_hand_cloud = d.value("use_hand_cloud", c.denoiser.use_hand_cloud);
    c.denoiser.use_finger_labels = d.value("use_finger_labels", c.denoiser.use_finger_labels);

    const json t = j.value("training", json::object());
    c.training.steps = t.value("steps", c.training.steps);
    c.training.batch_size = t.value("batch_size", c.training.batch_size);
    c.training.adam.lr = t.value("lr", c.training.adam.lr);
    c.training.normalize_loss = t.value("normalize_loss", c.training.normalize_loss);
    c.training.cosine_decay = t.value("cosine_decay", c.training.cosine_decay);

    const json p = j.value("physics", json::object());
    c.physics.friction_mu = p.value("friction_mu", c.physics.friction_mu);
    c.physics.object_mass = p.value("object_mass", c.physics.object_mass);
    c.physics.acceleration = p.value("acceleration", c.physics.acceleration);
    c.physics.duration_steps = p.value("duration_steps", c.physics.duration_steps);
    c.physics.displacement_limit = p.value("displacement_limit", c.physics.displacement_limit);
    c.physics.cone_facets = p.value("cone_facets", c.physics.cone_facets);
    c.physics.contact_threshold = p.value("contact_threshold", c.physics.contact_threshold);
    c.physics.force_cap = p.value("force_cap", c.physics.force_cap);
    c.physics.balance_tolerance = p.value("balance_tolerance", c.physics.balance_tolerance);
    c.physics.hand_samples = p.value("hand_samples", c.physics.hand_samples);

    const json g = j.value("generation", json::object());
    c.generation.hands = g.value("hands", c.generation.hands);
    c.generation.grasps_per_pair = g.value("grasps_per_pair", c.generation.grasps_per_pair);
    c.generation.retry_budget = g.value("retry_budget", c.generation.retry_budget);
    c.generation.closure_iterations = g.value("closure_iterations", c.generation.closure_iterations);
    c.generation.max_penetration = g.value("max_penetration", c.generation.max_penetration);
    c.generation.cloud_points = g.value("cloud_points", c.generation.cloud_points);
    c.generation.scales = g.value("scales", c.generation.scales);

    const json s = j.value("sampling", json::object());
    c.sampling.num_candidates = s.value("num_candidates", c.sampling.num_candidates);
    c.sampling.hands = s.value("hands", c.sampling.hands);

    const json f = j.value("functional", json::object());
    c.functional.feature_dim = f.value("feature_dim", c.functional.feature_dim);
    c.functional.feature_seed = f.value("feature_seed", c.functional.feature_seed);
    c.functional.contact_threshold = f.value("contact_threshold", c.functional.contact_threshold);

    c.exclude_from_mean = j.value("metrics", json::object()).value("exclude_from_mean", c.exclude_from_mean);
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::pair<std::string, TriangleMesh>> synthetic_objects(const std::vector<double>& scales) {
  std::vector<std::pair<std::string, TriangleMesh>> out;
  for (double s : scales) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%03d", static_cast<int>(std::lround(s * 100)));
    out.emplace_back(std::string("sphere_") + tag, make_icosphere(0.035 * s, 2));
    out.emplace_back(std::string("box_") + tag, make_box(Eigen::Vector3d(0.03, 0.025, 0.04) * s));
    out.emplace_back(std::string("cylinder_") + tag, make_cylinder(0.025 * s, 0.045 * s, 24));
  }
  return out;
}

Dataset generate_synthetic_dataset(const PipelineConfig& cfg, const std::vector<HandSpec>& roster,
                                   std::uint64_t seed, std::ostream& log) {
  const auto& gen = cfg.generation;
  Dataset data;
  const auto objects = synthetic_objects(gen.scales);
  for (std::size_t o = 0; o < objects.size(); ++o) {
    DatasetObject obj;
    obj.id = objects[o].first;
    obj.mesh = objects[o].second;
    obj.cloud = sample_surface_points(obj.mesh, gen.cloud_points, mix_seed(seed, o));
    data.objects.push_back(std::move(obj));
  }
  for (std::size_t o = 0; o < data.objects.size(); ++o) {
    const auto& obj = data.objects[o];
    for (int cls : gen.hands) {
      const HandSpec& spec = hand_by_class(roster, cls);
      const std::uint64_t pair_seed = mix_seed(mix_seed(seed, 1000 + o), static_cast<std::uint64_t>(cls));
      int kept = 0;
      const int budget = gen.grasps_per_pair * gen.retry_budget;
      for (int attempt = 0; attempt < budget && kept < gen.grasps_per_pair; ++attempt) {
        const std::uint64_t s = mix_seed(pair_seed, static_cast<std::uint64_t>(attempt));
        const Rotation3 rot = Rotation3::from_quaternion(random_rotation(mix_seed(s, 0)).quaternion());
        const MeshSdf sdf(obj.mesh.transformed(rotation_tf(rot.inverse())));
        std::mt19937_64 rng(mix_seed(s, 1));
        std::uniform_real_distribution<double> jitter(-0.005, 0.005);
        // Palm under the object along the approach axis, fingers open.
        HandPose pose = open_pose(spec);
        const double zmin = sdf.mesh().vertices.col(2).minCoeff();
        pose.translation = Eigen::Vector3d(jitter(rng), jitter(rng), zmin - 0.012);
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < gen.closure_iterations; ++it) {
          const double f = goal_objective(spec, pose, fingertip_goals(sdf, spec, pose));
          if (!(prev - f > 1e-12)) break;
          prev = f;
          pose = refine_grasp(sdf, spec, pose);
        }
        const PhysicsVerdict v = displacement_test(sdf, spec, pose, cfg.physics, rot);
        if (!v.passed || v.max_penetration > gen.max_penetration) continue;
        GraspRecord rec;
        rec.hand_class = cls;
        rec.object_id = obj.id;
        rec.rotation = rot;
        rec.pose = decanonicalize(pose, rot);
        data.records.push_back(rec);
        ++kept;
      }
      if (kept < gen.grasps_per_pair) {
        log << "warning: " << obj.id << " / " << spec.name << ": kept " << kept << " of " << gen.grasps_per_pair
            << " grasps after " << budget << " attempts\n";
      }
    }
  }
  return data;
}

LabelEmbeddingSet synthetic_labels(const FunctionalConfig& cfg) {
  LabelEmbeddingSet set;
  auto add = [&](const char* text, Eigen::Vector3d dir) {
    Eigen::Matrix<double, 7, 1> proto;
    proto << dir, dir, 0.0;
    set.labels.push_back(text);
    set.embeddings.conservativeResize(set.embeddings.rows() + 1, cfg.feature_dim);
    set.embeddings.row(set.embeddings.rows() - 1) = toy_label_embedding(proto, cfg.feature_dim, cfg.feature_seed);
  };
  set.embeddings.resize(0, cfg.feature_dim);
  add("top", Eigen::Vector3d::UnitZ());
  add("bottom", -Eigen::Vector3d::UnitZ());
  add("front", Eigen::Vector3d::UnitX());
  add("back", -Eigen::Vector3d::UnitX());
  set.temperature = 0.07;
  set.validate();
  return set;
}

std::vector<TrainingExample> make_training_set(const Dataset& dataset, const std::vector<HandSpec>& roster,
                                               const DenoiserConfig& cfg, std::uint64_t seed) {
  std::vector<PointCloud> clouds;
  for (std::size_t o = 0; o < dataset.objects.size(); ++o) {
    clouds.push_back(farthest_point_sample(dataset.objects[o].cloud, cfg.object_points, mix_seed(seed, o)));
  }
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& rec = dataset.records[i];
    std::size_t o = 0;
    while (dataset.objects[o].id != rec.object_id) ++o;
    out.push_back(make_training_example(hand_by_class(roster, rec.hand_class), rec, clouds[o], cfg,
                                        mix_seed(seed, 100000 + i)));
  }
  return out;
}

Checkpoint train_model(const PipelineConfig& cfg, const Dataset& dataset, const std::vector<HandSpec>& roster,
                       std::uint64_t seed, std::ostream& log) {
  if (dataset.records.empty()) throw std::runtime_error("dataset has no grasp records");
  Checkpoint ckpt;
  ckpt.schedule = make_linear_schedule(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end);
  ckpt.params = DenoiserParams::initialize(cfg.denoiser, mix_seed(seed, 1));
  const auto examples = make_training_set(dataset, roster, cfg.denoiser, mix_seed(seed, 2));
  TrainConfig tc = cfg.training;
  tc.seed = mix_seed(seed, 3);
  const int every = std::max(1, tc.steps / 10);
  double window = 0.0;
  train(ckpt.params, examples, ckpt.schedule, tc, [&](int step, double loss) {
    window += loss;
    if ((step + 1) % every == 0) {
      log << "step " << step + 1 << " loss " << window / every << '\n';
      window = 0.0;
    }
  });
  return ckpt;
}

PointCloud model_object_cloud(const TriangleMesh& mesh, const DenoiserConfig& cfg, Index dense_points,
                              std::uint64_t seed) {
  const PointCloud dense = sample_surface_points(mesh, dense_points, mix_seed(seed, 0));
  return farthest_point_sample(dense, cfg.object_points, mix_seed(seed, 1));
}

std::vector<GraspRecord> sample_candidates(const Checkpoint& ckpt, const HandSpec& spec, const PointCloud& object_cloud,
                                           int count, std::uint64_t seed, const std::string& object_id) {
  if (count < 1) throw UsageError("candidate count must be at least 1");
  std::vector<GraspRecord> out;
  for (int i = 0; i < count; ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    const Rotation3 rot = random_rotation(mix_seed(seed, 2 * k));
    out.push_back(reverse_sample(ckpt.params, ckpt.schedule, spec, object_cloud, rot, mix_seed(seed, 2 * k + 1),
                                 object_id));
  }
  return out;
}

std::vector<PhysicsVerdict> filter_candidates(const TriangleMesh& object_mesh, const HandSpec& spec,
                                              const std::vector<GraspRecord>& candidates,
                                              const WrenchTestConfig& cfg) {
  std::vector<PhysicsVerdict> out;
  for (const auto& c : candidates) {
    const MeshSdf sdf(object_mesh.transformed(rotation_tf(c.rotation.inverse())));
    PhysicsVerdict v = displacement_test(sdf, spec, canonicalize(c.pose, c.rotation), cfg, c.rotation);
    v.refined_pose = decanonicalize(v.refined_pose, c.rotation);
    out.push_back(v);
  }
  return out;
}

PointCloud hand_cloud_for(const HandSpec& spec, const HandPose& pose, const Rotation3& rotation, Index count,
                          std::uint64_t seed) {
  return decanonicalize(sample_hand_cloud(spec, canonicalize(pose, rotation), count, seed), rotation);
}

EvalReport evaluate_model(const PipelineConfig& cfg, const Checkpoint& ckpt, const Dataset& dataset,
                          const std::vector<HandSpec>& roster, std::uint64_t seed, const std::string& label,
                          std::ostream& log) {
  std::vector<EvaluatedGrasp> grasps;
  for (std::size_t o = 0; o < dataset.objects.size(); ++o) {
    const auto& obj = dataset.objects[o];
    const PointCloud cloud = farthest_point_sample(obj.cloud, ckpt.params.config.object_points, mix_seed(seed, o));
    for (int cls : cfg.sampling.hands) {
      const HandSpec& spec = hand_by_class(roster, cls);
      const auto cands = sample_candidates(ckpt, spec, cloud, cfg.sampling.num_candidates,
                                           mix_seed(mix_seed(seed, 1000 + o), static_cast<std::uint64_t>(cls)), obj.id);
      const auto verdicts = filter_candidates(obj.mesh, spec, cands, cfg.physics);
      int passed = 0;
      for (const auto& v : verdicts) {
        grasps.push_back({cls, v});
        passed += v.passed;
      }
      log << obj.id << " / " << spec.name << ": " << passed << " of " << verdicts.size() << " passed\n";
    }
  }
  return compute_metrics(roster, grasps, cfg.exclude_from_mean, label);
}

RunResult run_pipeline(const PipelineConfig& cfg, const Checkpoint& ckpt, const std::vector<HandSpec>& roster,
                       const TriangleMesh& object_mesh, const std::string& object_id, const std::string& hand,
                       const std::string& affordance, std::uint64_t seed, const std::filesystem::path& out_dir,
                       std::ostream& log) {
  if (cfg.sampling.num_candidates < 1) throw UsageError("num_candidates must be at least 1");
  const HandSpec* spec = nullptr;
  try {
    spec = &hand_by_name(roster, hand);
  } catch (const std::exception&) {
    throw UsageError("unknown hand: " + hand);
  }
  const LabelEmbeddingSet labels =
      cfg.labels.empty() ? synthetic_labels(cfg.functional) : load_label_embeddings(cfg.labels);
  Index label_index = -1;
  try {
    label_index = labels.index_of(affordance);
  } catch (const std::out_of_range&) {
    throw UsageError("no embedding for affordance label: " + affordance);
  }

  std::filesystem::create_directories(out_dir);
  RunResult res;
  const PointCloud dense = sample_surface_points(object_mesh, cfg.generation.cloud_points, mix_seed(seed, 11));
  const PointCloud model_cloud = farthest_point_sample(dense, ckpt.params.config.object_points, mix_seed(seed, 12));
  res.candidates = sample_candidates(ckpt, *spec, model_cloud, cfg.sampling.num_candidates, mix_seed(seed, 13),
                                     object_id);
  res.verdicts = filter_candidates(object_mesh, *spec, res.candidates, cfg.physics);

  std::vector<EvaluatedGrasp> grasps;
  std::string lines;
  for (std::size_t i = 0; i < res.verdicts.size(); ++i) {
    grasps.push_back({spec->class_id, res.verdicts[i]});
    lines += verdict_json_line(static_cast<int>(i), res.verdicts[i]) + "\n";
  }
  res.report = compute_metrics(roster, grasps, cfg.exclude_from_mean, object_id);
  write_text(out_dir / "verdicts.jsonl", lines);
  write_ply(dense, out_dir / "object.ply");

  json report = {{"schema", kReportSchema},
                 {"object_id", object_id},
                 {"hand", spec->name},
                 {"affordance", affordance},
                 {"seed", seed},
                 {"num_candidates", cfg.sampling.num_candidates},
                 {"metrics", report_to_json(res.report)}};
  auto finish = [&](int code, const std::string& msg) {
    res.exit_code = code;
    res.message = msg;
    report["status"] = code == kExitOk ? "ok" : msg;
    report["exit_code"] = code;
    write_text(out_dir / "report.json", report.dump(2) + "\n");
    log << msg << '\n';
    return res;
  };

  int survivors = 0;
  for (const auto& v : res.verdicts) survivors += v.passed;
  report["survivors"] = survivors;
  if (survivors == 0) return finish(kExitNoSurvivors, "no physics survivors");

  const PointFeatureField field = toy_point_features(dense, cfg.functional.feature_dim, cfg.functional.feature_seed);
  const AffordanceSegmentation seg = affordance_softmax(correlation_matrix(field, labels), labels.temperature);
  const PointCloud region = extract_affordance_region(seg, dense, label_index);
  report["affordance_points"] = region.size();
  if (region.empty()) return finish(kExitAffordanceAbsent, AffordanceNotFound().what());
  write_ply(region, out_dir / "affordance_region.ply");

  std::vector<PointCloud> contact_regions(res.candidates.size());
  std::vector<PointCloud> hand_clouds(res.candidates.size());
  for (std::size_t i = 0; i < res.candidates.size(); ++i) {
    if (!res.verdicts[i].passed) continue;
    hand_clouds[i] = hand_cloud_for(*spec, res.verdicts[i].refined_pose, res.candidates[i].rotation,
                                    cfg.physics.hand_samples, cfg.physics.sample_seed);
    contact_regions[i] = extract_contact_region(hand_clouds[i], dense, cfg.functional.contact_threshold);
    if (contact_regions[i].empty()) log << "warning: candidate " << i << " passed physics with no contact region\n";
  }
  Selection sel;
  try {
    sel = select_functional_grasp(contact_regions, region);
  } catch (const std::runtime_error& e) {
    return finish(kExitNoSurvivors, e.what());
  }
  res.selected = static_cast<int>(sel.index);
  res.score = sel.score;
  const auto i = static_cast<std::size_t>(sel.index);
  GraspRecord chosen = res.candidates[i];
  chosen.pose = res.verdicts[i].refined_pose;
  report["selected"] = {{"candidate_id", sel.index},
                        {"chamfer_m2", sel.score},
                        {"record", grasp_record_to_json(chosen)},
                        {"verdict", json::parse(verdict_json_line(static_cast<int>(sel.index), res.verdicts[i]))}};
  write_ply(hand_clouds[i], out_dir / "selected_hand.ply");
  write_ply(contact_regions[i], out_dir / "contact_region.ply");
  return finish(kExitOk, "selected candidate " + std::to_string(sel.index));
}

}  // namespace dgd
