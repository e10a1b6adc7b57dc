#pragma once

#include "dgd/checkpoint.hpp"
#include "dgd/dataset.hpp"
#include "dgd/functional.hpp"
#include "dgd/metrics.hpp"
#include "dgd/physics.hpp"
#include "dgd/training.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgd {

inline constexpr const char* kConfigSchema = "dgd_config_v1";

enum ExitCode : int {
  kExitOk = 0,
  kExitNoSurvivors = 2,
  kExitAffordanceAbsent = 3,
  kExitUsage = 64,
};

/// Bad configuration or command-line input (exit code 64).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetGenConfig {
  std::vector<int> hands = {0, 1, 2, 3, 4};
  int grasps_per_pair = 2;  // per object and hand
  int retry_budget = 20;    // attempts per requested grasp
  int closure_iterations = 300;
  double max_penetration = 0.005;  // m, records deeper than this are rejected
  Index cloud_points = 2048;
  std::vector<double> scales = {0.75, 1.0, 1.25};
};

struct SamplingConfig {
  int num_candidates = 64;
  std::vector<int> hands = {0, 1, 2, 3, 4};
};

struct FunctionalConfig {
  Index feature_dim = 32;
  std::uint64_t feature_seed = 7;
  double contact_threshold = 0.005;
};

struct PipelineConfig {
  std::filesystem::path roster;
  std::filesystem::path dataset;     // directory holding dataset.json
  std::filesystem::path checkpoint;  // directory
  std::filesystem::path labels;      // label embedding file, may be empty
  int diffusion_steps = 100;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  DenoiserConfig denoiser;
  TrainConfig training;
  WrenchTestConfig physics;
  DatasetGenConfig generation;
  SamplingConfig sampling;
  FunctionalConfig functional;
  std::vector<int> exclude_from_mean = {2};

  void validate() const;
};

/// Paths resolve relative to the config file. Throws UsageError.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Sphere, box and cylinder meshes at each configured scale.
std::vector<std::pair<std::string, TriangleMesh>> synthetic_objects(const std::vector<double>& scales);

/// Scripted closures kept only when they pass displacement_test. Progress and
/// shortfall warnings go to `log`.
Dataset generate_synthetic_dataset(const PipelineConfig& cfg, const std::vector<HandSpec>& roster,
                                   std::uint64_t seed, std::ostream& log);

/// Affordance vocabulary for the synthetic objects: prototype geometric
/// features pushed through the toy encoder's projection.
LabelEmbeddingSet synthetic_labels(const FunctionalConfig& cfg);

std::vector<TrainingExample> make_training_set(const Dataset& dataset, const std::vector<HandSpec>& roster,
                                               const DenoiserConfig& cfg, std::uint64_t seed);

Checkpoint train_model(const PipelineConfig& cfg, const Dataset& dataset, const std::vector<HandSpec>& roster,
                       std::uint64_t seed, std::ostream& log);

/// Object cloud at the denoiser's input size.
PointCloud model_object_cloud(const TriangleMesh& mesh, const DenoiserConfig& cfg, Index dense_points,
                              std::uint64_t seed);

/// m candidates, each with its own rotation and seed.
std::vector<GraspRecord> sample_candidates(const Checkpoint& ckpt, const HandSpec& spec, const PointCloud& object_cloud,
                                           int count, std::uint64_t seed, const std::string& object_id = "");

/// Physics verdicts in the object frame (refined poses decanonicalized).
std::vector<PhysicsVerdict> filter_candidates(const TriangleMesh& object_mesh, const HandSpec& spec,
                                              const std::vector<GraspRecord>& candidates, const WrenchTestConfig& cfg);

/// Hand surface samples at a grasp, in the object frame.
PointCloud hand_cloud_for(const HandSpec& spec, const HandPose& pose, const Rotation3& rotation, Index count,
                          std::uint64_t seed);

/// Samples and filters candidates for every configured hand on every dataset
/// object, then aggregates.
EvalReport evaluate_model(const PipelineConfig& cfg, const Checkpoint& ckpt, const Dataset& dataset,
                          const std::vector<HandSpec>& roster, std::uint64_t seed, const std::string& label,
                          std::ostream& log);

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<GraspRecord> candidates;
  std::vector<PhysicsVerdict> verdicts;
  int selected = -1;  // candidate index
  double score = 0.0;
  EvalReport report;
};

/// Sample, filter, segment, select. Writes report.json, verdicts.jsonl and
/// PLY exports into `out_dir`.
RunResult run_pipeline(const PipelineConfig& cfg, const Checkpoint& ckpt, const std::vector<HandSpec>& roster,
                       const TriangleMesh& object_mesh, const std::string& object_id, const std::string& hand,
                       const std::string& affordance, std::uint64_t seed, const std::filesystem::path& out_dir,
                       std::ostream& log);

}  // namespace dgd
