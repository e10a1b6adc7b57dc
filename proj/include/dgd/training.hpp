#pragma once

#include "dgd/denoiser.hpp"
#include "dgd/diffusion.hpp"

#include <functional>
#include <random>
#include <vector>

namespace dgd {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const DenoiserParams& params, AdamConfig cfg = {});
  void apply(DenoiserParams& params, const std::vector<ad::Matrix>& grads);
  long steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  long step_ = 0;
  std::vector<ad::Matrix> m_;
  std::vector<ad::Matrix> v_;
};

/// One grasp prepared for training: canonical frame, network space.
struct TrainingExample {
  const HandSpec* spec = nullptr;
  int hand_class = 0;
  PoseVector h0 = PoseVector::Zero();
  PaddingMask mask;
  PointCloud object_cloud;          // canonical, exactly cfg.object_points
  LinkSurfaceSamples hand_samples;  // cfg.hand_points link-frame samples
};

/// Canonicalizes `record` with its rotation and downsamples the object cloud
/// (object frame) by farthest-point sampling.
TrainingExample make_training_example(const HandSpec& spec, const GraspRecord& record, const PointCloud& object_cloud,
                                      const DenoiserConfig& cfg, std::uint64_t seed);

/// Hand cloud re-posed at a network-space pose.
PointCloud hand_cloud_at(const HandSpec& spec, const LinkSurfaceSamples& samples, const PoseVector& h_net);

/// Diffusion step and noise for one example in a batch. Noise is zero on
/// padded dims.
struct NoisedSample {
  const TrainingExample* example = nullptr;
  int t = 1;
  PoseVector noise = PoseVector::Zero();
};

/// Mean over the batch of masked L1 between predicted and true noise.
ad::Var build_loss(DenoiserGraph& graph, const std::vector<NoisedSample>& batch, const NoiseSchedule& schedule,
                   bool normalize);

std::vector<NoisedSample> draw_noise(const std::vector<const TrainingExample*>& batch, const NoiseSchedule& schedule,
                                     std::mt19937_64& rng);

/// Loss and per-parameter gradients, no update.
struct LossAndGrad {
  double loss = 0.0;
  std::vector<ad::Matrix> grads;
};
LossAndGrad loss_and_grad(const DenoiserParams& params, const std::vector<NoisedSample>& batch,
                          const NoiseSchedule& schedule, bool normalize);

/// Draws t and noise, backpropagates and applies one Adam update. Returns the
/// pre-update loss. Throws std::runtime_error on a non-finite loss.
double train_step(DenoiserParams& params, const std::vector<const TrainingExample*>& batch, Adam& optimizer,
                  const NoiseSchedule& schedule, std::mt19937_64& rng, bool normalize = true);

struct TrainConfig {
  int steps = 1000;
  int batch_size = 64;
  AdamConfig adam;
  bool normalize_loss = true;
  bool cosine_decay = false;  // anneal lr to zero over `steps`
  std::uint64_t seed = 0;
};

/// Batches drawn uniformly with replacement. `on_step(step, loss)` is called
/// after each update when set. Returns the loss curve.
std::vector<double> train(DenoiserParams& params, const std::vector<TrainingExample>& examples,
                          const NoiseSchedule& schedule, const TrainConfig& cfg,
                          const std::function<void(int, double)>& on_step = {});

}  // namespace dgd
