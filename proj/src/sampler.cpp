#include "dgd/sampler.hpp"

#include "dgd/seed.hpp"
#include "dgd/training.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dgd {

GraspRecord reverse_sample(const DenoiserParams& params, const NoiseSchedule& schedule, const HandSpec& spec,
                           const PointCloud& object_cloud, const Rotation3& rotation, std::uint64_t seed,
                           const std::string& object_id) {
  const PaddingMask mask = make_padding_mask(spec);
  const PointCloud canonical = canonicalize(object_cloud, rotation);

  // Object keys and values are fixed for the whole chain.
  Eigen::MatrixXd obj_global, obj_keys, obj_values;
  {
    ad::Tape tape(false);
    DenoiserGraph g(tape, params);
    GraphCloud enc = g.encode_object(canonical);
    AttentionMemory mem = g.memory(enc.features, "ao");
    obj_global = tape.value(enc.global);
    obj_keys = tape.value(mem.keys);
    obj_values = tape.value(mem.values);
  }
  const LinkSurfaceSamples samples = sample_link_surfaces(spec, params.config.hand_points, mix_seed(seed, 1));

  std::mt19937_64 rng(mix_seed(seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&] {
    PoseVector z;
    for (int i = 0; i < kPoseDim; ++i) z(i) = normal(rng);
    return z;
  };

  PoseVector h = gaussian().cwiseProduct(mask.mask);
  for (int t = schedule.steps; t >= 1; --t) {
    ad::Tape tape(false);
    DenoiserGraph g(tape, params);
    GraphCondition cond;
    cond.alpha_bar = schedule.alpha_bar(t);
    cond.time = g.time(t);
    cond.mask = g.mask(mask);
    cond.hand_class = g.hand_class(spec.class_id);
    cond.object_global = tape.constant(obj_global);
    cond.object = {tape.constant(obj_keys), tape.constant(obj_values)};
    GraphCloud hand = g.encode_hand(hand_cloud_at(spec, samples, h));
    cond.hand_global = hand.global;
    cond.hand = g.memory(hand.features, "ah");
    ad::Matrix row = h.transpose();
    const PoseVector eps = tape.value(g.predict(tape.constant(std::move(row)), cond)).row(0).transpose();

    const double beta = schedule.beta(t);
    const double alpha = schedule.alpha(t);
    const double abar = schedule.alpha_bar(t);
    PoseVector next = (h - beta / std::sqrt(1.0 - abar) * eps) / std::sqrt(alpha);
    if (t > 1) next += std::sqrt(beta) * gaussian();
    h = next.cwiseProduct(mask.mask);
    if (!h.allFinite()) throw std::runtime_error("non-finite sampler state at step " + std::to_string(t));
  }

  HandPose pose = clamp_to_limits(spec, HandPose::from_vector(from_network_space(h)));
  GraspRecord rec;
  rec.hand_class = spec.class_id;
  rec.pose = decanonicalize(pose, rotation);
  rec.rotation = rotation;
  rec.object_id = object_id;
  return rec;
}

}  // namespace dgd
