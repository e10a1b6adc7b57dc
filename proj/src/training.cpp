#include "dgd/training.hpp"

#include "dgd/seed.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dgd {

Adam::Adam(const DenoiserParams& params, AdamConfig cfg) : cfg_(cfg) {
  if (!(cfg.lr > 0) || !(cfg.eps > 0) || cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1) {
    throw std::invalid_argument("bad Adam settings");
  }
  for (const auto& p : params.params) {
    m_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(ad::Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void Adam::apply(DenoiserParams& params, const std::vector<ad::Matrix>& grads) {
  if (grads.size() != params.params.size() || m_.size() != grads.size()) {
    throw std::invalid_argument("gradient count does not match parameters");
  }
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i].cwiseAbs2();
    params.params[i].value.array() -=
        cfg_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
  }
}

TrainingExample make_training_example(const HandSpec& spec, const GraspRecord& record, const PointCloud& object_cloud,
                                      const DenoiserConfig& cfg, std::uint64_t seed) {
  if (record.hand_class != spec.class_id) throw std::invalid_argument("record hand class does not match spec");
  require_padding(spec, record.pose);
  TrainingExample ex;
  ex.spec = &spec;
  ex.hand_class = record.hand_class;
  ex.mask = make_padding_mask(spec);
  ex.h0 = to_network_space(canonicalize(record.pose, record.rotation).to_vector());
  PointCloud obj = object_cloud.size() == cfg.object_points
                       ? object_cloud
                       : farthest_point_sample(object_cloud, cfg.object_points, mix_seed(seed, 0));
  ex.object_cloud = canonicalize(obj, record.rotation);
  ex.hand_samples = sample_link_surfaces(spec, cfg.hand_points, mix_seed(seed, 1));
  return ex;
}

PointCloud hand_cloud_at(const HandSpec& spec, const LinkSurfaceSamples& samples, const PoseVector& h_net) {
  const HandPose pose = HandPose::from_vector(from_network_space(h_net));
  return pose_samples(spec, samples, forward_kinematics(spec, pose));
}

std::vector<NoisedSample> draw_noise(const std::vector<const TrainingExample*>& batch, const NoiseSchedule& schedule,
                                     std::mt19937_64& rng) {
  std::uniform_int_distribution<int> step(1, schedule.steps);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<NoisedSample> out;
  out.reserve(batch.size());
  for (const TrainingExample* ex : batch) {
    NoisedSample s;
    s.example = ex;
    s.t = step(rng);
    for (int i = 0; i < kPoseDim; ++i) s.noise(i) = normal(rng);
    s.noise = s.noise.cwiseProduct(ex->mask.mask);
    out.push_back(s);
  }
  return out;
}

ad::Var build_loss(DenoiserGraph& graph, const std::vector<NoisedSample>& batch, const NoiseSchedule& schedule,
                   bool normalize) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  ad::Tape& tape = graph.tape();
  // Examples sharing an object cloud share its encoding.
  std::map<const PointCloud*, std::pair<ad::Var, AttentionMemory>> objects;
  std::vector<ad::Var> terms;
  for (const auto& s : batch) {
    const TrainingExample& ex = *s.example;
    const PoseVector h_t = forward_noise(schedule, ex.h0, s.t, s.noise);
    auto it = objects.find(&ex.object_cloud);
    if (it == objects.end()) {
      GraphCloud enc = graph.encode_object(ex.object_cloud);
      it = objects.emplace(&ex.object_cloud, std::make_pair(enc.global, graph.memory(enc.features, "ao"))).first;
    }
    GraphCondition cond;
    cond.alpha_bar = schedule.alpha_bar(s.t);
    cond.time = graph.time(s.t);
    cond.mask = graph.mask(ex.mask);
    cond.hand_class = graph.hand_class(ex.hand_class);
    cond.object_global = it->second.first;
    cond.object = it->second.second;
    GraphCloud hand = graph.encode_hand(hand_cloud_at(*ex.spec, ex.hand_samples, h_t));
    cond.hand_global = hand.global;
    cond.hand = graph.memory(hand.features, "ah");

    ad::Matrix row = h_t.transpose();
    ad::Var pred = graph.predict(tape.constant(std::move(row)), cond);
    terms.push_back(ad::masked_l1(tape, pred, s.noise.transpose(), ex.mask.mask.transpose(), normalize));
  }
  return ad::scale(tape, ad::sum_scalars(tape, terms), 1.0 / static_cast<double>(batch.size()));
}

LossAndGrad loss_and_grad(const DenoiserParams& params, const std::vector<NoisedSample>& batch,
                          const NoiseSchedule& schedule, bool normalize) {
  ad::Tape tape(true);
  DenoiserGraph graph(tape, params);
  ad::Var loss = build_loss(graph, batch, schedule, normalize);
  LossAndGrad out;
  out.loss = tape.value(loss)(0, 0);
  if (!std::isfinite(out.loss)) {
    std::ostringstream msg;
    msg << "non-finite loss " << out.loss << " over " << batch.size() << " examples (t, class):";
    for (const auto& s : batch) msg << " (" << s.t << ", " << s.example->hand_class << ")";
    throw std::runtime_error(msg.str());
  }
  tape.backward(loss);
  for (ad::Var v : graph.parameter_vars()) out.grads.push_back(tape.grad(v));
  for (std::size_t i = 0; i < out.grads.size(); ++i) {
    if (!out.grads[i].allFinite()) {
      throw std::runtime_error("non-finite gradient for " + params.params[i].name + " at loss " +
                               std::to_string(out.loss));
    }
  }
  return out;
}

double train_step(DenoiserParams& params, const std::vector<const TrainingExample*>& batch, Adam& optimizer,
                  const NoiseSchedule& schedule, std::mt19937_64& rng, bool normalize) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto noised = draw_noise(batch, schedule, rng);
  LossAndGrad lg = loss_and_grad(params, noised, schedule, normalize);
  optimizer.apply(params, lg.grads);
  return lg.loss;
}

std::vector<double> train(DenoiserParams& params, const std::vector<TrainingExample>& examples,
                          const NoiseSchedule& schedule, const TrainConfig& cfg,
                          const std::function<void(int, double)>& on_step) {
  if (examples.empty()) throw std::invalid_argument("no training examples");
  if (cfg.batch_size < 1 || cfg.steps < 0) throw std::invalid_argument("bad training schedule");
  Adam adam(params, cfg.adam);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, examples.size() - 1);
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<const TrainingExample*> batch;
    for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(&examples[pick(rng)]);
    if (cfg.cosine_decay) {
      adam.set_lr(0.5 * cfg.adam.lr * (1.0 + std::cos(M_PI * step / static_cast<double>(cfg.steps))));
    }
    const double loss = train_step(params, batch, adam, schedule, rng, cfg.normalize_loss);
    curve.push_back(loss);
    if (on_step) on_step(step, loss);
  }
  return curve;
}

}  // namespace dgd
