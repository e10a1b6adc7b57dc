#include "dgd/denoiser.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dgd {

namespace {

constexpr int kHandChannels = 4;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

void DenoiserConfig::validate() const {
  if (width < 2 || width % 2 != 0) throw std::invalid_argument("denoiser width must be even and >= 2");
  if (fusion_layers < 0) throw std::invalid_argument("fusion_layers must be >= 0");
  if (object_points < 1 || hand_points < 1) throw std::invalid_argument("cloud sizes must be positive");
}

std::vector<LayerInfo> denoiser_layout(const DenoiserConfig& cfg) {
  cfg.validate();
  const Index w = cfg.width;
  std::vector<LayerInfo> out = {
      {"t_w1", w, w},          {"t_b1", 1, w},    {"t_w2", w, w},         {"t_b2", 1, w},
      {"class_table", kNumHandClasses, w},        {"class_w", w, w},      {"class_b", 1, w},
      {"mask_w", kPoseDim, w}, {"mask_b", 1, w},  {"pose_w", kPoseDim, w}, {"pose_b", 1, w},
      {"obj_w1", 3, w},        {"obj_b1", 1, w},  {"obj_w2", w, w},       {"obj_b2", 1, w},
      {"hand_w1", kHandChannels, w},              {"hand_b1", 1, w},      {"hand_w2", w, w},
      {"hand_b2", 1, w},       {"obj_global_w", w, w},                    {"hand_global_w", w, w},
  };
  for (const char* block : {"ao", "ah"}) {
    for (const char* m : {"_q", "_k", "_v", "_o"}) out.push_back({std::string(block) + m, w, w});
  }
  for (int l = 0; l < cfg.fusion_layers; ++l) {
    const std::string p = "f" + std::to_string(l);
    out.push_back({p + "_w1", w, w});
    out.push_back({p + "_b1", 1, w});
    out.push_back({p + "_w2", w, w});
    out.push_back({p + "_b2", 1, w});
  }
  out.push_back({"head_w", w, kPoseDim});
  out.push_back({"head_b", 1, kPoseDim});
  out.push_back({"head_skip", 1, kPoseDim});
  return out;
}

DenoiserParams DenoiserParams::initialize(const DenoiserConfig& cfg, std::uint64_t seed) {
  DenoiserParams p;
  p.config = cfg;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& layer : denoiser_layout(cfg)) {
    ad::Param param{layer.name, ad::Matrix::Zero(layer.rows, layer.cols)};
    const bool bias = layer.rows == 1 && layer.name.find("_b") != std::string::npos;
    const bool head = layer.name.rfind("head", 0) == 0;
    if (layer.name == "head_skip") {
      if (!cfg.zero_init_head) param.value.setOnes();
    } else if (!bias && !(head && cfg.zero_init_head)) {
      const double stdev = layer.name == "class_table" ? 1.0 : 1.0 / std::sqrt(static_cast<double>(layer.rows));
      for (Index i = 0; i < param.value.size(); ++i) param.value.data()[i] = stdev * normal(rng);
    }
    p.params.push_back(std::move(param));
  }
  return p;
}

int DenoiserParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == name) return static_cast<int>(i);
  }
  throw std::out_of_range("unknown parameter: " + std::string(name));
}

const ad::Param& DenoiserParams::at(std::string_view name) const { return params[index_of(name)]; }
ad::Param& DenoiserParams::at(std::string_view name) { return params[index_of(name)]; }

Index DenoiserParams::parameter_count() const {
  Index n = 0;
  for (const auto& p : params) n += p.value.size();
  return n;
}

std::vector<LayerInfo> DenoiserParams::layer_table() const {
  std::vector<LayerInfo> out;
  for (const auto& p : params) out.push_back({p.name, p.value.rows(), p.value.cols()});
  return out;
}

void DenoiserParams::validate() const {
  const auto layout = denoiser_layout(config);
  if (layout.size() != params.size()) throw std::invalid_argument("parameter count does not match config");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& p = params[i];
    if (p.name != layout[i].name || p.value.rows() != layout[i].rows || p.value.cols() != layout[i].cols) {
      throw std::invalid_argument("parameter shape mismatch: " + layout[i].name);
    }
    if (!all_finite(p.value)) throw std::invalid_argument("non-finite parameter: " + p.name);
  }
}

void ConditioningBundle::validate(int width) const {
  auto check_row = [width](const Eigen::RowVectorXd& v, const char* what) {
    if (v.size() != width) throw std::invalid_argument(std::string(what) + " embedding has wrong width");
    if (!v.allFinite()) throw std::invalid_argument(std::string(what) + " embedding is not finite");
  };
  check_row(time, "time");
  check_row(mask, "mask");
  check_row(hand_class, "class");
  check_row(object.global, "object");
  check_row(hand.global, "hand");
  if (!(alpha_bar > 0 && alpha_bar < 1)) throw std::invalid_argument("alpha_bar must lie in (0, 1)");
  if (object.features.cols() != width || object.features.rows() < 1 || !object.features.allFinite()) {
    throw std::invalid_argument("bad object features");
  }
  if (hand.features.cols() != width || hand.features.rows() < 1 || !hand.features.allFinite()) {
    throw std::invalid_argument("bad hand features");
  }
}

// ---------------------------------------------------------------------------

DenoiserGraph::DenoiserGraph(ad::Tape& tape, const DenoiserParams& params) : tape_(tape), params_(params) {
  params_.config.validate();
  vars_.reserve(params.params.size());
  for (const auto& p : params.params) vars_.push_back(tape_.parameter(p.value));
}

ad::Var DenoiserGraph::param(std::string_view name) const { return vars_[params_.index_of(name)]; }

ad::Var DenoiserGraph::linear(ad::Var x, std::string_view w, std::string_view b) {
  return ad::add_row(tape_, ad::matmul(tape_, x, param(w)), param(b));
}

ad::Var DenoiserGraph::time(int t) {
  const int w = config().width;
  const int half = w / 2;
  ad::Matrix feat(1, w);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    feat(0, i) = std::sin(t * freq);
    feat(0, half + i) = std::cos(t * freq);
  }
  ad::Var h = ad::silu(tape_, linear(tape_.constant(std::move(feat)), "t_w1", "t_b1"));
  return linear(h, "t_w2", "t_b2");
}

ad::Var DenoiserGraph::hand_class(int c) {
  if (c < 0 || c >= kNumHandClasses) throw std::out_of_range("hand class out of range");
  return linear(ad::pick_row(tape_, param("class_table"), c), "class_w", "class_b");
}

ad::Var DenoiserGraph::mask(const PaddingMask& m) {
  ad::Matrix row = m.mask.transpose();
  return linear(tape_.constant(std::move(row)), "mask_w", "mask_b");
}

GraphCloud DenoiserGraph::encode(const Eigen::MatrixXd& input, std::string_view prefix) {
  const std::string p(prefix);
  ad::Var x = tape_.constant(input);
  ad::Var h = ad::silu(tape_, linear(x, p + "_w1", p + "_b1"));
  ad::Var f = linear(h, p + "_w2", p + "_b2");
  return {ad::max_rows(tape_, f), f};
}

GraphCloud DenoiserGraph::encode_object(const PointCloud& cloud) {
  if (cloud.size() != config().object_points) {
    throw std::invalid_argument("object cloud has " + std::to_string(cloud.size()) + " points, expected " +
                                std::to_string(config().object_points));
  }
  return encode(cloud.points, "obj");
}

GraphCloud DenoiserGraph::encode_hand(const PointCloud& cloud) {
  if (cloud.size() != config().hand_points) {
    throw std::invalid_argument("hand cloud has " + std::to_string(cloud.size()) + " points, expected " +
                                std::to_string(config().hand_points));
  }
  Eigen::MatrixXd input = Eigen::MatrixXd::Zero(cloud.size(), kHandChannels);
  input.leftCols(3) = cloud.points;
  if (config().use_finger_labels && cloud.has_labels()) {
    input.col(3) = cloud.labels->cast<double>() / static_cast<double>(kMaxFingerLabel);
  }
  return encode(input, "hand");
}

AttentionMemory DenoiserGraph::memory(ad::Var features, std::string_view block) {
  const std::string b(block);
  return {ad::matmul(tape_, features, param(b + "_k")), ad::matmul(tape_, features, param(b + "_v"))};
}

GraphCondition DenoiserGraph::condition(const NoiseSchedule& schedule, int t, const PaddingMask& m, int c, const PointCloud& object_cloud,
                                        const PointCloud& hand_cloud) {
  GraphCondition cond;
  cond.alpha_bar = schedule.alpha_bar(t);
  cond.time = time(t);
  cond.mask = mask(m);
  cond.hand_class = hand_class(c);
  GraphCloud obj = encode_object(object_cloud);
  GraphCloud hand = encode_hand(hand_cloud);
  cond.object_global = obj.global;
  cond.hand_global = hand.global;
  cond.object = memory(obj.features, "ao");
  cond.hand = memory(hand.features, "ah");
  return cond;
}

GraphCondition DenoiserGraph::condition(const ConditioningBundle& c) {
  c.validate(config().width);
  GraphCondition cond;
  cond.time = tape_.constant(c.time);
  cond.mask = tape_.constant(c.mask);
  cond.hand_class = tape_.constant(c.hand_class);
  cond.object_global = tape_.constant(c.object.global);
  cond.hand_global = tape_.constant(c.hand.global);
  cond.object = memory(tape_.constant(c.object.features), "ao");
  cond.hand = memory(tape_.constant(c.hand.features), "ah");
  cond.alpha_bar = c.alpha_bar;
  return cond;
}

ad::Var DenoiserGraph::attend(ad::Var x, const AttentionMemory& mem, std::string_view block) {
  const std::string b(block);
  ad::Var q = ad::matmul(tape_, x, param(b + "_q"));
  ad::Var logits = ad::scale(tape_, ad::matmul_bt(tape_, q, mem.keys), 1.0 / std::sqrt(config().width));
  ad::Var attn = ad::softmax_rows(tape_, logits);
  ad::Var ctx = ad::matmul(tape_, attn, mem.values);
  return ad::add(tape_, x, ad::matmul(tape_, ctx, param(b + "_o")));
}

ad::Var DenoiserGraph::predict(ad::Var h_t, const GraphCondition& cond) {
  const auto& v = tape_.value(h_t);
  if (v.rows() != 1 || v.cols() != kPoseDim) throw std::invalid_argument("h_t must be a 1 x 27 row");
  if (!(cond.alpha_bar > 0 && cond.alpha_bar < 1)) throw std::invalid_argument("alpha_bar must lie in (0, 1)");
  const auto& cfg = config();

  ad::Var x = linear(h_t, "pose_w", "pose_b");
  x = ad::add(tape_, x, cond.mask);
  x = ad::add(tape_, x, cond.time);
  if (cfg.use_class) x = ad::add(tape_, x, cond.hand_class);
  x = ad::add(tape_, x, ad::matmul(tape_, cond.object_global, param("obj_global_w")));
  if (cfg.use_hand_cloud) x = ad::add(tape_, x, ad::matmul(tape_, cond.hand_global, param("hand_global_w")));

  x = attend(x, cond.object, "ao");
  if (cfg.use_hand_cloud) x = attend(x, cond.hand, "ah");

  for (int l = 0; l < cfg.fusion_layers; ++l) {
    const std::string p = "f" + std::to_string(l);
    ad::Var h = ad::add(tape_, linear(x, p + "_w1", p + "_b1"), cond.time);
    x = ad::add(tape_, x, linear(ad::silu(tape_, h), p + "_w2", p + "_b2"));
  }
  ad::Var x0 = linear(x, "head_w", "head_b");
  ad::Var skip = ad::mul(tape_, h_t, param("head_skip"));
  ad::Var eps = ad::sub(tape_, skip, ad::scale(tape_, x0, std::sqrt(cond.alpha_bar)));
  return ad::scale(tape_, eps, 1.0 / std::sqrt(1.0 - cond.alpha_bar));
}

// ---------------------------------------------------------------------------

namespace {

Eigen::RowVectorXd row_of(const ad::Tape& tape, ad::Var v) { return tape.value(v).row(0); }

CloudEncoding to_encoding(const ad::Tape& tape, const GraphCloud& g) {
  return {row_of(tape, g.global), tape.value(g.features)};
}

}  // namespace

Eigen::RowVectorXd embed_time(const DenoiserParams& params, int t) {
  ad::Tape tape(false);
  DenoiserGraph g(tape, params);
  return row_of(tape, g.time(t));
}

Eigen::RowVectorXd embed_class(const DenoiserParams& params, int hand_class) {
  ad::Tape tape(false);
  DenoiserGraph g(tape, params);
  return row_of(tape, g.hand_class(hand_class));
}

Eigen::RowVectorXd embed_mask(const DenoiserParams& params, const PaddingMask& mask) {
  ad::Tape tape(false);
  DenoiserGraph g(tape, params);
  return row_of(tape, g.mask(mask));
}

CloudEncoding encode_object_cloud(const DenoiserParams& params, const PointCloud& cloud) {
  ad::Tape tape(false);
  DenoiserGraph g(tape, params);
  return to_encoding(tape, g.encode_object(cloud));
}

CloudEncoding encode_hand_cloud(const DenoiserParams& params, const PointCloud& cloud) {
  ad::Tape tape(false);
  DenoiserGraph g(tape, params);
  return to_encoding(tape, g.encode_hand(cloud));
}

ConditioningBundle make_conditioning(const DenoiserParams& params, const NoiseSchedule& schedule, int t, const PaddingMask& mask, int hand_class,
                                     const PointCloud& object_cloud, const PointCloud& hand_cloud) {
  ad::Tape tape(false);
  DenoiserGraph g(tape, params);
  ConditioningBundle c;
  c.alpha_bar = schedule.alpha_bar(t);
  c.time = row_of(tape, g.time(t));
  c.mask = row_of(tape, g.mask(mask));
  c.hand_class = row_of(tape, g.hand_class(hand_class));
  c.object = to_encoding(tape, g.encode_object(object_cloud));
  c.hand = to_encoding(tape, g.encode_hand(hand_cloud));
  return c;
}

PoseVector predict_noise(const DenoiserParams& params, const PoseVector& h_t, const ConditioningBundle& cond) {
  if (!h_t.allFinite()) throw std::invalid_argument("h_t is not finite");
  ad::Tape tape(false);
  DenoiserGraph g(tape, params);
  GraphCondition gc = g.condition(cond);
  ad::Matrix row = h_t.transpose();
  ad::Var out = g.predict(tape.constant(std::move(row)), gc);
  return tape.value(out).row(0).transpose();
}

}  // namespace dgd
