#pragma once

#include "dgd/autodiff.hpp"
#include "dgd/diffusion.hpp"
#include "dgd/geometry.hpp"
#include "dgd/hand_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dgd {

struct DenoiserConfig {
  int width = 128;
  int fusion_layers = 4;
  Index object_points = 1024;
  Index hand_points = 256;
  // Ablation switches.
  bool use_class = true;
  bool use_hand_cloud = true;
  bool use_finger_labels = true;
  bool zero_init_head = false;

  void validate() const;
};

struct LayerInfo {
  std::string name;
  Index rows = 0;
  Index cols = 0;
};

/// Parameter names and shapes implied by a config, in storage order.
std::vector<LayerInfo> denoiser_layout(const DenoiserConfig& cfg);

struct DenoiserParams {
  DenoiserConfig config;
  std::vector<ad::Param> params;

  /// Gaussian fan-in init, zero biases.
  static DenoiserParams initialize(const DenoiserConfig& cfg, std::uint64_t seed);

  int index_of(std::string_view name) const;
  const ad::Param& at(std::string_view name) const;
  ad::Param& at(std::string_view name);
  Index parameter_count() const;
  std::vector<LayerInfo> layer_table() const;
  /// Shapes match the layout and every entry is finite.
  void validate() const;
};

struct CloudEncoding {
  Eigen::RowVectorXd global;
  Eigen::MatrixXd features;  // one row per point
};

struct ConditioningBundle {
  Eigen::RowVectorXd time;
  Eigen::RowVectorXd mask;
  Eigen::RowVectorXd hand_class;
  CloudEncoding object;
  CloudEncoding hand;
  double alpha_bar = -1.0;  // of the step being denoised

  void validate(int width) const;
};

Eigen::RowVectorXd embed_time(const DenoiserParams& params, int t);
Eigen::RowVectorXd embed_class(const DenoiserParams& params, int hand_class);
Eigen::RowVectorXd embed_mask(const DenoiserParams& params, const PaddingMask& mask);
CloudEncoding encode_object_cloud(const DenoiserParams& params, const PointCloud& cloud);
/// Labels ride along as a fourth input channel.
CloudEncoding encode_hand_cloud(const DenoiserParams& params, const PointCloud& cloud);

ConditioningBundle make_conditioning(const DenoiserParams& params, const NoiseSchedule& schedule, int t, const PaddingMask& mask, int hand_class,
                                     const PointCloud& object_cloud, const PointCloud& hand_cloud);

/// eps_hat for a network-space pose h_t. The head emits a clean-pose estimate
/// x0 and a per-dim gain s; eps_hat = (s * h_t - sqrt(abar) x0) / sqrt(1 - abar).
PoseVector predict_noise(const DenoiserParams& params, const PoseVector& h_t, const ConditioningBundle& cond);

// Graph-level building blocks shared by training, sampling and the gradient tests.

struct GraphCloud {
  ad::Var global;
  ad::Var features;
};

/// Keys and values of one cross-attention block over a set of point features.
struct AttentionMemory {
  ad::Var keys;
  ad::Var values;
};

struct GraphCondition {
  ad::Var time;
  ad::Var mask;
  ad::Var hand_class;
  ad::Var object_global;
  ad::Var hand_global;
  AttentionMemory object;
  AttentionMemory hand;
  double alpha_bar = -1.0;
};

class DenoiserGraph {
 public:
  DenoiserGraph(ad::Tape& tape, const DenoiserParams& params);

  ad::Tape& tape() { return tape_; }
  const DenoiserConfig& config() const { return params_.config; }
  /// Tape leaf for each parameter, in storage order.
  const std::vector<ad::Var>& parameter_vars() const { return vars_; }
  ad::Var param(std::string_view name) const;

  ad::Var time(int t);
  ad::Var hand_class(int c);
  ad::Var mask(const PaddingMask& mask);
  GraphCloud encode_object(const PointCloud& cloud);
  GraphCloud encode_hand(const PointCloud& cloud);
  /// block is "ao" (object) or "ah" (hand).
  AttentionMemory memory(ad::Var features, std::string_view block);

  GraphCondition condition(const NoiseSchedule& schedule, int t, const PaddingMask& mask, int hand_class, const PointCloud& object_cloud,
                           const PointCloud& hand_cloud);
  /// Wraps precomputed embeddings as constants.
  GraphCondition condition(const ConditioningBundle& cond);

  /// h_t is a 1 x 27 row.
  ad::Var predict(ad::Var h_t, const GraphCondition& cond);

 private:
  ad::Var linear(ad::Var x, std::string_view w, std::string_view b);
  ad::Var attend(ad::Var x, const AttentionMemory& mem, std::string_view block);
  GraphCloud encode(const Eigen::MatrixXd& input, std::string_view prefix);

  ad::Tape& tape_;
  const DenoiserParams& params_;
  std::vector<ad::Var> vars_;
};

}  // namespace dgd
