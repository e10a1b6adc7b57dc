#pragma once

#include "dgd/hand_model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgd {

/// A grasp in the object frame: the hand sits at `rotation` with the pose's
/// translation and joints.
struct GraspRecord {
  int hand_class = 0;
  HandPose pose;
  Rotation3 rotation;
  std::string object_id;
};

/// Variance schedule for steps t = 1..T, stored zero-based (index t - 1).
struct NoiseSchedule {
  int steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  Eigen::VectorXd betas;
  Eigen::VectorXd alphas;
  Eigen::VectorXd alpha_bars;

  double beta(int t) const { return betas(t - 1); }
  double alpha(int t) const { return alphas(t - 1); }
  double alpha_bar(int t) const { return alpha_bars(t - 1); }

  void require_step(int t) const {
    if (t < 1 || t > steps) throw std::out_of_range("diffusion step out of range");
  }
};

/// Linear betas from `beta_start` to `beta_end` over `steps`.
NoiseSchedule make_linear_schedule(int steps, double beta_start = 1e-4, double beta_end = 2e-2);

/// Schedule from explicit betas (used for edge-case tests).
NoiseSchedule make_schedule(const Eigen::VectorXd& betas);

/// Closed-form q(h_t | h_0): sqrt(abar_t) h0 + sqrt(1 - abar_t) noise.
template <typename D1, typename D2>
typename D1::PlainObject forward_noise(const NoiseSchedule& schedule, const Eigen::MatrixBase<D1>& h0, int t,
                                       const Eigen::MatrixBase<D2>& noise) {
  schedule.require_step(t);
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * h0 + std::sqrt(1.0 - ab) * noise;
}

/// One Markov step q(h_t | h_{t-1}).
template <typename D1, typename D2>
typename D1::PlainObject forward_step(const NoiseSchedule& schedule, const Eigen::MatrixBase<D1>& prev, int t,
                                      const Eigen::MatrixBase<D2>& noise) {
  schedule.require_step(t);
  return std::sqrt(schedule.alpha(t)) * prev + std::sqrt(schedule.beta(t)) * noise;
}

/// sum_i M_i |eps_hat_i - eps_i|, divided by sum(M) when `normalize`.
template <typename D1, typename D2, typename D3>
double masked_l1_loss(const Eigen::MatrixBase<D1>& mask, const Eigen::MatrixBase<D2>& eps_hat,
                      const Eigen::MatrixBase<D3>& eps, bool normalize = true) {
  const double total = mask.sum();
  if (!(total > 0)) throw std::invalid_argument("masked_l1_loss: all-zero mask");
  const double err = mask.cwiseProduct((eps_hat - eps).cwiseAbs()).sum();
  return normalize ? err / total : err;
}

inline double masked_l1_loss(const PaddingMask& mask, const PoseVector& eps_hat, const PoseVector& eps,
                             bool normalize = true) {
  return masked_l1_loss(mask.mask, eps_hat, eps, normalize);
}

}  // namespace dgd
