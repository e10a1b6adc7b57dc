#include "dgd/diffusion.hpp"

namespace dgd {

NoiseSchedule make_schedule(const Eigen::VectorXd& betas) {
  if (betas.size() < 1) throw std::invalid_argument("schedule needs at least one step");
  NoiseSchedule s;
  s.steps = static_cast<int>(betas.size());
  s.beta_start = betas(0);
  s.beta_end = betas(betas.size() - 1);
  s.betas = betas;
  s.alphas = (1.0 - betas.array()).matrix();
  s.alpha_bars.resize(betas.size());
  double prod = 1.0;
  for (Eigen::Index i = 0; i < betas.size(); ++i) {
    if (!(betas(i) > 0.0 && betas(i) < 1.0)) throw std::invalid_argument("beta outside (0, 1)");
    if (i > 0 && betas(i) < betas(i - 1)) throw std::invalid_argument("betas must be non-decreasing");
    prod *= s.alphas(i);
    s.alpha_bars(i) = prod;
  }
  return s;
}

NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("steps must be positive");
  Eigen::VectorXd betas(steps);
  if (steps == 1) {
    betas(0) = beta_start;
  } else {
    betas = Eigen::VectorXd::LinSpaced(steps, beta_start, beta_end);
  }
  NoiseSchedule s = make_schedule(betas);
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  return s;
}

}  // namespace dgd
