#pragma once

#include "dgd/denoiser.hpp"
#include "dgd/diffusion.hpp"

#include <cstdint>
#include <string>

namespace dgd {

/// DDPM ancestral sampling with sigma_t^2 = beta_t. `object_cloud` is in the
/// object frame with exactly cfg.object_points points; it is counter-rotated
/// by R^-1 before conditioning and the result is rotated back by R.
GraspRecord reverse_sample(const DenoiserParams& params, const NoiseSchedule& schedule, const HandSpec& spec,
                           const PointCloud& object_cloud, const Rotation3& rotation, std::uint64_t seed,
                           const std::string& object_id = "");

}  // namespace dgd
