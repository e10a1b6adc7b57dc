#pragma once

#include "dgd/denoiser.hpp"
#include "dgd/diffusion.hpp"

#include <filesystem>

namespace dgd {

inline constexpr const char* kCheckpointSchema = "dgd_checkpoint_v1";

struct Checkpoint {
  DenoiserParams params;
  NoiseSchedule schedule;
};

/// Writes manifest.json plus one DGD1 array per parameter into `dir`.
/// Values round-trip through float32.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace dgd
