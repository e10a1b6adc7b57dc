#pragma once

#include "dgd/hand_model.hpp"

#include <vector>

namespace dgd {

/// Mesh file every built-in link references: a unit cube (half extent 0.5).
inline constexpr const char* kUnitBoxMesh = "unit_box.off";

/// Box-link approximations of the five hands, class ids 0..4:
/// ezgripper (2 dof), barrett (8), robotiq_3f (11), allegro (16),
/// shadowhand (24). Only the ShadowHand dof is a known value; the others
/// are placeholders sized for the synthetic objects.
std::vector<HandSpec> builtin_roster();

/// Open-hand pose: fingers splayed at their lower flexion limit.
HandPose open_pose(const HandSpec& spec);

}  // namespace dgd
