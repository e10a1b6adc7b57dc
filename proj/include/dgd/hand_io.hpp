#pragma once

#include "dgd/hand_model.hpp"

#include <filesystem>
#include <vector>

namespace dgd {

inline constexpr const char* kHandSpecSchema = "hand_spec_v1";
inline constexpr const char* kHandRosterSchema = "hand_roster_v1";

/// Loads a "hand_spec_v1" JSON document; mesh paths resolve relative to the
/// spec file. The returned spec is finalized.
HandSpec load_hand_spec(const std::filesystem::path& path);
void save_hand_spec(const HandSpec& spec, const std::filesystem::path& path);

/// Roster file: {"schema": "hand_roster_v1", "hands": ["a.json", ...]}.
/// Hands come back sorted by class id; duplicate class ids are rejected.
std::vector<HandSpec> load_roster(const std::filesystem::path& path);
/// Also writes the shared unit box mesh when a link uses it.
void save_roster(const std::vector<HandSpec>& hands, const std::filesystem::path& dir);

const HandSpec& hand_by_class(const std::vector<HandSpec>& roster, int class_id);
const HandSpec& hand_by_name(const std::vector<HandSpec>& roster, const std::string& name);

}  // namespace dgd
