#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "prioq/stream_model.hpp"

namespace prioq {

inline constexpr const char* kVersion = "0.1.0";

// Parses a system from its JSON form:
//   {"classes": [{"p": ..., "alpha": [entry...], "T": [[entry...]...],
//                 "service": {"values": [...], "probs": [...]}}]}
// where entry = {"prob": ..., "batch": {"values": [...], "probs": [...]}}
// (batch may be omitted when prob is 0).  Throws ModelError with a reason on
// any structural problem.
SystemSpec parse_system(const nlohmann::json& j);

// Reads and parses a model file; parse errors carry the json position.
SystemSpec load_system(const std::filesystem::path& path);

nlohmann::json system_to_json(const SystemSpec& system);

}  // namespace prioq
