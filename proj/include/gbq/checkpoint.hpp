#pragma once

// JSON checkpoint: architecture, weights (row-major with shapes), Adam
// moments and step, and free-form training metadata. Doubles are written in
// shortest round-trip form so a save/load cycle is bit-exact.

#include "gbq/graybox.hpp"

#include <json.hpp>

#include <filesystem>

namespace gbq {

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelParams& p);
/// Fills `into` (already shaped by the architecture); throws on any mismatch.
void params_from_json(const nlohmann::json& j, ModelParams& into);

nlohmann::json to_json(const ModelState& m, const nlohmann::json& metadata = {});
ModelState model_from_json(const nlohmann::json& j, nlohmann::json* metadata = nullptr);

void save_checkpoint(const ModelState& m, const std::filesystem::path& path,
                     const nlohmann::json& metadata = {});
ModelState load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

}  // namespace gbq
