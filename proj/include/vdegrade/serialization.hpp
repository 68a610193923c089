#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "vdegrade/pipeline.hpp"

namespace vdegrade {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigVersion = 1;
inline constexpr int kManifestVersion = 1;

/// Parses a versioned pipeline config. Unknown keys at any level, wrong
/// types and a missing or unsupported "version" raise ConfigError.
PipelineConfig config_from_json(const Json& j);
Json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

Json spec_to_json(const DegradationSpec& spec);
DegradationSpec spec_from_json(DegradationType type, const Json& j);

Json plan_to_json(const PipelinePlan& plan);
PipelinePlan plan_from_json(const Json& j);

Json manifest_to_json(const DatasetResult& result, const PipelineConfig& config);
/// Parsed manifest: the config it was produced with and its entries.
struct Manifest {
  PipelineConfig config;
  DatasetResult result;
};
Manifest manifest_from_json(const Json& j);

}  // namespace vdegrade
