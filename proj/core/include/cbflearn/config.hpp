#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cbflearn/scenario.hpp"

namespace cbflearn {

// Flat key-value view of a resolved configuration, keyed "section.key".
// std::map keeps the serialization canonical for hashing.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap config_map(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_map(const ConfigMap& map);

// Applies a partial key-value override set. Unknown keys raise ConfigError.
void apply_overrides(ScenarioConfig& cfg, const ConfigMap& overrides);

// "[section]\nkey = value" text form; '#' starts a comment.
ConfigMap parse_config_text(const std::string& text);
std::string serialize_config_text(const ConfigMap& map);

std::uint64_t fnv1a_hash(const std::string& text);

std::string toolkit_version();

}  // namespace cbflearn
