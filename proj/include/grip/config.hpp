#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "grip/trainer.hpp"

namespace grip {

/// Raised on unknown keys, malformed values, or out-of-range settings.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Named presets: "cifar-like", "webfg-like", "ce-baseline".
TrainConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// JSON round-trip. Parsing rejects unknown keys (the error message lists
/// them) and runs TrainConfig::validate(). The base-taking overloads only
/// override keys present in the JSON, which is how config files layer on
/// top of presets.
std::string config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const std::string& json_text,
                             const TrainConfig& base = TrainConfig{});
TrainConfig load_config_file(const std::filesystem::path& path,
                             const TrainConfig& base = TrainConfig{});
void save_config_file(const std::filesystem::path& path, const TrainConfig& config);

/// Applies dotted key=value pairs (e.g. "alpha.start=0.7", "lr=0.1") on top
/// of a base config. Keys match the JSON schema.
TrainConfig apply_overrides(TrainConfig base,
                            const std::vector<std::string>& key_value_pairs);

/// Environment overrides: GRIP_<KEY> with dots replaced by double
/// underscores (GRIP_ALPHA__START=0.7). Returns the pairs applied.
std::vector<std::string> env_overrides(TrainConfig& config);

}  // namespace grip
