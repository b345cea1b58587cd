#pragma once

#include <map>
#include <string>
#include <vector>

#include "m3hl/trainer.hpp"

namespace m3hl {

/// Every TrainConfig field by its flat key, e.g. "mask_ratio" or "enable_hl".
const std::vector<std::string>& config_keys();

/// Sets one field from text. Booleans accept true/false/1/0/yes/no/on/off;
/// patch_size accepts "16" (square) or "16x16". Throws ConfigError on an
/// unknown key or malformed value.
void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);
void apply_settings(TrainConfig& config, const std::map<std::string, std::string>& settings);

/// Current value of a field, formatted so apply_setting round-trips it.
std::string get_setting(const TrainConfig& config, const std::string& key);
std::map<std::string, std::string> to_settings(const TrainConfig& config);

/// Flat `key = value` text, one line per key in config_keys() order.
std::string format_config(const TrainConfig& config);

std::string format_patch(const Shape& patch);

}  // namespace m3hl
