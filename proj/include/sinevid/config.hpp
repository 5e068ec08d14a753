#pragma once

// Plain-text training configuration: one `key = value` per line, `#` starts a
// comment, blank lines ignored. Every TrainConfig field is a key. Unknown
// keys, duplicates and malformed values are errors reported with their line
// number. batch_frames, coords_per_frame and iterations have no default and
// must be present.

#include "sinevid/meta_trainer.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sinevid {

// Throws ConfigError ("<origin>:<line>: ...").
TrainConfig parse_config(std::string_view text, const std::string& origin = "config");
TrainConfig load_config(const std::filesystem::path& path);

// Replaces cfg.seed with $SINEVID_SEED when it is set.
void apply_seed_override(TrainConfig& cfg);

// Canonical text form with every key, parseable by parse_config.
std::string format_config(const TrainConfig& cfg);

std::vector<std::string> config_keys();
std::string to_string(Precision p);

} // namespace sinevid
