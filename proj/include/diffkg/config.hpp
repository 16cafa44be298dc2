#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "diffkg/trainer.hpp"

namespace diffkg {

/// Full run configuration: hyperparameters plus dataset paths and output
/// locations. Every key has a documented default; unknown keys are rejected.
struct RunConfig {
    HyperParams hp;
    double test_ratio = 0.2;
    std::size_t k_core = 10;
    std::string interactions;  // raw "user item" file
    std::string kg;            // "head relation tail" file
    std::string train;         // pre-split train interactions (dense ids)
    std::string test;          // pre-split test interactions (dense ids)
    std::string out = "out";
    std::string checkpoint;
    std::string users;  // comma-separated user ids for `recommend`
    std::string synth_kind = "both";
};

struct ConfigKey {
    std::string name;
    std::string type;  // int | real | bool | string
    std::string description;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

/// Set one key; throws UsageError for unknown keys or type mismatches.
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value);

/// Resolution order: defaults, then the optional key=value file, then
/// DIFFKG_<KEY> environment variables, then command-line overrides.
RunConfig resolve_config(const std::optional<std::string>& file,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

/// Bounds checks beyond HyperParams::validate (ratios, k-core).
void validate_config(const RunConfig& cfg);

std::string render_config(const RunConfig& cfg);
void write_resolved_config(const RunConfig& cfg, const std::string& path);

}  // namespace diffkg
