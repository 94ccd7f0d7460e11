#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "phfl/engine.hpp"

namespace phfl {

struct CliOverrides {
    std::optional<std::string> output_dir;
    std::optional<std::string> baseline;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

struct LoadedExperiment {
    Experiment experiment;      // baseline transforms already applied
    BaselineKind baseline = BaselineKind::Phfl;
    std::string output_dir;
    nlohmann::json resolved;    // config echo with every default filled in
};

/// Parses and validates an experiment config file. Unknown keys are rejected
/// with their full path; missing required fields are named. Physical values
/// are converted to SI here and nowhere else.
LoadedExperiment load_experiment_config(const std::string& path, const CliOverrides& overrides);

BaselineKind parse_baseline(const std::string& name);
const char* baseline_name(BaselineKind kind);

/// Instance file for the `optimize` subcommand.
struct OptimizeInstance {
    std::vector<ScaClient> clients;
    ScaSettings settings;
};
OptimizeInstance load_optimize_instance(const std::string& path);

}  // namespace phfl
