#pragma once

#include <cstdint>
#include <filesystem>

#include "bevlat/attack.hpp"
#include "bevlat/defense.hpp"
#include "bevlat/experiment.hpp"
#include "bevlat/json_io.hpp"

namespace bevlat {

inline constexpr int kConfigSchemaVersion = 1;

struct ScenarioParams {
    std::uint64_t seed = 42;
    int agents = 2;
    int objects = 3;
    int frames = 20;
};

// Everything an experiment needs besides the scenario itself. Defaults are
// the shipped settings; a config file only lists what it overrides.
struct ExperimentConfig {
    ScenarioParams scenario;
    AttackConfig attack;
    PostProcessConfig post;
    TimingConfig timing;
    double asr_threshold = 1.5;   // seconds
    ConsensusConfig consensus;
    AblationGrid ablation{{0.2}, {0.05, 0.15, 0.30}, {1000, 500, 250, 125}};

    void validate() const;
};

void to_json(Json& j, const ScenarioParams& v);
void from_json(const Json& j, ScenarioParams& v);

// The document must carry "schema_version" equal to kConfigSchemaVersion.
ExperimentConfig parse_config(const Json& j);
Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace bevlat
