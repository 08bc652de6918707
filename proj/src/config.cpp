#include "bevlat/config.hpp"

#include "bevlat/errors.hpp"
#include "json_reader.hpp"

namespace bevlat {

void ExperimentConfig::validate() const {
    if (scenario.agents < 2) throw ValidationError("scenario needs at least two agents");
    if (scenario.objects < 0) throw ValidationError("object count must be non-negative");
    if (scenario.frames < 2) throw ValidationError("scenario needs at least two frames");
    attack.validate();
    post.validate();
    timing.validate();
    if (!(asr_threshold > 0)) throw ValidationError("ASR threshold must be positive");
    consensus.validate();
    ablation.validate();
}

void to_json(Json& j, const ScenarioParams& v) {
    j = Json{{"seed", v.seed}, {"agents", v.agents}, {"objects", v.objects}, {"frames", v.frames}};
}
void from_json(const Json& j, ScenarioParams& v) {
    StrictReader r(j, "ScenarioParams");
    r("seed", v.seed)("agents", v.agents)("objects", v.objects)("frames", v.frames).finish();
}

ExperimentConfig parse_config(const Json& j) {
    if (!j.is_object()) throw ValidationError("config: expected a JSON object");
    const auto version = j.find("schema_version");
    if (version == j.end() || !version->is_number_integer())
        throw ValidationError("config: missing integer schema_version");
    if (version->get<int>() != kConfigSchemaVersion)
        throw ValidationError("config: unsupported schema_version " + version->dump() + " (expected " +
                              std::to_string(kConfigSchemaVersion) + ")");
    ExperimentConfig cfg;
    int schema = kConfigSchemaVersion;
    StrictReader r(j, "config");
    r("schema_version", schema)("scenario", cfg.scenario)("attack", cfg.attack)("post", cfg.post)(
        "timing", cfg.timing)("asr_threshold", cfg.asr_threshold)("consensus", cfg.consensus)(
        "ablation", cfg.ablation)
        .finish();
    cfg.validate();
    return cfg;
}

Json config_to_json(const ExperimentConfig& cfg) {
    return Json{{"schema_version", kConfigSchemaVersion},
                {"scenario", cfg.scenario},
                {"attack", cfg.attack},
                {"post", cfg.post},
                {"timing", cfg.timing},
                {"asr_threshold", cfg.asr_threshold},
                {"consensus", cfg.consensus},
                {"ablation", cfg.ablation}};
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_json_file(path)); }

}  // namespace bevlat
