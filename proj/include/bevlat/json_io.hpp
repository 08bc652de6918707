#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "bevlat/attack.hpp"
#include "bevlat/defense.hpp"
#include "bevlat/experiment.hpp"
#include "bevlat/pipeline.hpp"
#include "bevlat/scenario.hpp"
#include "bevlat/warp.hpp"

namespace bevlat {

using Json = nlohmann::json;

// Objects are read strictly: unknown keys are rejected, missing keys keep
// their default values, and type errors surface as ValidationError naming the key.
void to_json(Json& j, const PoseSE2& v);
void from_json(const Json& j, PoseSE2& v);
void to_json(Json& j, const GridSpec& v);
void from_json(const Json& j, GridSpec& v);
void to_json(Json& j, const AnchorPrior& v);
void from_json(const Json& j, AnchorPrior& v);
void to_json(Json& j, const AnchorConfig& v);
void from_json(const Json& j, AnchorConfig& v);
void to_json(Json& j, const EncoderModel& v);
void from_json(const Json& j, EncoderModel& v);
void to_json(Json& j, const GroundTexture& v);
void from_json(const Json& j, GroundTexture& v);
void to_json(Json& j, const ObjectTrack& v);
void from_json(const Json& j, ObjectTrack& v);
void to_json(Json& j, const AgentTrack& v);
void from_json(const Json& j, AgentTrack& v);
void to_json(Json& j, const Scenario& v);
void from_json(const Json& j, Scenario& v);

// Transforms are 9-value row-major arrays.
void to_json(Json& j, const AffineTransform2D& v);
void from_json(const Json& j, AffineTransform2D& v);

void to_json(Json& j, const ProposalBox& v);
void from_json(const Json& j, ProposalBox& v);
void to_json(Json& j, const NmsStats& v);
void from_json(const Json& j, NmsStats& v);
void to_json(Json& j, const TimingBreakdown& v);
void from_json(const Json& j, TimingBreakdown& v);
void to_json(Json& j, const FeatureMap& v);
void from_json(const Json& j, FeatureMap& v);

void to_json(Json& j, const AttackConfig& v);
void from_json(const Json& j, AttackConfig& v);
void to_json(Json& j, const PostProcessConfig& v);
void from_json(const Json& j, PostProcessConfig& v);
void to_json(Json& j, const TimingConfig& v);
void from_json(const Json& j, TimingConfig& v);
void to_json(Json& j, const ConsensusConfig& v);
void from_json(const Json& j, ConsensusConfig& v);
void to_json(Json& j, const AblationGrid& v);
void from_json(const Json& j, AblationGrid& v);

void to_json(Json& j, const StepTrace& v);
void from_json(const Json& j, StepTrace& v);
void to_json(Json& j, const FrameRecord& v);
void from_json(const Json& j, FrameRecord& v);
void to_json(Json& j, const RunReport& v);
void from_json(const Json& j, RunReport& v);
void to_json(Json& j, const AblationPoint& v);
void from_json(const Json& j, AblationPoint& v);
void to_json(Json& j, const AblationReport& v);
void from_json(const Json& j, AblationReport& v);
void to_json(Json& j, const DefenseFrame& v);
void from_json(const Json& j, DefenseFrame& v);
void to_json(Json& j, const DefenseReport& v);
void from_json(const Json& j, DefenseReport& v);

Json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline, so identical values give identical bytes.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace bevlat
