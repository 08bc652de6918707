#include "bevlat/json_io.hpp"

#include <fstream>

#include "bevlat/errors.hpp"
#include "json_reader.hpp"

namespace bevlat {
namespace {

void check_scenario(const Scenario& s) {
    const int n = static_cast<int>(s.agents.size());
    if (n < 2) throw ValidationError("Scenario: needs at least two agents");
    if (s.frames < 1) throw ValidationError("Scenario: needs at least one frame");
    if (s.victim < 0 || s.victim >= n || s.attacker < 0 || s.attacker >= n || s.victim == s.attacker)
        throw ValidationError("Scenario: victim and attacker must be distinct agents");
    int attackers = 0;
    for (const AgentTrack& a : s.agents) {
        if (static_cast<int>(a.poses.size()) != s.frames)
            throw ValidationError("Scenario: agent " + std::to_string(a.id) + " pose count differs from frames");
        attackers += a.role == "attacker";
    }
    if (attackers != 1) throw ValidationError("Scenario: exactly one agent must have role 'attacker'");
    for (const ObjectTrack& o : s.objects)
        for (double d : {o.length, o.width, o.height})
            if (!(d >= 1.5 && d <= 6.0)) throw ValidationError("Scenario: object dimensions must lie in [1.5, 6] m");
}

}  // namespace

void to_json(Json& j, const PoseSE2& v) { j = Json{{"x", v.x}, {"y", v.y}, {"yaw", v.yaw}}; }
void from_json(const Json& j, PoseSE2& v) {
    StrictReader r(j, "PoseSE2");
    r("x", v.x)("y", v.y)("yaw", v.yaw).finish();
}

void to_json(Json& j, const GridSpec& v) {
    j = Json{{"channels", v.channels}, {"rows", v.rows}, {"cols", v.cols}, {"resolution", v.resolution}};
}
void from_json(const Json& j, GridSpec& v) {
    StrictReader r(j, "GridSpec");
    r("channels", v.channels)("rows", v.rows)("cols", v.cols)("resolution", v.resolution).finish();
}

void to_json(Json& j, const AnchorPrior& v) {
    j = Json{{"length", v.length}, {"width", v.width}, {"height", v.height}, {"yaw", v.yaw}};
}
void from_json(const Json& j, AnchorPrior& v) {
    StrictReader r(j, "AnchorPrior");
    r("length", v.length)("width", v.width)("height", v.height)("yaw", v.yaw).finish();
}

void to_json(Json& j, const AnchorConfig& v) {
    j = Json{{"priors", v.priors}, {"z_center", v.z_center}, {"resolution", v.resolution}};
}
void from_json(const Json& j, AnchorConfig& v) {
    StrictReader r(j, "AnchorConfig");
    r("priors", v.priors)("z_center", v.z_center)("resolution", v.resolution).finish();
}

void to_json(Json& j, const EncoderModel& v) {
    j = Json{{"heat_along", v.heat_along},
             {"heat_across", v.heat_across},
             {"footprint", v.footprint},
             {"occupancy_gain", v.occupancy_gain},
             {"size_gain", v.size_gain},
             {"elevation_gain", v.elevation_gain},
             {"yaw_gain", v.yaw_gain},
             {"road_z", v.road_z},
             {"score_heat", v.score_heat},
             {"score_orientation", v.score_orientation},
             {"score_ground", v.score_ground},
             {"score_bias", v.score_bias},
             {"anchor_bias_step", v.anchor_bias_step}};
}
void from_json(const Json& j, EncoderModel& v) {
    StrictReader r(j, "EncoderModel");
    r("heat_along", v.heat_along)("heat_across", v.heat_across)("footprint", v.footprint)(
        "occupancy_gain", v.occupancy_gain)("size_gain", v.size_gain)("elevation_gain", v.elevation_gain)(
        "yaw_gain", v.yaw_gain)("road_z", v.road_z)("score_heat", v.score_heat)(
        "score_orientation", v.score_orientation)("score_ground", v.score_ground)("score_bias", v.score_bias)(
        "anchor_bias_step", v.anchor_bias_step)
        .finish();
}

void to_json(Json& j, const GroundTexture& v) {
    j = Json{{"seed", v.seed}, {"lattice", v.lattice}, {"amplitude", v.amplitude},
             {"exponent", v.exponent}, {"offset", v.offset}};
}
void from_json(const Json& j, GroundTexture& v) {
    StrictReader r(j, "GroundTexture");
    r("seed", v.seed)("lattice", v.lattice)("amplitude", v.amplitude)("exponent", v.exponent)("offset", v.offset)
        .finish();
}

void to_json(Json& j, const ObjectTrack& v) {
    j = Json{{"id", v.id},         {"x", v.x},         {"y", v.y},           {"z", v.z},
             {"length", v.length}, {"width", v.width}, {"height", v.height}, {"yaw", v.yaw},
             {"vx", v.vx},         {"vy", v.vy}};
}
void from_json(const Json& j, ObjectTrack& v) {
    StrictReader r(j, "ObjectTrack");
    r("id", v.id)("x", v.x)("y", v.y)("z", v.z)("length", v.length)("width", v.width)("height", v.height)(
        "yaw", v.yaw)("vx", v.vx)("vy", v.vy)
        .finish();
}

void to_json(Json& j, const AgentTrack& v) { j = Json{{"id", v.id}, {"role", v.role}, {"poses", v.poses}}; }
void from_json(const Json& j, AgentTrack& v) {
    StrictReader r(j, "AgentTrack");
    r("id", v.id)("role", v.role)("poses", v.poses).finish();
}

void to_json(Json& j, const Scenario& v) {
    j = Json{{"seed", v.seed},       {"frames", v.frames},     {"dt", v.dt},         {"range", v.range},
             {"grid", v.grid},       {"anchors", v.anchors},   {"model", v.model},   {"ground", v.ground},
             {"relief", v.relief},   {"agents", v.agents},     {"objects", v.objects}, {"victim", v.victim},
             {"attacker", v.attacker}};
}
void from_json(const Json& j, Scenario& v) {
    StrictReader r(j, "Scenario");
    r("seed", v.seed)("frames", v.frames)("dt", v.dt)("range", v.range)("grid", v.grid)("anchors", v.anchors)(
        "model", v.model)("ground", v.ground)("relief", v.relief)("agents", v.agents)("objects", v.objects)(
        "victim", v.victim)("attacker", v.attacker)
        .finish();
    check_scenario(v);
}

void to_json(Json& j, const AffineTransform2D& v) { j = v.m; }
void from_json(const Json& j, AffineTransform2D& v) {
    if (!j.is_array() || j.size() != 9) throw ValidationError("AffineTransform2D: expected 9 numbers");
    for (std::size_t k = 0; k < 9; ++k) {
        if (!j[k].is_number()) throw ValidationError("AffineTransform2D: expected 9 numbers");
        v.m[k] = j[k].get<double>();
    }
}

void to_json(Json& j, const ProposalBox& v) {
    j = Json{{"x", v.x},           {"y", v.y},         {"z", v.z},         {"length", v.length},
             {"width", v.width},   {"height", v.height}, {"yaw", v.yaw},   {"score", v.score},
             {"anchor", v.anchor}, {"row", v.row},     {"col", v.col},     {"source_index", v.source_index}};
}
void from_json(const Json& j, ProposalBox& v) {
    StrictReader r(j, "ProposalBox");
    r("x", v.x)("y", v.y)("z", v.z)("length", v.length)("width", v.width)("height", v.height)("yaw", v.yaw)(
        "score", v.score)("anchor", v.anchor)("row", v.row)("col", v.col)("source_index", v.source_index)
        .finish();
}

void to_json(Json& j, const NmsStats& v) {
    j = Json{{"input_count", v.input_count}, {"iou_evaluations", v.iou_evaluations},
             {"iterations", v.iterations},   {"survivors", v.survivors},
             {"wall_time", v.wall_time}};
}
void from_json(const Json& j, NmsStats& v) {
    StrictReader r(j, "NmsStats");
    r("input_count", v.input_count)("iou_evaluations", v.iou_evaluations)("iterations", v.iterations)(
        "survivors", v.survivors)("wall_time", v.wall_time)
        .finish();
}

void to_json(Json& j, const TimingBreakdown& v) {
    j = Json{{"fuse", v.fuse},     {"head", v.head}, {"decode", v.decode},
             {"filter", v.filter}, {"nms", v.nms},   {"total", v.total}};
}
void from_json(const Json& j, TimingBreakdown& v) {
    StrictReader r(j, "TimingBreakdown");
    r("fuse", v.fuse)("head", v.head)("decode", v.decode)("filter", v.filter)("nms", v.nms)("total", v.total)
        .finish();
}

void to_json(Json& j, const FeatureMap& v) {
    j = Json{{"agent_id", v.agent_id},
             {"timestamp", v.timestamp},
             {"pose", v.pose},
             {"resolution", v.resolution},
             {"shape", {v.data.channels(), v.data.rows(), v.data.cols()}},
             {"data", v.data.values()}};
}
void from_json(const Json& j, FeatureMap& v) {
    std::vector<int> shape;
    std::vector<double> data;
    StrictReader r(j, "FeatureMap");
    r("agent_id", v.agent_id)("timestamp", v.timestamp)("pose", v.pose)("resolution", v.resolution)(
        "shape", shape)("data", data)
        .finish();
    if (shape.size() != 3 || shape[0] < 0 || shape[1] < 0 || shape[2] < 0)
        throw ValidationError("FeatureMap: shape must be [C, H, W]");
    v.data = Tensor3(shape[0], shape[1], shape[2]);
    if (data.size() != v.data.size()) throw ValidationError("FeatureMap: data length does not match shape");
    v.data.values() = std::move(data);
}

void to_json(Json& j, const AttackConfig& v) {
    j = Json{{"tau", v.tau},
             {"lambda1", v.lambda_conf},
             {"lambda2", v.lambda_geometry},
             {"steps", v.steps},
             {"step_size", v.step_size},
             {"linf_budget", v.budget},
             {"L_max", v.max_length},
             {"W_max", v.max_width},
             {"z_min", v.z_min},
             {"z_max", v.z_max},
             {"surrogate_beta", v.sharpness},
             {"prior_art_overlap_weight", v.overlap_weight},
             {"pgd_random_start", v.pgd_random_start},
             {"seed", v.seed}};
}
void from_json(const Json& j, AttackConfig& v) {
    StrictReader r(j, "AttackConfig");
    r("tau", v.tau)("lambda1", v.lambda_conf)("lambda2", v.lambda_geometry)("steps", v.steps)(
        "step_size", v.step_size)("linf_budget", v.budget)("L_max", v.max_length)("W_max", v.max_width)(
        "z_min", v.z_min)("z_max", v.z_max)("surrogate_beta", v.sharpness)(
        "prior_art_overlap_weight", v.overlap_weight)("pgd_random_start", v.pgd_random_start)("seed", v.seed)
        .finish();
}

void to_json(Json& j, const PostProcessConfig& v) {
    j = Json{{"score_threshold", v.score_threshold}, {"iou_threshold", v.iou_threshold}, {"max_keep", v.max_keep}};
}
void from_json(const Json& j, PostProcessConfig& v) {
    StrictReader r(j, "PostProcessConfig");
    r("score_threshold", v.score_threshold)("iou_threshold", v.iou_threshold)("max_keep", v.max_keep).finish();
}

void to_json(Json& j, const TimingConfig& v) { j = Json{{"warmups", v.warmups}, {"repetitions", v.repetitions}}; }
void from_json(const Json& j, TimingConfig& v) {
    StrictReader r(j, "TimingConfig");
    r("warmups", v.warmups)("repetitions", v.repetitions).finish();
}

void to_json(Json& j, const ConsensusConfig& v) {
    j = Json{{"iterations", v.iterations}, {"subset_size", v.subset_size}, {"match_iou", v.match_iou},
             {"min_jaccard", v.min_jaccard}, {"seed", v.seed}};
}
void from_json(const Json& j, ConsensusConfig& v) {
    StrictReader r(j, "ConsensusConfig");
    r("iterations", v.iterations)("subset_size", v.subset_size)("match_iou", v.match_iou)(
        "min_jaccard", v.min_jaccard)("seed", v.seed)
        .finish();
}

void to_json(Json& j, const AblationGrid& v) {
    j = Json{{"score_thresholds", v.score_thresholds}, {"iou_thresholds", v.iou_thresholds},
             {"max_keeps", v.max_keeps}};
}
void from_json(const Json& j, AblationGrid& v) {
    StrictReader r(j, "AblationGrid");
    r("score_thresholds", v.score_thresholds)("iou_thresholds", v.iou_thresholds)("max_keeps", v.max_keeps)
        .finish();
}

void to_json(Json& j, const StepTrace& v) {
    j = Json{{"step", v.step}, {"loss", v.loss}, {"proposals", v.proposals}};
}
void from_json(const Json& j, StepTrace& v) {
    StrictReader r(j, "StepTrace");
    r("step", v.step)("loss", v.loss)("proposals", v.proposals).finish();
}

void to_json(Json& j, const FrameRecord& v) {
    j = Json{{"frame", v.frame},
             {"benign_samples", v.benign_samples},
             {"attacked_samples", v.attacked_samples},
             {"benign_latency", v.benign_latency},
             {"attacked_latency", v.attacked_latency},
             {"benign_rsd", v.benign_rsd},
             {"attacked_rsd", v.attacked_rsd},
             {"benign_pre", v.benign_pre},
             {"attacked_pre", v.attacked_pre},
             {"benign_post", v.benign_post},
             {"attacked_post", v.attacked_post},
             {"benign_iou_evaluations", v.benign_iou_evaluations},
             {"attacked_iou_evaluations", v.attacked_iou_evaluations},
             {"roi_latency", v.roi_latency},
             {"roi_proposals", v.roi_proposals},
             {"trace", v.trace}};
}
void from_json(const Json& j, FrameRecord& v) {
    StrictReader r(j, "FrameRecord");
    r("frame", v.frame)("benign_samples", v.benign_samples)("attacked_samples", v.attacked_samples)(
        "benign_latency", v.benign_latency)("attacked_latency", v.attacked_latency)("benign_rsd", v.benign_rsd)(
        "attacked_rsd", v.attacked_rsd)("benign_pre", v.benign_pre)("attacked_pre", v.attacked_pre)(
        "benign_post", v.benign_post)("attacked_post", v.attacked_post)(
        "benign_iou_evaluations", v.benign_iou_evaluations)("attacked_iou_evaluations", v.attacked_iou_evaluations)(
        "roi_latency", v.roi_latency)("roi_proposals", v.roi_proposals)("trace", v.trace)
        .finish();
}

void to_json(Json& j, const RunReport& v) {
    j = Json{{"objective", v.objective},
             {"warp", v.warp},
             {"seed", v.seed},
             {"agents", v.agents},
             {"objects", v.objects},
             {"frames", v.frames},
             {"attack", v.attack},
             {"post", v.post},
             {"timing", v.timing},
             {"asr_threshold", v.asr_threshold},
             {"records", v.records},
             {"summary",
              {{"roi_latency", v.roi_latency},
               {"roi_proposals", v.roi_proposals},
               {"roi_latency_of_means", v.roi_latency_of_means},
               {"roi_proposals_of_means", v.roi_proposals_of_means},
               {"mean_benign_latency", v.mean_benign_latency},
               {"mean_attacked_latency", v.mean_attacked_latency},
               {"benign_rsd_percent", v.benign_rsd_percent},
               {"attacked_rsd_percent", v.attacked_rsd_percent},
               {"asr", v.asr},
               {"median_benign_pre", v.median_benign_pre},
               {"median_attacked_pre", v.median_attacked_pre},
               {"median_attacked_post", v.median_attacked_post}}}};
}
void from_json(const Json& j, RunReport& v) {
    Json summary = Json::object();
    StrictReader r(j, "RunReport");
    r("objective", v.objective)("warp", v.warp)("seed", v.seed)("agents", v.agents)("objects", v.objects)(
        "frames", v.frames)("attack", v.attack)("post", v.post)("timing", v.timing)("asr_threshold", v.asr_threshold)(
        "records", v.records)("summary", summary)
        .finish();
    StrictReader s(summary, "RunReport.summary");
    s("roi_latency", v.roi_latency)("roi_proposals", v.roi_proposals)("roi_latency_of_means", v.roi_latency_of_means)(
        "roi_proposals_of_means", v.roi_proposals_of_means)("mean_benign_latency", v.mean_benign_latency)(
        "mean_attacked_latency", v.mean_attacked_latency)("benign_rsd_percent", v.benign_rsd_percent)(
        "attacked_rsd_percent", v.attacked_rsd_percent)("asr", v.asr)("median_benign_pre", v.median_benign_pre)(
        "median_attacked_pre", v.median_attacked_pre)("median_attacked_post", v.median_attacked_post)
        .finish();
}

void to_json(Json& j, const AblationPoint& v) {
    j = Json{{"post", v.post},
             {"roi_latency", v.roi_latency},
             {"roi_proposals", v.roi_proposals},
             {"benign_latency", v.benign_latency},
             {"attacked_latency", v.attacked_latency},
             {"benign_pre", v.benign_pre},
             {"attacked_pre", v.attacked_pre},
             {"attacked_iou_evaluations", v.attacked_iou_evaluations},
             {"attacked_survivors", v.attacked_survivors}};
}
void from_json(const Json& j, AblationPoint& v) {
    StrictReader r(j, "AblationPoint");
    r("post", v.post)("roi_latency", v.roi_latency)("roi_proposals", v.roi_proposals)(
        "benign_latency", v.benign_latency)("attacked_latency", v.attacked_latency)("benign_pre", v.benign_pre)(
        "attacked_pre", v.attacked_pre)("attacked_iou_evaluations", v.attacked_iou_evaluations)(
        "attacked_survivors", v.attacked_survivors)
        .finish();
}

void to_json(Json& j, const AblationReport& v) { j = Json{{"points", v.points}}; }
void from_json(const Json& j, AblationReport& v) {
    StrictReader r(j, "AblationReport");
    r("points", v.points).finish();
}

void to_json(Json& j, const DefenseFrame& v) {
    j = Json{{"frame", v.frame},
             {"attacked_latency", v.attacked_latency},
             {"defended_latency", v.defended_latency},
             {"defended_benign_latency", v.defended_benign_latency},
             {"amplification", v.amplification},
             {"ap_benign", v.ap_benign},
             {"ap_attacked", v.ap_attacked},
             {"ap_defended", v.ap_defended},
             {"consensus_found", v.consensus_found},
             {"invocations", v.invocations}};
}
void from_json(const Json& j, DefenseFrame& v) {
    StrictReader r(j, "DefenseFrame");
    r("frame", v.frame)("attacked_latency", v.attacked_latency)("defended_latency", v.defended_latency)(
        "defended_benign_latency", v.defended_benign_latency)("amplification", v.amplification)(
        "ap_benign", v.ap_benign)("ap_attacked", v.ap_attacked)("ap_defended", v.ap_defended)(
        "consensus_found", v.consensus_found)("invocations", v.invocations)
        .finish();
}

void to_json(Json& j, const DefenseReport& v) {
    j = Json{{"consensus", v.consensus},
             {"frames", v.frames},
             {"mean_amplification", v.mean_amplification},
             {"mean_ap_benign", v.mean_ap_benign},
             {"mean_ap_attacked", v.mean_ap_attacked},
             {"mean_ap_defended", v.mean_ap_defended}};
}
void from_json(const Json& j, DefenseReport& v) {
    StrictReader r(j, "DefenseReport");
    r("consensus", v.consensus)("frames", v.frames)("mean_amplification", v.mean_amplification)(
        "mean_ap_benign", v.mean_ap_benign)("mean_ap_attacked", v.mean_ap_attacked)(
        "mean_ap_defended", v.mean_ap_defended)
        .finish();
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw ValidationError("failed writing " + path.string());
}

}  // namespace bevlat
