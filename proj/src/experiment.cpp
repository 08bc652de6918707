#include "bevlat/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bevlat/errors.hpp"
#include "bevlat/metrics.hpp"
#include "bevlat/warp.hpp"

namespace bevlat {

void TimingConfig::validate() const {
    if (warmups < 0) throw ValidationError("warmups must be non-negative");
    if (repetitions < 1) throw ValidationError("repetitions must be at least 1");
}

std::vector<FeatureMap> shared_features(const Scenario& s, int frame) {
    const PoseSE2& receiver = s.pose(s.victim, frame);
    std::vector<FeatureMap> out;
    out.reserve(s.agents.size());
    for (std::size_t a = 0; a < s.agents.size(); ++a) {
        const int agent = static_cast<int>(a);
        out.push_back(agent == s.victim ? encode_bev_features(s, frame, agent)
                                        : encode_bev_features_in(s, frame, agent, receiver));
    }
    return out;
}

AttackScene stale_scene(const Scenario& s, int frame, bool warp) {
    if (frame < 1 || frame >= s.frames) throw ValidationError("attacked frame must lie in [1, frames)");
    AttackScene scene{shared_features(s, frame - 1), s.victim, s.attacker};
    if (warp) {
        const PoseSE2& current = s.pose(s.victim, frame);
        for (FeatureMap& f : scene.features) f = warp_to_pose(f, current);
    }
    return scene;
}

std::vector<double> clean_scores(const AttackScene& scene, const HeadWeights& head, const AnchorConfig& anchors) {
    const FeatureMap fused = fuse_attention(scene.features, scene.ego_index);
    RawPrediction raw = apply_inference_head(fused.data, head);
    if (raw.scores.channels() != anchors.count()) throw StructuralError("anchor count does not match head output");
    return std::move(raw.scores.values());
}

FrameInputs craft_frame(const Scenario& s, const HeadWeights& head, int frame, const AttackOptions& options) {
    options.attack.validate();
    FrameInputs in;
    in.frame = frame;
    in.ego_index = s.victim;
    in.attacker_index = s.attacker;
    in.benign = shared_features(s, frame);
    in.ground_truth = ground_truth_boxes(s, frame, s.pose(s.victim, frame));
    in.attacked = in.benign;
    if (options.objective == ObjectiveKind::kNone) return in;

    const AttackScene scene = stale_scene(s, frame, options.warp);
    AttackConfig cfg = options.attack;
    cfg.seed = options.attack.seed + static_cast<std::uint64_t>(frame);
    std::vector<double> reference;
    if (options.objective == ObjectiveKind::kPgd) reference = clean_scores(scene, head, s.anchors);
    const auto objective = make_objective(options.objective, cfg, std::move(reference));
    Perturbation p = bim_optimize(scene, head, s.anchors, *objective, cfg);

    Tensor3& target = in.attacked[static_cast<std::size_t>(s.attacker)].data;
    if (!target.same_shape(p.delta)) throw StructuralError("perturbation shape does not match attacker feature");
    for (std::size_t k = 0; k < target.size(); ++k) {
        target.data()[k] += p.delta.data()[k];
        in.max_abs_delta = std::max(in.max_abs_delta, std::abs(p.delta.data()[k]));
    }
    in.trace = std::move(p.trace);
    return in;
}

std::vector<FrameInputs> craft_all_frames(const Scenario& s, const HeadWeights& head, const AttackOptions& options) {
    std::vector<FrameInputs> frames;
    for (int t = 1; t < s.frames; ++t) frames.push_back(craft_frame(s, head, t, options));
    return frames;
}

FrameRecord time_frame(const FrameInputs& inputs, const HeadWeights& head, const AnchorConfig& anchors,
                       const PostProcessConfig& post, const TimingConfig& timing) {
    timing.validate();
    FrameRecord r;
    r.frame = inputs.frame;
    r.trace = inputs.trace;

    const PipelineResult benign = run_pipeline(inputs.benign, inputs.ego_index, head, anchors, post);
    const PipelineResult attacked = run_pipeline(inputs.attacked, inputs.ego_index, head, anchors, post);
    const LatencyStats tb = measure_latency(
        [&] { run_pipeline(inputs.benign, inputs.ego_index, head, anchors, post); }, timing.warmups,
        timing.repetitions);
    const LatencyStats ta = measure_latency(
        [&] { run_pipeline(inputs.attacked, inputs.ego_index, head, anchors, post); }, timing.warmups,
        timing.repetitions);

    r.benign_samples = tb.samples;
    r.attacked_samples = ta.samples;
    r.benign_latency = tb.median;
    r.attacked_latency = ta.median;
    r.benign_rsd = tb.rsd_percent;
    r.attacked_rsd = ta.rsd_percent;
    r.benign_pre = benign.pre_nms_count;
    r.attacked_pre = attacked.pre_nms_count;
    r.benign_post = static_cast<std::int64_t>(benign.detections.size());
    r.attacked_post = static_cast<std::int64_t>(attacked.detections.size());
    r.benign_iou_evaluations = benign.nms.iou_evaluations;
    r.attacked_iou_evaluations = attacked.nms.iou_evaluations;
    r.roi_latency = roi_latency(r.attacked_latency, r.benign_latency);
    r.roi_proposals = r.benign_pre > 0 ? roi_proposals(static_cast<double>(r.attacked_pre),
                                                       static_cast<double>(r.benign_pre))
                                       : 0.0;
    return r;
}

void summarize(RunReport& report) {
    const auto& recs = report.records;
    if (recs.empty()) throw ValidationError("run report has no frames");
    const double n = static_cast<double>(recs.size());
    std::vector<double> benign_lat, attacked_lat, benign_pre, attacked_pre, attacked_post;
    double roi_l = 0, roi_p = 0;
    int roi_p_frames = 0;
    for (const FrameRecord& r : recs) {
        benign_lat.push_back(r.benign_latency);
        attacked_lat.push_back(r.attacked_latency);
        benign_pre.push_back(static_cast<double>(r.benign_pre));
        attacked_pre.push_back(static_cast<double>(r.attacked_pre));
        attacked_post.push_back(static_cast<double>(r.attacked_post));
        roi_l += r.roi_latency;
        if (r.benign_pre > 0) {
            roi_p += r.roi_proposals;
            ++roi_p_frames;
        }
    }
    const LatencyStats sb = summarize_latency(benign_lat);
    const LatencyStats sa = summarize_latency(attacked_lat);
    report.roi_latency = roi_l / n;
    report.roi_proposals = roi_p_frames > 0 ? roi_p / roi_p_frames : 0.0;
    report.mean_benign_latency = sb.mean;
    report.mean_attacked_latency = sa.mean;
    report.roi_latency_of_means = roi_latency(sa.mean, sb.mean);
    const double mean_bp = std::accumulate(benign_pre.begin(), benign_pre.end(), 0.0) / n;
    const double mean_ap = std::accumulate(attacked_pre.begin(), attacked_pre.end(), 0.0) / n;
    report.roi_proposals_of_means = mean_bp > 0 ? roi_proposals(mean_ap, mean_bp) : 0.0;
    report.benign_rsd_percent = sb.rsd_percent;
    report.attacked_rsd_percent = sa.rsd_percent;
    report.asr = attack_success_rate(attacked_lat, report.asr_threshold);
    report.median_benign_pre = summarize_latency(benign_pre).median;
    report.median_attacked_pre = summarize_latency(attacked_pre).median;
    report.median_attacked_post = summarize_latency(attacked_post).median;
}

RunReport run_attack_experiment(const Scenario& s, const ExperimentSetup& setup) {
    setup.post.validate();
    setup.timing.validate();
    if (!(setup.asr_threshold > 0)) throw ValidationError("ASR threshold must be positive");
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);

    RunReport report;
    report.objective = objective_name(setup.options.objective);
    report.warp = setup.options.warp;
    report.seed = s.seed;
    report.agents = static_cast<int>(s.agents.size());
    report.objects = static_cast<int>(s.objects.size());
    report.frames = s.frames;
    report.attack = setup.options.attack;
    report.post = setup.post;
    report.timing = setup.timing;
    report.asr_threshold = setup.asr_threshold;
    for (int t = 1; t < s.frames; ++t) {
        const FrameInputs in = craft_frame(s, head, t, setup.options);
        if (in.max_abs_delta > setup.options.attack.budget * (1 + 1e-12))
            throw NumericalError("attack", "perturbation exceeds its budget at frame " + std::to_string(t));
        report.records.push_back(time_frame(in, head, s.anchors, setup.post, setup.timing));
    }
    summarize(report);
    return report;
}

}  // namespace bevlat
