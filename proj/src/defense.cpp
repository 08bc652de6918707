#include "bevlat/defense.hpp"

#include <algorithm>
#include <numeric>

#include "bevlat/errors.hpp"
#include "bevlat/metrics.hpp"
#include "bevlat/random.hpp"

namespace bevlat {
namespace {

void accumulate(TimingBreakdown& sum, const TimingBreakdown& t) {
    sum.fuse += t.fuse;
    sum.head += t.head;
    sum.decode += t.decode;
    sum.filter += t.filter;
    sum.nms += t.nms;
    sum.total += t.total;
}

std::vector<FeatureMap> select(std::span<const FeatureMap> features, const std::vector<int>& indices) {
    std::vector<FeatureMap> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(features[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace

void AblationGrid::validate() const {
    if (score_thresholds.empty() || iou_thresholds.empty() || max_keeps.empty())
        throw ValidationError("ablation grid needs at least one value per axis");
    for (double v : score_thresholds) PostProcessConfig{v, 0.5, 1}.validate();
    for (double v : iou_thresholds) PostProcessConfig{0.5, v, 1}.validate();
    for (int v : max_keeps) PostProcessConfig{0.5, 0.5, v}.validate();
}

AblationReport sweep_postprocess(std::span<const FrameInputs> frames, const HeadWeights& head,
                                 const AnchorConfig& anchors, const AblationGrid& grid, const TimingConfig& timing) {
    grid.validate();
    if (frames.empty()) throw ValidationError("ablation needs at least one frame");
    AblationReport report;
    for (double score : grid.score_thresholds)
        for (double iou : grid.iou_thresholds)
            for (int keep : grid.max_keeps) {
                AblationPoint p;
                p.post = PostProcessConfig{score, iou, keep};
                for (const FrameInputs& in : frames) {
                    const FrameRecord r = time_frame(in, head, anchors, p.post, timing);
                    p.roi_latency += r.roi_latency;
                    p.roi_proposals += r.benign_pre > 0 ? r.roi_proposals : 0.0;
                    p.benign_latency += r.benign_latency;
                    p.attacked_latency += r.attacked_latency;
                    p.benign_pre += static_cast<double>(r.benign_pre);
                    p.attacked_pre += static_cast<double>(r.attacked_pre);
                    p.attacked_iou_evaluations += static_cast<double>(r.attacked_iou_evaluations);
                    p.attacked_survivors += static_cast<double>(r.attacked_post);
                }
                const double n = static_cast<double>(frames.size());
                for (double* v : {&p.roi_latency, &p.roi_proposals, &p.benign_latency, &p.attacked_latency,
                                  &p.benign_pre, &p.attacked_pre, &p.attacked_iou_evaluations,
                                  &p.attacked_survivors})
                    *v /= n;
                report.points.push_back(p);
            }
    return report;
}

void ConsensusConfig::validate() const {
    if (iterations < 1) throw ValidationError("consensus needs at least one sampling iteration");
    if (subset_size < 0) throw ValidationError("subset size must be non-negative");
    if (!(match_iou > 0.0 && match_iou <= 1.0)) throw ValidationError("match IoU must lie in (0, 1]");
    if (!(min_jaccard >= 0.0 && min_jaccard <= 1.0)) throw ValidationError("Jaccard threshold must lie in [0, 1]");
}

double detection_jaccard(std::span<const ProposalBox> a, std::span<const ProposalBox> b, double match_iou) {
    if (a.empty() && b.empty()) return 1.0;
    std::vector<char> used(b.size(), 0);
    std::size_t matched = 0;
    for (const ProposalBox& da : a) {
        double best = match_iou;
        std::ptrdiff_t hit = -1;
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (used[k]) continue;
            const double iou = rotated_iou(da, b[k]);
            if (iou >= best) {
                best = iou;
                hit = static_cast<std::ptrdiff_t>(k);
            }
        }
        if (hit >= 0) {
            used[static_cast<std::size_t>(hit)] = 1;
            ++matched;
        }
    }
    return static_cast<double>(matched) / static_cast<double>(a.size() + b.size() - matched);
}

ConsensusResult robosac_consensus(std::span<const FeatureMap> features, int ego_index, const HeadWeights& head,
                                  const AnchorConfig& anchors, const PostProcessConfig& post,
                                  const ConsensusConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(features.size());
    if (ego_index < 0 || ego_index >= n) throw StructuralError("ego index out of range");
    if (cfg.subset_size >= n) throw ValidationError("subset size must be smaller than the agent count");

    ConsensusResult result;
    const std::vector<int> ego_only{ego_index};
    const std::vector<FeatureMap> ego_features = select(features, ego_only);
    PipelineResult reference = run_pipeline(ego_features, 0, head, anchors, post);
    ++result.invocations;
    accumulate(result.timing, reference.timing);
    result.iou_evaluations += reference.nms.iou_evaluations;

    std::vector<int> pool;
    for (int i = 0; i < n; ++i)
        if (i != ego_index) pool.push_back(i);
    Rng rng(cfg.seed);
    for (int it = 0; it < cfg.iterations; ++it) {
        for (int k = 0; k < cfg.subset_size; ++k) {
            const int pick = k + rng.below(static_cast<int>(pool.size()) - k);
            std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
        }
        std::vector<int> subset{ego_index};
        subset.insert(subset.end(), pool.begin(), pool.begin() + cfg.subset_size);
        PipelineResult trial = run_pipeline(select(features, subset), 0, head, anchors, post);
        ++result.invocations;
        accumulate(result.timing, trial.timing);
        result.iou_evaluations += trial.nms.iou_evaluations;
        if (detection_jaccard(trial.detections, reference.detections, cfg.match_iou) >= cfg.min_jaccard) {
            result.detections = std::move(trial.detections);
            result.consensus_found = true;
            result.accepted_agents = std::move(subset);
            return result;
        }
    }
    result.detections = std::move(reference.detections);
    result.accepted_agents = ego_only;
    return result;
}

DefenseReport evaluate_defense(std::span<const FrameInputs> frames, const HeadWeights& head,
                               const AnchorConfig& anchors, const PostProcessConfig& post,
                               const ConsensusConfig& cfg, const TimingConfig& timing) {
    cfg.validate();
    timing.validate();
    if (frames.empty()) throw ValidationError("defense evaluation needs at least one frame");
    DefenseReport report;
    report.consensus = cfg;
    for (const FrameInputs& in : frames) {
        DefenseFrame d;
        d.frame = in.frame;
        const PipelineResult benign = run_pipeline(in.benign, in.ego_index, head, anchors, post);
        const PipelineResult attacked = run_pipeline(in.attacked, in.ego_index, head, anchors, post);
        const ConsensusResult defended = robosac_consensus(in.attacked, in.ego_index, head, anchors, post, cfg);
        d.ap_benign = average_precision(benign.detections, in.ground_truth);
        d.ap_attacked = average_precision(attacked.detections, in.ground_truth);
        d.ap_defended = average_precision(defended.detections, in.ground_truth);
        d.consensus_found = defended.consensus_found;
        d.invocations = defended.invocations;

        d.attacked_latency = measure_latency(
            [&] { run_pipeline(in.attacked, in.ego_index, head, anchors, post); }, timing.warmups,
            timing.repetitions).median;
        d.defended_latency = measure_latency(
            [&] { robosac_consensus(in.attacked, in.ego_index, head, anchors, post, cfg); }, timing.warmups,
            timing.repetitions).median;
        d.defended_benign_latency = measure_latency(
            [&] { robosac_consensus(in.benign, in.ego_index, head, anchors, post, cfg); }, timing.warmups,
            timing.repetitions).median;
        d.amplification = d.defended_latency / d.attacked_latency;
        report.frames.push_back(d);
    }
    const double n = static_cast<double>(report.frames.size());
    for (const DefenseFrame& d : report.frames) {
        report.mean_amplification += d.amplification / n;
        report.mean_ap_benign += d.ap_benign / n;
        report.mean_ap_attacked += d.ap_attacked / n;
        report.mean_ap_defended += d.ap_defended / n;
    }
    return report;
}

}  // namespace bevlat
