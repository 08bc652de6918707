#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bevlat/experiment.hpp"
#include "bevlat/pipeline.hpp"

namespace bevlat {

// Cartesian grid of post-processing settings.
struct AblationGrid {
    std::vector<double> score_thresholds{0.2};
    std::vector<double> iou_thresholds{0.15};
    std::vector<int> max_keeps{1000};
    void validate() const;
};

struct AblationPoint {
    PostProcessConfig post;
    double roi_latency = 0;      // averaged per frame
    double roi_proposals = 0;    // averaged per frame
    double benign_latency = 0;   // mean of per-frame medians, seconds
    double attacked_latency = 0;
    double benign_pre = 0, attacked_pre = 0;   // means
    double attacked_iou_evaluations = 0;
    double attacked_survivors = 0;
};

struct AblationReport {
    std::vector<AblationPoint> points;
};

AblationReport sweep_postprocess(std::span<const FrameInputs> frames, const HeadWeights& head,
                                 const AnchorConfig& anchors, const AblationGrid& grid, const TimingConfig& timing);

// Consensus defense: runs the ego-only pipeline, then up to `iterations`
// pipelines on the ego plus `subset_size` randomly drawn collaborators, and
// accepts the first subset whose detections agree with the ego-only set.
struct ConsensusConfig {
    int iterations = 8;
    int subset_size = 1;
    double match_iou = 0.5;
    double min_jaccard = 0.7;
    std::uint64_t seed = 0;
    void validate() const;
};

struct ConsensusResult {
    std::vector<ProposalBox> detections;
    bool consensus_found = false;
    std::vector<int> accepted_agents;    // feature indices of the accepted subset, ego first
    int invocations = 0;                 // pipeline runs, ego-only included
    TimingBreakdown timing;              // summed over every run
    std::int64_t iou_evaluations = 0;    // NMS work summed over every run
};

// Jaccard index of two detection sets after greedy one-to-one matching at
// rotated IoU >= match_iou. Two empty sets score 1.
double detection_jaccard(std::span<const ProposalBox> a, std::span<const ProposalBox> b, double match_iou);

ConsensusResult robosac_consensus(std::span<const FeatureMap> features, int ego_index, const HeadWeights& head,
                                  const AnchorConfig& anchors, const PostProcessConfig& post,
                                  const ConsensusConfig& cfg);

struct DefenseFrame {
    int frame = 0;
    double attacked_latency = 0;     // undefended, median seconds
    double defended_latency = 0;     // defended attacked frame, median seconds
    double defended_benign_latency = 0;
    double amplification = 0;        // defended / undefended attacked latency
    double ap_benign = 0, ap_attacked = 0, ap_defended = 0;
    bool consensus_found = false;
    int invocations = 0;
};

struct DefenseReport {
    ConsensusConfig consensus;
    std::vector<DefenseFrame> frames;
    double mean_amplification = 0;
    double mean_ap_benign = 0, mean_ap_attacked = 0, mean_ap_defended = 0;
};

DefenseReport evaluate_defense(std::span<const FrameInputs> frames, const HeadWeights& head,
                               const AnchorConfig& anchors, const PostProcessConfig& post,
                               const ConsensusConfig& cfg, const TimingConfig& timing);

}  // namespace bevlat
