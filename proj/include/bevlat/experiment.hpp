#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bevlat/attack.hpp"
#include "bevlat/pipeline.hpp"
#include "bevlat/scenario.hpp"

namespace bevlat {

struct TimingConfig {
    int warmups = 3;
    int repetitions = 10;
    void validate() const;
};

struct AttackOptions {
    ObjectiveKind objective = ObjectiveKind::kLatency;
    bool warp = true;
    AttackConfig attack;
};

// What every agent shares with the victim at `frame`, already aligned to the
// victim's frame at that time. Entries follow agent order.
std::vector<FeatureMap> shared_features(const Scenario& s, int frame);

// The attacker's view when crafting the perturbation for `frame`: the shared
// features of frame - 1, carried to the victim's current pose when `warp`.
AttackScene stale_scene(const Scenario& s, int frame, bool warp);

// Scores the clean pipeline assigns to every anchor of `scene`.
std::vector<double> clean_scores(const AttackScene& scene, const HeadWeights& head, const AnchorConfig& anchors);

// One victim frame before and after injection.
struct FrameInputs {
    int frame = 0;
    int ego_index = 0;
    int attacker_index = 1;
    std::vector<FeatureMap> benign;
    std::vector<FeatureMap> attacked;
    std::vector<ProposalBox> ground_truth;
    std::vector<StepTrace> trace;      // empty when no attack ran
    double max_abs_delta = 0.0;
};

// Crafts the perturbation for `frame` (>= 1) from the stale scene and injects
// it into the attacker's current message.
FrameInputs craft_frame(const Scenario& s, const HeadWeights& head, int frame, const AttackOptions& options);

std::vector<FrameInputs> craft_all_frames(const Scenario& s, const HeadWeights& head, const AttackOptions& options);

struct FrameRecord {
    int frame = 0;
    std::vector<double> benign_samples, attacked_samples;   // seconds
    double benign_latency = 0, attacked_latency = 0;        // medians
    double benign_rsd = 0, attacked_rsd = 0;
    std::int64_t benign_pre = 0, attacked_pre = 0;
    std::int64_t benign_post = 0, attacked_post = 0;
    std::int64_t benign_iou_evaluations = 0, attacked_iou_evaluations = 0;
    double roi_latency = 0, roi_proposals = 0;
    std::vector<StepTrace> trace;
};

struct RunReport {
    std::string objective;
    bool warp = true;
    std::uint64_t seed = 0;
    int agents = 0, objects = 0, frames = 0;
    AttackConfig attack;
    PostProcessConfig post;
    TimingConfig timing;
    double asr_threshold = 1.5;
    std::vector<FrameRecord> records;

    // Filled by summarize(). RoIs are averaged per frame; the *_of_means
    // variants divide mean attacked by mean benign instead.
    double roi_latency = 0, roi_proposals = 0;
    double roi_latency_of_means = 0, roi_proposals_of_means = 0;
    double mean_benign_latency = 0, mean_attacked_latency = 0;
    double benign_rsd_percent = 0, attacked_rsd_percent = 0;   // across frames
    double asr = 0;
    double median_benign_pre = 0, median_attacked_pre = 0;
    double median_attacked_post = 0;
};

void summarize(RunReport& report);

FrameRecord time_frame(const FrameInputs& inputs, const HeadWeights& head, const AnchorConfig& anchors,
                       const PostProcessConfig& post, const TimingConfig& timing);

struct ExperimentSetup {
    AttackOptions options;
    PostProcessConfig post;
    TimingConfig timing;
    double asr_threshold = 1.5;
};

RunReport run_attack_experiment(const Scenario& s, const ExperimentSetup& setup);

}  // namespace bevlat
