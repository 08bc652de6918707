#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bevlat/geometry.hpp"
#include "bevlat/tensor.hpp"

namespace bevlat {

struct FeatureMap {
    int agent_id = 0;
    int timestamp = 0;
    PoseSE2 pose;          // pose of the frame the grid is expressed in
    double resolution = 0.4;
    Tensor3 data;
};

struct AnchorPrior {
    double length = 3.9;
    double width = 1.6;
    double height = 1.56;
    double yaw = 0.0;
};

struct AnchorConfig {
    std::vector<AnchorPrior> priors;
    double z_center = 1.8;
    double resolution = 0.4;

    int count() const { return static_cast<int>(priors.size()); }
};

// Regression channel order within one anchor's block of seven outputs.
enum RegressionSlot : int { kDx = 0, kDy, kDz, kDl, kDw, kDh, kDyaw, kRegressionSlots };

// Convolutional detection head. Output channel layout: the first `anchors`
// channels are score logits, followed by seven regression channels per anchor.
struct HeadWeights {
    int in_channels = 0;
    int anchors = 0;
    int kernel = 1;                  // odd, "same" zero padding
    std::vector<double> weight;      // [out][in][kernel][kernel]
    std::vector<double> bias;        // [out]

    int out_channels() const { return anchors * (1 + kRegressionSlots); }
    int score_channel(int a) const { return a; }
    int regression_channel(int a, int slot) const { return anchors + a * kRegressionSlots + slot; }
    double& w(int o, int c, int ky, int kx) {
        return weight[((static_cast<std::size_t>(o) * in_channels + c) * kernel + ky) * kernel + kx];
    }
    double w(int o, int c, int ky, int kx) const {
        return weight[((static_cast<std::size_t>(o) * in_channels + c) * kernel + ky) * kernel + kx];
    }
    void validate() const;
};

struct RawPrediction {
    Tensor3 scores;   // [anchors][H][W], probabilities
    Tensor3 deltas;   // [anchors * 7][H][W]
};

struct ProposalBox {
    double x = 0, y = 0, z = 0;
    double length = 0, width = 0, height = 0;
    double yaw = 0;
    double score = 0;
    int anchor = 0, row = 0, col = 0;
    std::int64_t source_index = 0;  // (anchor * H + row) * W + col
};

struct PostProcessConfig {
    double score_threshold = 0.2;
    double iou_threshold = 0.15;
    int max_keep = 1000;
    void validate() const;
};

struct NmsStats {
    std::int64_t input_count = 0;
    std::int64_t iou_evaluations = 0;
    std::int64_t iterations = 0;
    std::int64_t survivors = 0;
    double wall_time = 0.0;
};

struct TimingBreakdown {
    double fuse = 0, head = 0, decode = 0, filter = 0, nms = 0, total = 0;
};

struct PipelineResult {
    std::vector<ProposalBox> detections;
    std::int64_t pre_nms_count = 0;
    NmsStats nms;
    TimingBreakdown timing;
};

enum class Backend { kReference, kFast };

struct ExecPolicy {
    Backend backend = Backend::kFast;
    int threads = 1;   // 0 means the OpenMP default
};

FeatureMap fuse_attention(std::span<const FeatureMap> features, int ego_index,
                          ExecPolicy exec = {});
RawPrediction apply_inference_head(const Tensor3& fused, const HeadWeights& head,
                                   ExecPolicy exec = {});
std::vector<ProposalBox> decode_proposals(const RawPrediction& raw, const AnchorConfig& anchors);
// Decodes only cells whose score is at least min_score; source indices are unchanged.
std::vector<ProposalBox> decode_proposals(const RawPrediction& raw, const AnchorConfig& anchors,
                                          double min_score);
std::vector<ProposalBox> confidence_filter(std::vector<ProposalBox> boxes, double threshold,
                                           int max_keep);

std::array<std::array<double, 2>, 4> box_corners(const ProposalBox& b);
double rotated_iou(const ProposalBox& a, const ProposalBox& b);
std::vector<ProposalBox> nms(std::span<const ProposalBox> sorted, double iou_threshold,
                             NmsStats* stats = nullptr);

// Full victim-side chain on already-aligned features. Single-threaded by design.
PipelineResult run_pipeline(std::span<const FeatureMap> features, int ego_index,
                            const HeadWeights& head, const AnchorConfig& anchors,
                            const PostProcessConfig& post);

}  // namespace bevlat
