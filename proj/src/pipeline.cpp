#include "bevlat/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "bevlat/errors.hpp"
#include "bevlat/kernels.hpp"

namespace bevlat {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct Point {
    double x, y;
};

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double polygon_area(const Point* p, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const Point& a = p[i];
        const Point& b = p[(i + 1) % n];
        acc += a.x * b.y - a.y * b.x;
    }
    return 0.5 * acc;
}

// Clips the convex polygon `poly` against the half-plane left of a->b.
int clip_half_plane(const Point* poly, int n, const Point& a, const Point& b, Point* out) {
    int m = 0;
    for (int i = 0; i < n; ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % n];
        const double sp = cross(a, b, p);
        const double sq = cross(a, b, q);
        if (sp >= 0) out[m++] = p;
        if ((sp >= 0) != (sq >= 0)) {
            const double t = sp / (sp - sq);
            out[m++] = {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
        }
    }
    return m;
}

}  // namespace

void HeadWeights::validate() const {
    if (in_channels <= 0 || anchors <= 0) throw StructuralError("head needs positive channel and anchor counts");
    if (kernel <= 0 || kernel % 2 == 0) throw StructuralError("head kernel must be odd");
    const std::size_t expect = static_cast<std::size_t>(out_channels()) * in_channels * kernel * kernel;
    if (weight.size() != expect) throw StructuralError("head weight tensor has wrong size");
    if (bias.size() != static_cast<std::size_t>(out_channels())) throw StructuralError("head bias has wrong size");
}

void PostProcessConfig::validate() const {
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
        throw ValidationError("score threshold must lie in [0, 1]");
    if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0))
        throw ValidationError("IoU threshold must lie in [0, 1]");
    if (max_keep < 1) throw ValidationError("max_keep must be positive");
}

FeatureMap fuse_attention(std::span<const FeatureMap> features, int ego_index, ExecPolicy exec) {
    if (features.empty()) throw StructuralError("fusion needs at least one feature map");
    if (ego_index < 0 || ego_index >= static_cast<int>(features.size()))
        throw ValidationError("ego index out of range");
    std::vector<const Tensor3*> inputs;
    inputs.reserve(features.size());
    for (const FeatureMap& f : features) {
        for (double v : f.data.values())
            if (!std::isfinite(v)) throw ValidationError("non-finite value in feature map of agent " + std::to_string(f.agent_id));
        inputs.push_back(&f.data);
    }
    const FeatureMap& ego = features[ego_index];
    FeatureMap fused{ego.agent_id, ego.timestamp, ego.pose, ego.resolution, {}};
    kernels::fuse_forward(exec, inputs, ego_index, fused.data, nullptr);
    return fused;
}

RawPrediction apply_inference_head(const Tensor3& fused, const HeadWeights& head, ExecPolicy exec) {
    Tensor3 out;
    kernels::conv_forward(exec, fused, head, out);
    RawPrediction raw{Tensor3(head.anchors, fused.rows(), fused.cols()), Tensor3()};
    const std::size_t plane = fused.plane();
    for (int a = 0; a < head.anchors; ++a) {
        const double* src = out.channel(head.score_channel(a));
        double* dst = raw.scores.channel(a);
        for (std::size_t k = 0; k < plane; ++k) {
            if (!std::isfinite(src[k])) throw NumericalError("head", "non-finite score logit");
            dst[k] = sigmoid(src[k]);
        }
    }
    out.drop_leading_channels(head.anchors);
    raw.deltas = std::move(out);
    return raw;
}

std::vector<ProposalBox> decode_proposals(const RawPrediction& raw, const AnchorConfig& anchors, double min_score) {
    const int n_anchor = raw.scores.channels();
    if (anchors.count() != n_anchor) throw StructuralError("anchor count does not match head output");
    if (raw.deltas.channels() != n_anchor * kRegressionSlots) throw StructuralError("regression channel count mismatch");
    const int rows = raw.scores.rows(), cols = raw.scores.cols();
    const double res = anchors.resolution;
    std::vector<ProposalBox> out;
    if (!(min_score > 0.0)) out.reserve(static_cast<std::size_t>(n_anchor) * rows * cols);
    std::size_t k = 0;
    for (int a = 0; a < n_anchor; ++a) {
        const AnchorPrior& p = anchors.priors[a];
        const double* d[kRegressionSlots];
        for (int s = 0; s < kRegressionSlots; ++s) d[s] = raw.deltas.channel(a * kRegressionSlots + s);
        const double* sc = raw.scores.channel(a);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j, ++k) {
                const std::size_t c = static_cast<std::size_t>(i) * cols + j;
                if (!(sc[c] >= min_score)) continue;
                ProposalBox& b = out.emplace_back();
                b.x = (j + 0.5 - 0.5 * cols) * res + d[kDx][c] * p.length;
                b.y = (i + 0.5 - 0.5 * rows) * res + d[kDy][c] * p.width;
                b.z = anchors.z_center + d[kDz][c] * p.height;
                b.length = p.length * std::exp(d[kDl][c]);
                b.width = p.width * std::exp(d[kDw][c]);
                b.height = p.height * std::exp(d[kDh][c]);
                b.yaw = p.yaw + d[kDyaw][c];
                b.score = sc[c];
                b.anchor = a;
                b.row = i;
                b.col = j;
                b.source_index = static_cast<std::int64_t>(k);
                if (!std::isfinite(b.x + b.y + b.z + b.length + b.width + b.height + b.yaw))
                    throw NumericalError("decode", "non-finite box at source index " + std::to_string(k));
            }
    }
    return out;
}

std::vector<ProposalBox> decode_proposals(const RawPrediction& raw, const AnchorConfig& anchors) {
    return decode_proposals(raw, anchors, -std::numeric_limits<double>::infinity());
}

std::vector<ProposalBox> confidence_filter(std::vector<ProposalBox> boxes, double threshold, int max_keep) {
    if (max_keep < 1) throw ValidationError("max_keep must be positive");
    std::erase_if(boxes, [threshold](const ProposalBox& b) { return !(b.score >= threshold); });
    auto order = [](const ProposalBox& a, const ProposalBox& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.source_index < b.source_index;
    };
    if (static_cast<int>(boxes.size()) > max_keep) {
        std::partial_sort(boxes.begin(), boxes.begin() + max_keep, boxes.end(), order);
        boxes.resize(max_keep);
    } else {
        std::sort(boxes.begin(), boxes.end(), order);
    }
    return boxes;
}

std::array<std::array<double, 2>, 4> box_corners(const ProposalBox& b) {
    const double c = std::cos(b.yaw), s = std::sin(b.yaw);
    const double hl = 0.5 * b.length, hw = 0.5 * b.width;
    const double lx[4] = {-hl, hl, hl, -hl};
    const double ly[4] = {-hw, -hw, hw, hw};
    std::array<std::array<double, 2>, 4> out{};
    for (int k = 0; k < 4; ++k) out[k] = {b.x + c * lx[k] - s * ly[k], b.y + s * lx[k] + c * ly[k]};
    return out;
}

double rotated_iou(const ProposalBox& a, const ProposalBox& b) {
    const double area_a = a.length * a.width;
    const double area_b = b.length * b.width;
    if (!(area_a > 0.0) || !(area_b > 0.0)) return 0.0;
    const auto ca = box_corners(a);
    const auto cb = box_corners(b);
    Point buf_a[16], buf_b[16];
    int n = 4;
    for (int k = 0; k < 4; ++k) buf_a[k] = {ca[k][0], ca[k][1]};
    Point* cur = buf_a;
    Point* nxt = buf_b;
    for (int e = 0; e < 4 && n > 0; ++e) {
        const Point p{cb[e][0], cb[e][1]};
        const Point q{cb[(e + 1) % 4][0], cb[(e + 1) % 4][1]};
        n = clip_half_plane(cur, n, p, q, nxt);
        std::swap(cur, nxt);
    }
    if (n < 3) return 0.0;
    const double inter = std::abs(polygon_area(cur, n));
    const double uni = area_a + area_b - inter;
    if (!(uni > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<ProposalBox> nms(std::span<const ProposalBox> sorted, double iou_threshold, NmsStats* stats) {
    if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0))
        throw ValidationError("IoU threshold must lie in [0, 1]");
    for (std::size_t k = 1; k < sorted.size(); ++k)
        if (sorted[k].score > sorted[k - 1].score)
            throw ValidationError("nms input must be sorted by descending score");
    const auto t0 = Clock::now();
    const std::size_t m = sorted.size();
    std::vector<char> suppressed(m, 0);
    std::vector<ProposalBox> keep;
    std::int64_t evaluations = 0, iterations = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (suppressed[i]) continue;
        ++iterations;
        keep.push_back(sorted[i]);
        for (std::size_t j = i + 1; j < m; ++j) {
            if (suppressed[j]) continue;
            ++evaluations;
            if (rotated_iou(sorted[i], sorted[j]) > iou_threshold) suppressed[j] = 1;
        }
    }
    if (stats) {
        stats->input_count = static_cast<std::int64_t>(m);
        stats->iou_evaluations = evaluations;
        stats->iterations = iterations;
        stats->survivors = static_cast<std::int64_t>(keep.size());
        stats->wall_time = seconds_since(t0);
    }
    return keep;
}

PipelineResult run_pipeline(std::span<const FeatureMap> features, int ego_index, const HeadWeights& head,
                            const AnchorConfig& anchors, const PostProcessConfig& post) {
    post.validate();
    const ExecPolicy serial{Backend::kFast, 1};
    PipelineResult result;
    const auto t_start = Clock::now();

    auto t0 = Clock::now();
    FeatureMap fused = fuse_attention(features, ego_index, serial);
    result.timing.fuse = seconds_since(t0);

    t0 = Clock::now();
    RawPrediction raw = apply_inference_head(fused.data, head, serial);
    result.timing.head = seconds_since(t0);

    t0 = Clock::now();
    std::vector<ProposalBox> boxes = decode_proposals(raw, anchors, post.score_threshold);
    result.timing.decode = seconds_since(t0);

    t0 = Clock::now();
    boxes = confidence_filter(std::move(boxes), post.score_threshold, post.max_keep);
    result.pre_nms_count = static_cast<std::int64_t>(boxes.size());
    result.timing.filter = seconds_since(t0);

    t0 = Clock::now();
    result.detections = nms(boxes, post.iou_threshold, &result.nms);
    result.timing.nms = seconds_since(t0);

    result.timing.total = seconds_since(t_start);
    return result;
}

}  // namespace bevlat
