#include "bevlat/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "bevlat/errors.hpp"

namespace bevlat {

LatencyStats summarize_latency(std::vector<double> samples) {
    if (samples.empty()) throw ValidationError("latency summary needs at least one sample");
    LatencyStats st;
    st.samples = samples;
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    st.min = samples.front();
    st.max = samples.back();
    st.median = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    st.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : samples) ss += (v - st.mean) * (v - st.mean);
    st.stddev = std::sqrt(ss / static_cast<double>(n));
    st.rsd_percent = st.mean > 0 ? 100.0 * st.stddev / st.mean : 0.0;
    return st;
}

LatencyStats measure_latency(const std::function<void()>& fn, int warmups, int reps) {
    if (warmups < 0) throw ValidationError("warmup count must be non-negative");
    if (reps < 1) throw ValidationError("at least one timed repetition is required");
    using Clock = std::chrono::steady_clock;
    for (int i = 0; i < warmups; ++i) fn();
    std::vector<double> samples;
    samples.reserve(reps);
    for (int i = 0; i < reps; ++i) {
        const auto t0 = Clock::now();
        fn();
        samples.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    }
    return summarize_latency(std::move(samples));
}

double roi_latency(double attacked, double benign) {
    if (!(benign > 0.0)) throw ValidationError("benign latency must be positive");
    return (attacked - benign) / benign;
}

double roi_proposals(double attacked, double benign) {
    if (!(benign > 0.0)) throw ValidationError("benign proposal count must be positive");
    return (attacked - benign) / benign;
}

double attack_success_rate(std::span<const double> latencies, double threshold) {
    if (latencies.empty()) throw ValidationError("attack success rate over an empty sample");
    if (!(threshold > 0.0)) throw ValidationError("latency threshold must be positive");
    const auto hits = std::count_if(latencies.begin(), latencies.end(), [&](double t) { return t > threshold; });
    return static_cast<double>(hits) / static_cast<double>(latencies.size());
}

double fit_complexity_exponent(std::span<const double> sizes, std::span<const double> costs) {
    if (sizes.size() != costs.size()) throw StructuralError("sizes and costs differ in length");
    if (sizes.size() < 3) throw ValidationError("complexity fit needs at least three sizes");
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (!(sizes[k] > 0.0) || !(costs[k] > 0.0)) throw ValidationError("sizes and costs must be positive");
        if (k > 0 && !(sizes[k] > sizes[k - 1])) throw ValidationError("sizes must be strictly increasing");
    }
    const double n = static_cast<double>(sizes.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const double x = std::log(sizes[k]), y = std::log(costs[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double average_precision(std::span<const ProposalBox> detections, std::span<const ProposalBox> ground_truth,
                         double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw ValidationError("IoU threshold must lie in (0, 1]");
    if (ground_truth.empty()) return detections.empty() ? 1.0 : 0.0;
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (detections[a].score != detections[b].score) return detections[a].score > detections[b].score;
        return detections[a].source_index < detections[b].source_index;
    });
    std::vector<char> matched(ground_truth.size(), 0);
    std::vector<double> precision, recall;
    double tp = 0, fp = 0;
    for (std::size_t idx : order) {
        double best = iou_threshold;
        std::ptrdiff_t hit = -1;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (matched[g]) continue;
            const double iou = rotated_iou(detections[idx], ground_truth[g]);
            if (iou >= best) {
                best = iou;
                hit = static_cast<std::ptrdiff_t>(g);
            }
        }
        if (hit >= 0) {
            matched[hit] = 1;
            tp += 1;
        } else {
            fp += 1;
        }
        precision.push_back(tp / (tp + fp));
        recall.push_back(tp / static_cast<double>(ground_truth.size()));
    }
    for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
    double ap = 0.0, prev_recall = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
        ap += (recall[k] - prev_recall) * precision[k];
        prev_recall = recall[k];
    }
    return ap;
}

}  // namespace bevlat
