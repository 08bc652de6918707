#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bevlat/pipeline.hpp"

namespace bevlat {

struct LatencyStats {
    std::vector<double> samples;   // seconds
    double mean = 0, median = 0, stddev = 0, rsd_percent = 0, min = 0, max = 0;
};

LatencyStats summarize_latency(std::vector<double> samples);

// Monotonic-clock timing: `warmups` discarded runs, then `reps` recorded ones.
LatencyStats measure_latency(const std::function<void()>& fn, int warmups = 3, int reps = 10);

double roi_latency(double attacked, double benign);
double roi_proposals(double attacked, double benign);

// Fraction of samples strictly above `threshold` seconds.
double attack_success_rate(std::span<const double> latencies, double threshold = 1.5);

// Least-squares slope of log(cost) against log(size).
double fit_complexity_exponent(std::span<const double> sizes, std::span<const double> costs);

// All-points interpolated AP with greedy matching at BEV rotated IoU >= threshold.
double average_precision(std::span<const ProposalBox> detections, std::span<const ProposalBox> ground_truth,
                         double iou_threshold = 0.5);

}  // namespace bevlat
