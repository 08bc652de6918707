#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bevlat/defense.hpp"
#include "bevlat/experiment.hpp"

namespace bevlat {

// One row per frame.
std::string run_report_csv(const RunReport& report);
// One row per grid point.
std::string ablation_csv(const AblationReport& report);
// One row per frame.
std::string defense_csv(const DefenseReport& report);

// Box plot of per-frame median latencies: a benign box for the first report,
// then one attacked box per report. Milliseconds on the y axis.
std::string latency_boxplot_svg(std::span<const RunReport> reports);

// Attack success rate of every report over `thresholds` (seconds).
std::string asr_curve_svg(std::span<const RunReport> reports, std::span<const double> thresholds);

// Evenly spaced thresholds from zero up to the largest attacked latency.
std::vector<double> asr_thresholds(std::span<const RunReport> reports, int count = 40);

// RoI-L heatmap over IoU threshold (columns) and max_keep (rows), one panel
// per confidence threshold.
std::string ablation_heatmap_svg(const AblationReport& report);

// Plain-text table of the headline numbers of each report.
std::string summary_table(std::span<const RunReport> reports);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace bevlat
