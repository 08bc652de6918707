#include "bevlat/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "bevlat/errors.hpp"
#include "bevlat/metrics.hpp"

namespace bevlat {
namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3"};

std::string num(double v, int precision = 3) {
    std::ostringstream os;
    os << std::setprecision(precision) << std::fixed << v;
    return os.str();
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string label_of(const RunReport& r) { return r.objective + (r.warp ? "" : " (no warp)"); }

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Plot frame with a linear y axis over [0, y_max].
class Chart {
public:
    Chart(std::string title, std::string y_label, double y_max)
        : y_max_(y_max > 0 ? y_max : 1.0) {
        svg_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
             << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
             << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
             << "</text>\n"
             << "<text transform=\"translate(16," << (kTop + plot_h() / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
             << escape(y_label) << "</text>\n";
        for (int k = 0; k <= 5; ++k) {
            const double v = y_max_ * k / 5.0;
            const double y = y_of(v);
            svg_ << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << y << "\" y2=\"" << y
                 << "\" stroke=\"#e0e0e0\"/>\n"
                 << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << num(v, 2)
                 << "</text>\n";
        }
        svg_ << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft << "\" y1=\"" << kTop << "\" y2=\"" << kTop + plot_h()
             << "\" stroke=\"black\"/>\n"
             << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << kTop + plot_h()
             << "\" y2=\"" << kTop + plot_h() << "\" stroke=\"black\"/>\n";
    }

    static double plot_w() { return kWidth - kLeft - kRight; }
    static double plot_h() { return kHeight - kTop - kBottom; }
    double y_of(double v) const { return kTop + plot_h() * (1.0 - v / y_max_); }

    std::ostringstream& body() { return svg_; }
    std::string finish() {
        svg_ << "</svg>\n";
        return svg_.str();
    }

private:
    double y_max_;
    std::ostringstream svg_;
};

}  // namespace

std::string run_report_csv(const RunReport& report) {
    std::ostringstream os;
    os << std::setprecision(9);
    os << "frame,benign_latency_s,attacked_latency_s,benign_rsd_percent,attacked_rsd_percent,benign_pre,"
          "attacked_pre,benign_post,attacked_post,benign_iou_evaluations,attacked_iou_evaluations,roi_latency,"
          "roi_proposals\n";
    for (const FrameRecord& r : report.records)
        os << r.frame << ',' << r.benign_latency << ',' << r.attacked_latency << ',' << r.benign_rsd << ','
           << r.attacked_rsd << ',' << r.benign_pre << ',' << r.attacked_pre << ',' << r.benign_post << ','
           << r.attacked_post << ',' << r.benign_iou_evaluations << ',' << r.attacked_iou_evaluations << ','
           << r.roi_latency << ',' << r.roi_proposals << '\n';
    return os.str();
}

std::string ablation_csv(const AblationReport& report) {
    std::ostringstream os;
    os << std::setprecision(9);
    os << "score_threshold,iou_threshold,max_keep,roi_latency,roi_proposals,benign_latency_s,attacked_latency_s,"
          "benign_pre,attacked_pre,attacked_iou_evaluations,attacked_survivors\n";
    for (const AblationPoint& p : report.points)
        os << p.post.score_threshold << ',' << p.post.iou_threshold << ',' << p.post.max_keep << ','
           << p.roi_latency << ',' << p.roi_proposals << ',' << p.benign_latency << ',' << p.attacked_latency << ','
           << p.benign_pre << ',' << p.attacked_pre << ',' << p.attacked_iou_evaluations << ','
           << p.attacked_survivors << '\n';
    return os.str();
}

std::string defense_csv(const DefenseReport& report) {
    std::ostringstream os;
    os << std::setprecision(9);
    os << "frame,attacked_latency_s,defended_latency_s,defended_benign_latency_s,amplification,ap_benign,"
          "ap_attacked,ap_defended,consensus_found,invocations\n";
    for (const DefenseFrame& d : report.frames)
        os << d.frame << ',' << d.attacked_latency << ',' << d.defended_latency << ',' << d.defended_benign_latency
           << ',' << d.amplification << ',' << d.ap_benign << ',' << d.ap_attacked << ',' << d.ap_defended << ','
           << (d.consensus_found ? 1 : 0) << ',' << d.invocations << '\n';
    return os.str();
}

std::string latency_boxplot_svg(std::span<const RunReport> reports) {
    if (reports.empty()) throw ValidationError("box plot needs at least one report");
    std::vector<std::pair<std::string, std::vector<double>>> boxes;
    std::vector<double> benign;
    for (const FrameRecord& r : reports.front().records) benign.push_back(r.benign_latency * 1e3);
    boxes.emplace_back("benign", benign);
    for (const RunReport& rep : reports) {
        std::vector<double> v;
        for (const FrameRecord& r : rep.records) v.push_back(r.attacked_latency * 1e3);
        boxes.emplace_back(label_of(rep), v);
    }
    double y_max = 0;
    for (const auto& [name, v] : boxes)
        for (double x : v) y_max = std::max(y_max, x);
    Chart chart("Per-frame pipeline latency", "latency (ms)", y_max * 1.1);
    const double slot = Chart::plot_w() / static_cast<double>(boxes.size());
    for (std::size_t b = 0; b < boxes.size(); ++b) {
        const auto& [name, v] = boxes[b];
        if (v.empty()) continue;
        const double cx = kLeft + slot * (static_cast<double>(b) + 0.5);
        const double half = std::min(30.0, slot * 0.3);
        const double q1 = quantile(v, 0.25), q2 = quantile(v, 0.5), q3 = quantile(v, 0.75);
        const double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
        const char* color = kPalette[b % std::size(kPalette)];
        auto& s = chart.body();
        s << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << chart.y_of(lo) << "\" y2=\"" << chart.y_of(hi)
          << "\" stroke=\"black\"/>\n"
          << "<rect x=\"" << cx - half << "\" y=\"" << chart.y_of(q3) << "\" width=\"" << 2 * half << "\" height=\""
          << std::max(1.0, chart.y_of(q1) - chart.y_of(q3)) << "\" fill=\"" << color
          << "\" fill-opacity=\"0.6\" stroke=\"black\"/>\n"
          << "<line x1=\"" << cx - half << "\" x2=\"" << cx + half << "\" y1=\"" << chart.y_of(q2) << "\" y2=\""
          << chart.y_of(q2) << "\" stroke=\"black\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << cx << "\" y=\"" << kTop + Chart::plot_h() + 18 << "\" text-anchor=\"middle\">"
          << escape(name) << "</text>\n";
    }
    return chart.finish();
}

std::vector<double> asr_thresholds(std::span<const RunReport> reports, int count) {
    if (count < 2) throw ValidationError("need at least two thresholds");
    double hi = 0;
    for (const RunReport& rep : reports)
        for (const FrameRecord& r : rep.records) hi = std::max(hi, r.attacked_latency);
    if (!(hi > 0)) hi = 1.0;
    std::vector<double> out;
    for (int k = 0; k < count; ++k) out.push_back(hi * 1.05 * (k + 1) / count);
    return out;
}

std::string asr_curve_svg(std::span<const RunReport> reports, std::span<const double> thresholds) {
    if (reports.empty() || thresholds.empty()) throw ValidationError("ASR curve needs reports and thresholds");
    const double t_max = *std::max_element(thresholds.begin(), thresholds.end());
    Chart chart("Attack success rate vs latency threshold", "ASR", 1.0);
    auto& s = chart.body();
    auto x_of = [&](double t) { return kLeft + Chart::plot_w() * t / t_max; };
    for (int k = 0; k <= 4; ++k) {
        const double t = t_max * k / 4.0;
        s << "<text x=\"" << x_of(t) << "\" y=\"" << kTop + Chart::plot_h() + 18 << "\" text-anchor=\"middle\">"
          << num(t * 1e3, 2) << "</text>\n";
    }
    s << "<text x=\"" << kLeft + Chart::plot_w() / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">threshold (ms)</text>\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::vector<double> lat;
        for (const FrameRecord& r : reports[i].records) lat.push_back(r.attacked_latency);
        if (lat.empty()) continue;
        const char* color = kPalette[i % std::size(kPalette)];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (double t : thresholds) s << x_of(t) << ',' << chart.y_of(attack_success_rate(lat, t)) << ' ';
        s << "\"/>\n"
          << "<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << kTop + 16 * (i + 1)
          << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(label_of(reports[i])) << "</text>\n";
    }
    return chart.finish();
}

std::string ablation_heatmap_svg(const AblationReport& report) {
    if (report.points.empty()) throw ValidationError("heatmap needs at least one grid point");
    std::set<double> scores, ious;
    std::set<int> keeps;
    double v_max = 0;
    for (const AblationPoint& p : report.points) {
        scores.insert(p.post.score_threshold);
        ious.insert(p.post.iou_threshold);
        keeps.insert(p.post.max_keep);
        v_max = std::max(v_max, p.roi_latency);
    }
    const double cell_w = 90, cell_h = 34, panel_gap = 50;
    const double panel_h = cell_h * static_cast<double>(keeps.size()) + panel_gap;
    const double width = 120 + cell_w * static_cast<double>(ious.size()) + 20;
    const double height = 40 + panel_h * static_cast<double>(scores.size());
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">RoI-L by IoU threshold "
         "and max_keep</text>\n";
    double top = 40;
    for (double score : scores) {
        s << "<text x=\"10\" y=\"" << top + 12 << "\">confidence " << num(score, 2) << "</text>\n";
        double y = top + 20;
        int col = 0;
        for (double iou : ious) {
            s << "<text x=\"" << 120 + cell_w * (col + 0.5) << "\" y=\"" << y - 4 << "\" text-anchor=\"middle\">IoU "
              << num(iou, 2) << "</text>\n";
            ++col;
        }
        for (auto it = keeps.rbegin(); it != keeps.rend(); ++it) {
            s << "<text x=\"110\" y=\"" << y + cell_h / 2 + 4 << "\" text-anchor=\"end\">keep " << *it << "</text>\n";
            col = 0;
            for (double iou : ious) {
                const auto hit = std::find_if(report.points.begin(), report.points.end(), [&](const AblationPoint& p) {
                    return p.post.score_threshold == score && p.post.iou_threshold == iou && p.post.max_keep == *it;
                });
                if (hit != report.points.end()) {
                    const double f = v_max > 0 ? std::clamp(hit->roi_latency / v_max, 0.0, 1.0) : 0.0;
                    const int shade = static_cast<int>(std::lround(255 * (1.0 - 0.8 * f)));
                    s << "<rect x=\"" << 120 + cell_w * col << "\" y=\"" << y << "\" width=\"" << cell_w
                      << "\" height=\"" << cell_h << "\" fill=\"rgb(255," << shade << ',' << shade
                      << ")\" stroke=\"white\"/>\n"
                      << "<text x=\"" << 120 + cell_w * (col + 0.5) << "\" y=\"" << y + cell_h / 2 + 4
                      << "\" text-anchor=\"middle\">" << num(hit->roi_latency, 2) << "</text>\n";
                }
                ++col;
            }
            y += cell_h;
        }
        top += panel_h;
    }
    s << "</svg>\n";
    return s.str();
}

std::string summary_table(std::span<const RunReport> reports) {
    std::ostringstream os;
    os << std::left << std::setw(24) << "objective" << std::right << std::setw(12) << "RoI-L" << std::setw(12)
       << "RoI-P" << std::setw(14) << "med pre-NMS" << std::setw(14) << "med post-NMS" << std::setw(14)
       << "mean T (ms)" << std::setw(10) << "ASR" << std::setw(10) << "%RSD" << '\n';
    for (const RunReport& r : reports)
        os << std::left << std::setw(24) << label_of(r) << std::right << std::setw(12) << num(r.roi_latency, 2)
           << std::setw(12) << num(r.roi_proposals, 2) << std::setw(14) << num(r.median_attacked_pre, 1)
           << std::setw(14) << num(r.median_attacked_post, 1) << std::setw(14)
           << num(r.mean_attacked_latency * 1e3, 3) << std::setw(10) << num(r.asr, 2) << std::setw(10)
           << num(r.attacked_rsd_percent, 1) << '\n';
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw ValidationError("failed writing " + path.string());
}

}  // namespace bevlat
