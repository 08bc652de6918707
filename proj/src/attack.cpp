#include "bevlat/attack.hpp"

#include <algorithm>
#include <cmath>

#include "bevlat/errors.hpp"
#include "bevlat/kernels.hpp"
#include "bevlat/random.hpp"

namespace bevlat {

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_grad(const BoxField& boxes, const BoxField* grad) {
    if (grad && grad->size() != boxes.size()) throw StructuralError("gradient buffer does not match box field");
}

void require_nonempty(const BoxField& boxes) {
    if (boxes.size() == 0) throw ValidationError("loss over an empty box set");
}

struct Interval {
    double overlap;
    // d(overlap)/d(centre, extent) for the first and second box
    double dc1, de1, dc2, de2;
};

Interval overlap_1d(double c1, double e1, double c2, double e2) {
    const double hi1 = c1 + 0.5 * e1, hi2 = c2 + 0.5 * e2;
    const double lo1 = c1 - 0.5 * e1, lo2 = c2 - 0.5 * e2;
    Interval r{std::min(hi1, hi2) - std::max(lo1, lo2), 0, 0, 0, 0};
    if (hi1 <= hi2) { r.dc1 += 1; r.de1 += 0.5; } else { r.dc2 += 1; r.de2 += 0.5; }
    if (lo1 >= lo2) { r.dc1 -= 1; r.de1 += 0.5; } else { r.dc2 -= 1; r.de2 += 0.5; }
    return r;
}

// Axis-aligned IoU of boxes p and q (x extent = length, y extent = width),
// accumulating scale * d(IoU) into grad.
double aligned_iou(const BoxField& b, std::size_t p, std::size_t q, double scale, BoxField* grad) {
    const Interval ix = overlap_1d(b.x[p], b.length[p], b.x[q], b.length[q]);
    if (ix.overlap <= 0) return 0.0;
    const Interval iy = overlap_1d(b.y[p], b.width[p], b.y[q], b.width[q]);
    if (iy.overlap <= 0) return 0.0;
    const double inter = ix.overlap * iy.overlap;
    const double area_p = b.length[p] * b.width[p], area_q = b.length[q] * b.width[q];
    const double uni = area_p + area_q - inter;
    const double iou = inter / uni;
    if (grad) {
        const double d_inter = scale * (uni + inter) / (uni * uni);
        const double d_area = -scale * inter / (uni * uni);
        grad->x[p] += d_inter * iy.overlap * ix.dc1;
        grad->x[q] += d_inter * iy.overlap * ix.dc2;
        grad->y[p] += d_inter * ix.overlap * iy.dc1;
        grad->y[q] += d_inter * ix.overlap * iy.dc2;
        grad->length[p] += d_inter * iy.overlap * ix.de1 + d_area * b.width[p];
        grad->length[q] += d_inter * iy.overlap * ix.de2 + d_area * b.width[q];
        grad->width[p] += d_inter * ix.overlap * iy.de1 + d_area * b.length[p];
        grad->width[q] += d_inter * ix.overlap * iy.de2 + d_area * b.length[q];
    }
    return iou;
}

class LatencyObjective : public AttackObjective {
public:
    explicit LatencyObjective(const AttackConfig& cfg) : cfg_(cfg) {}
    ObjectiveKind kind() const override { return ObjectiveKind::kLatency; }
    double evaluate(const BoxField& boxes, BoxField* grad) const override { return loss_total(boxes, cfg_, grad); }

private:
    AttackConfig cfg_;
};

class PriorArtObjective : public AttackObjective {
public:
    explicit PriorArtObjective(const AttackConfig& cfg) : cfg_(cfg) {}
    ObjectiveKind kind() const override { return ObjectiveKind::kPriorArt; }
    double evaluate(const BoxField& boxes, BoxField* grad) const override {
        return baseline_prior_art_loss(boxes, cfg_.overlap_weight, grad);
    }

private:
    AttackConfig cfg_;
};

class PgdObjective : public AttackObjective {
public:
    PgdObjective(const AttackConfig& cfg, std::vector<double> reference)
        : cfg_(cfg), reference_(std::move(reference)) {}
    ObjectiveKind kind() const override { return ObjectiveKind::kPgd; }
    double evaluate(const BoxField& boxes, BoxField* grad) const override {
        return baseline_pgd_loss(boxes, reference_, grad);
    }
    Tensor3 initial_perturbation(int channels, int rows, int cols) const override {
        Tensor3 d(channels, rows, cols);
        if (!cfg_.pgd_random_start) return d;
        Rng rng(cfg_.seed);
        for (double& v : d.values()) v = rng.uniform(-cfg_.budget, cfg_.budget);
        return d;
    }

private:
    AttackConfig cfg_;
    std::vector<double> reference_;
};

}  // namespace

void AttackConfig::validate() const {
    if (!(budget >= 0.0)) throw ValidationError("perturbation budget must be non-negative");
    if (!(step_size > 0.0)) throw ValidationError("step size must be positive");
    if (steps < 1) throw ValidationError("step count must be at least 1");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
    if (!(sharpness > 0.0)) throw ValidationError("sharpness must be positive");
    if (!(z_min < z_max)) throw ValidationError("vertical range is empty");
    if (!(max_length > 0.0 && max_width > 0.0)) throw ValidationError("shape bounds must be positive");
}

ObjectiveKind parse_objective(const std::string& name) {
    if (name == "none") return ObjectiveKind::kNone;
    if (name == "cp-freezer" || name == "latency") return ObjectiveKind::kLatency;
    if (name == "prior-art") return ObjectiveKind::kPriorArt;
    if (name == "pgd") return ObjectiveKind::kPgd;
    throw ValidationError("unknown attack objective '" + name + "'");
}

std::string objective_name(ObjectiveKind kind) {
    switch (kind) {
        case ObjectiveKind::kNone: return "none";
        case ObjectiveKind::kLatency: return "cp-freezer";
        case ObjectiveKind::kPriorArt: return "prior-art";
        case ObjectiveKind::kPgd: return "pgd";
    }
    return "unknown";
}

BoxField::BoxField(int a, int r, int c) : anchors(a), rows(r), cols(c) {
    const std::size_t n = static_cast<std::size_t>(a) * r * c;
    for (auto* v : {&x, &y, &z, &length, &width, &height, &yaw, &score}) v->assign(n, 0.0);
}

BoxField decode_field(const RawPrediction& raw, const AnchorConfig& anchors) {
    const int n_anchor = raw.scores.channels();
    if (anchors.count() != n_anchor) throw StructuralError("anchor count does not match head output");
    if (raw.deltas.channels() != n_anchor * kRegressionSlots) throw StructuralError("regression channel count mismatch");
    const int rows = raw.scores.rows(), cols = raw.scores.cols();
    BoxField b(n_anchor, rows, cols);
    const double res = anchors.resolution;
    std::size_t k = 0;
    for (int a = 0; a < n_anchor; ++a) {
        const AnchorPrior& p = anchors.priors[a];
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j, ++k) {
                auto d = [&](int slot) { return raw.deltas.at(a * kRegressionSlots + slot, i, j); };
                b.x[k] = (j + 0.5 - 0.5 * cols) * res + d(kDx) * p.length;
                b.y[k] = (i + 0.5 - 0.5 * rows) * res + d(kDy) * p.width;
                b.z[k] = anchors.z_center + d(kDz) * p.height;
                b.length[k] = p.length * std::exp(d(kDl));
                b.width[k] = p.width * std::exp(d(kDw));
                b.height[k] = p.height * std::exp(d(kDh));
                b.yaw[k] = p.yaw + d(kDyaw);
                b.score[k] = raw.scores.at(a, i, j);
            }
    }
    return b;
}

Tensor3 head_output_gradient(const RawPrediction& raw, const BoxField& boxes, const AnchorConfig& anchors,
                             const BoxField& grad) {
    const int n_anchor = boxes.anchors, rows = boxes.rows, cols = boxes.cols;
    check_grad(boxes, &grad);
    Tensor3 g(n_anchor * (1 + kRegressionSlots), rows, cols);
    std::size_t k = 0;
    for (int a = 0; a < n_anchor; ++a) {
        const AnchorPrior& p = anchors.priors[a];
        const int base = n_anchor + a * kRegressionSlots;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j, ++k) {
                const double s = raw.scores.at(a, i, j);
                g.at(a, i, j) = s * (1.0 - s) * grad.score[k];
                g.at(base + kDx, i, j) = p.length * grad.x[k];
                g.at(base + kDy, i, j) = p.width * grad.y[k];
                g.at(base + kDz, i, j) = p.height * grad.z[k];
                g.at(base + kDl, i, j) = boxes.length[k] * grad.length[k];
                g.at(base + kDw, i, j) = boxes.width[k] * grad.width[k];
                g.at(base + kDh, i, j) = boxes.height[k] * grad.height[k];
                g.at(base + kDyaw, i, j) = grad.yaw[k];
            }
    }
    return g;
}

double loss_conf(const BoxField& boxes, double tau, BoxField* grad) {
    require_nonempty(boxes);
    check_grad(boxes, grad);
    const double inv = 1.0 / static_cast<double>(boxes.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
        const double gap = tau - boxes.score[k];
        if (gap > 0) {
            acc += gap;
            if (grad) grad->score[k] -= inv;
        }
    }
    return acc * inv;
}

double loss_shape(const BoxField& boxes, double max_length, double max_width, double sharpness, BoxField* grad) {
    require_nonempty(boxes);
    check_grad(boxes, grad);
    const double inv = 1.0 / static_cast<double>(boxes.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
        const double sl = sigmoid(sharpness * (boxes.length[k] - max_length));
        const double sw = sigmoid(sharpness * (boxes.width[k] - max_width));
        if (sl >= sw) {
            acc += sl;
            if (grad) grad->length[k] += inv * sharpness * sl * (1 - sl);
        } else {
            acc += sw;
            if (grad) grad->width[k] += inv * sharpness * sw * (1 - sw);
        }
    }
    return acc * inv;
}

double loss_vertical(const BoxField& boxes, double z_min, double z_max, double sharpness, BoxField* grad) {
    require_nonempty(boxes);
    check_grad(boxes, grad);
    const double inv = 1.0 / static_cast<double>(boxes.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
        const double below = sigmoid(sharpness * (z_min - boxes.z[k]));
        const double above = sigmoid(sharpness * (boxes.z[k] - z_max));
        if (below >= above) {
            acc += below;
            if (grad) grad->z[k] -= inv * sharpness * below * (1 - below);
        } else {
            acc += above;
            if (grad) grad->z[k] += inv * sharpness * above * (1 - above);
        }
    }
    return acc * inv;
}

double loss_total(const BoxField& boxes, const AttackConfig& cfg, BoxField* grad) {
    check_grad(boxes, grad);
    BoxField scratch;
    BoxField* part = nullptr;
    if (grad) {
        scratch = BoxField(boxes.anchors, boxes.rows, boxes.cols);
        part = &scratch;
    }
    const double conf = loss_conf(boxes, cfg.tau, part);
    if (grad) {
        for (std::size_t k = 0; k < boxes.size(); ++k) grad->score[k] += cfg.lambda_conf * scratch.score[k];
        scratch = BoxField(boxes.anchors, boxes.rows, boxes.cols);
    }
    const double geometry = loss_shape(boxes, cfg.max_length, cfg.max_width, cfg.sharpness, part) +
                            loss_vertical(boxes, cfg.z_min, cfg.z_max, cfg.sharpness, part);
    if (grad)
        for (std::size_t k = 0; k < boxes.size(); ++k) {
            grad->length[k] += cfg.lambda_geometry * scratch.length[k];
            grad->width[k] += cfg.lambda_geometry * scratch.width[k];
            grad->z[k] += cfg.lambda_geometry * scratch.z[k];
        }
    return cfg.lambda_conf * conf + cfg.lambda_geometry * geometry;
}

double shape_violation_fraction(const BoxField& boxes, double max_length, double max_width) {
    require_nonempty(boxes);
    std::size_t n = 0;
    for (std::size_t k = 0; k < boxes.size(); ++k)
        if (boxes.length[k] > max_length || boxes.width[k] > max_width) ++n;
    return static_cast<double>(n) / static_cast<double>(boxes.size());
}

double vertical_violation_fraction(const BoxField& boxes, double z_min, double z_max) {
    require_nonempty(boxes);
    std::size_t n = 0;
    for (std::size_t k = 0; k < boxes.size(); ++k)
        if (boxes.z[k] < z_min || boxes.z[k] > z_max) ++n;
    return static_cast<double>(n) / static_cast<double>(boxes.size());
}

double baseline_pgd_loss(const BoxField& boxes, std::span<const double> reference_scores, BoxField* grad) {
    require_nonempty(boxes);
    check_grad(boxes, grad);
    if (reference_scores.size() != boxes.size()) throw StructuralError("reference scores do not match box field");
    constexpr double eps = 1e-12;
    const double inv = 1.0 / static_cast<double>(boxes.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
        const double s = std::clamp(boxes.score[k], eps, 1.0 - eps);
        const bool positive = reference_scores[k] > 0.5;
        acc += positive ? std::log(s) : std::log(1.0 - s);
        if (grad && s == boxes.score[k]) grad->score[k] += inv * (positive ? 1.0 / s : -1.0 / (1.0 - s));
    }
    return acc * inv;
}

double baseline_prior_art_loss(const BoxField& boxes, double overlap_weight, BoxField* grad) {
    require_nonempty(boxes);
    check_grad(boxes, grad);
    const double inv = 1.0 / static_cast<double>(boxes.size());
    double confidence = 0.0;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
        confidence += boxes.score[k];
        if (grad) grad->score[k] -= inv;
    }
    const int rows = boxes.rows, cols = boxes.cols;
    const std::size_t pairs = static_cast<std::size_t>(boxes.anchors) *
                              (static_cast<std::size_t>(rows) * (cols - 1) + static_cast<std::size_t>(rows - 1) * cols);
    double overlap = 0.0;
    if (pairs > 0 && overlap_weight != 0.0) {
        const double scale = overlap_weight / static_cast<double>(pairs);
        for (int a = 0; a < boxes.anchors; ++a)
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) {
                    const std::size_t k = (static_cast<std::size_t>(a) * rows + i) * cols + j;
                    if (j + 1 < cols) overlap += aligned_iou(boxes, k, k + 1, scale, grad);
                    if (i + 1 < rows) overlap += aligned_iou(boxes, k, k + cols, scale, grad);
                }
        overlap /= static_cast<double>(pairs);
    }
    return -confidence * inv + overlap_weight * overlap;
}

Tensor3 AttackObjective::initial_perturbation(int channels, int rows, int cols) const {
    return Tensor3(channels, rows, cols);
}

std::unique_ptr<AttackObjective> make_objective(ObjectiveKind kind, const AttackConfig& cfg,
                                                std::vector<double> reference_scores) {
    cfg.validate();
    switch (kind) {
        case ObjectiveKind::kLatency: return std::make_unique<LatencyObjective>(cfg);
        case ObjectiveKind::kPriorArt: return std::make_unique<PriorArtObjective>(cfg);
        case ObjectiveKind::kPgd:
            if (reference_scores.empty()) throw ValidationError("the PGD baseline needs reference scores");
            return std::make_unique<PgdObjective>(cfg, std::move(reference_scores));
        case ObjectiveKind::kNone: break;
    }
    throw ValidationError("no optimisation objective for 'none'");
}

double objective_and_gradient(const AttackScene& scene, const Tensor3& delta, const HeadWeights& head,
                              const AnchorConfig& anchors, const AttackObjective& objective, Tensor3* grad,
                              ExecPolicy exec, ForwardState* state) {
    const int n = static_cast<int>(scene.features.size());
    if (scene.attacker_index < 0 || scene.attacker_index >= n) throw ValidationError("attacker index out of range");
    const Tensor3& base = scene.features[scene.attacker_index].data;
    if (!delta.same_shape(base)) throw StructuralError("perturbation shape does not match the attacker feature");

    Tensor3 attacked = base;
    for (std::size_t k = 0; k < attacked.size(); ++k) attacked.data()[k] += delta.data()[k];
    std::vector<const Tensor3*> inputs;
    for (int i = 0; i < n; ++i) inputs.push_back(i == scene.attacker_index ? &attacked : &scene.features[i].data);

    Tensor3 fused, weights, head_out;
    kernels::fuse_forward(exec, inputs, scene.ego_index, fused, grad ? &weights : nullptr);
    kernels::conv_forward(exec, fused, head, head_out);
    RawPrediction raw{Tensor3(head.anchors, fused.rows(), fused.cols()),
                      Tensor3(head.anchors * kRegressionSlots, fused.rows(), fused.cols())};
    for (int a = 0; a < head.anchors; ++a)
        for (std::size_t k = 0; k < fused.plane(); ++k)
            raw.scores.channel(a)[k] = sigmoid(head_out.channel(head.score_channel(a))[k]);
    std::copy_n(head_out.channel(head.anchors), raw.deltas.size(), raw.deltas.data());

    BoxField boxes = decode_field(raw, anchors);
    BoxField box_grad;
    if (grad) box_grad = BoxField(boxes.anchors, boxes.rows, boxes.cols);
    const double loss = objective.evaluate(boxes, grad ? &box_grad : nullptr);
    if (!std::isfinite(loss)) throw NumericalError("objective", "non-finite loss");

    if (grad) {
        const Tensor3 g_out = head_output_gradient(raw, boxes, anchors, box_grad);
        Tensor3 g_fused;
        kernels::conv_backward_input(exec, g_out, head, g_fused);
        *grad = Tensor3(base.channels(), base.rows(), base.cols());
        std::vector<Tensor3*> slots(n, nullptr);
        slots[scene.attacker_index] = grad;
        kernels::fuse_backward(exec, inputs, scene.ego_index, weights, g_fused, slots);
        for (double v : grad->values())
            if (!std::isfinite(v)) throw NumericalError("gradient", "non-finite perturbation gradient");
    }
    if (state) *state = ForwardState{std::move(raw), std::move(boxes)};
    return loss;
}

Perturbation bim_optimize(const AttackScene& scene, const HeadWeights& head, const AnchorConfig& anchors,
                          const AttackObjective& objective, const AttackConfig& cfg, ExecPolicy exec) {
    cfg.validate();
    if (scene.attacker_index < 0 || scene.attacker_index >= static_cast<int>(scene.features.size()))
        throw ValidationError("attacker index out of range");
    const Tensor3& base = scene.features[scene.attacker_index].data;
    Perturbation out;
    out.delta = objective.initial_perturbation(base.channels(), base.rows(), base.cols());
    for (double& v : out.delta.values()) v = std::clamp(v, -cfg.budget, cfg.budget);

    auto record = [&](int step, double loss, const ForwardState& st) {
        std::int64_t count = 0;
        for (double s : st.boxes.score) count += s >= cfg.tau;
        out.trace.push_back({step, loss, count});
    };

    Tensor3 grad;
    ForwardState st;
    for (int step = 0; step < cfg.steps; ++step) {
        const double loss = objective_and_gradient(scene, out.delta, head, anchors, objective, &grad, exec, &st);
        record(step, loss, st);
        for (std::size_t k = 0; k < grad.size(); ++k) {
            const double g = grad.data()[k];
            const double sign = (g > 0) - (g < 0);
            double& d = out.delta.data()[k];
            d = std::clamp(d - cfg.step_size * sign, -cfg.budget, cfg.budget);
        }
    }
    const double loss = objective_and_gradient(scene, out.delta, head, anchors, objective, nullptr, exec, &st);
    record(cfg.steps, loss, st);
    return out;
}

}  // namespace bevlat
