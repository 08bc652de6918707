#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bevlat/pipeline.hpp"

namespace bevlat {

struct AttackConfig {
    double tau = 0.2;              // hinge target for confidence
    double lambda_conf = 0.1;
    double lambda_geometry = 1.0;  // weight on shape + vertical terms
    int steps = 10;
    double step_size = 0.1;
    double budget = 1.0;           // L-infinity bound on the perturbation
    double max_length = 5.0;
    double max_width = 5.0;
    double z_min = 1.0;
    double z_max = 3.0;
    double sharpness = 10.0;       // slope of the sigmoid indicator surrogates
    double overlap_weight = 0.1;   // pairwise-overlap term of the prior-art objective
    bool pgd_random_start = true;  // uniform start in [-budget, budget] for the PGD baseline
    std::uint64_t seed = 0;        // seed of that random start

    void validate() const;
};

enum class ObjectiveKind { kNone, kLatency, kPriorArt, kPgd };

ObjectiveKind parse_objective(const std::string& name);
std::string objective_name(ObjectiveKind kind);

// Every box of a raw prediction in structure-of-arrays form, indexed by the
// source index (anchor * H + row) * W + col. Doubles as a gradient buffer.
struct BoxField {
    int anchors = 0, rows = 0, cols = 0;
    std::vector<double> x, y, z, length, width, height, yaw, score;

    BoxField() = default;
    BoxField(int a, int r, int c);
    std::size_t size() const { return score.size(); }
};

BoxField decode_field(const RawPrediction& raw, const AnchorConfig& anchors);

// Gradient with respect to the head's raw outputs (score logits and
// regression deltas, in head channel order) given a gradient on decoded boxes.
Tensor3 head_output_gradient(const RawPrediction& raw, const BoxField& boxes, const AnchorConfig& anchors,
                             const BoxField& grad);

// Loss terms. Each returns the value and, when `grad` is non-null, adds its
// gradient with respect to the decoded boxes into `grad`.
double loss_conf(const BoxField& boxes, double tau, BoxField* grad);
double loss_shape(const BoxField& boxes, double max_length, double max_width, double sharpness, BoxField* grad);
double loss_vertical(const BoxField& boxes, double z_min, double z_max, double sharpness, BoxField* grad);
double loss_total(const BoxField& boxes, const AttackConfig& cfg, BoxField* grad);

// Exact (non-smooth) counterparts of the geometry surrogates, as fractions of boxes.
double shape_violation_fraction(const BoxField& boxes, double max_length, double max_width);
double vertical_violation_fraction(const BoxField& boxes, double z_min, double z_max);

// Negative mean binary cross-entropy against hard labels (score > 0.5).
double baseline_pgd_loss(const BoxField& boxes, std::span<const double> reference_scores, BoxField* grad);

// -mean(score) plus the mean axis-aligned IoU over grid-adjacent same-anchor pairs.
double baseline_prior_art_loss(const BoxField& boxes, double overlap_weight, BoxField* grad);

class AttackObjective {
public:
    virtual ~AttackObjective() = default;
    virtual ObjectiveKind kind() const = 0;
    virtual double evaluate(const BoxField& boxes, BoxField* grad) const = 0;
    virtual Tensor3 initial_perturbation(int channels, int rows, int cols) const;
};

// `reference_scores` are the victim-side scores the PGD baseline tries to flip.
std::unique_ptr<AttackObjective> make_objective(ObjectiveKind kind, const AttackConfig& cfg,
                                                std::vector<double> reference_scores = {});

// Feature maps aligned in the victim frame; the perturbation is added to the
// attacker's entry before fusion.
struct AttackScene {
    std::vector<FeatureMap> features;
    int ego_index = 0;
    int attacker_index = 1;
};

struct ForwardState {
    RawPrediction raw;
    BoxField boxes;
};

// Loss of `objective` at perturbation `delta`; writes d(loss)/d(delta) into
// `grad` when non-null.
double objective_and_gradient(const AttackScene& scene, const Tensor3& delta, const HeadWeights& head,
                              const AnchorConfig& anchors, const AttackObjective& objective, Tensor3* grad,
                              ExecPolicy exec = {Backend::kFast, 0}, ForwardState* state = nullptr);

struct StepTrace {
    int step = 0;
    double loss = 0;
    std::int64_t proposals = 0;   // scores >= tau
};

struct Perturbation {
    Tensor3 delta;
    std::vector<StepTrace> trace;
};

Perturbation bim_optimize(const AttackScene& scene, const HeadWeights& head, const AnchorConfig& anchors,
                          const AttackObjective& objective, const AttackConfig& cfg,
                          ExecPolicy exec = {Backend::kFast, 0});

}  // namespace bevlat
