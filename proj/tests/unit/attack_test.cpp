#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"

#include "bevlat/attack.hpp"
#include "bevlat/errors.hpp"
#include "bevlat/experiment.hpp"
#include "bevlat/scenario.hpp"
#include "support/test_support.hpp"

using namespace bevlat;
using namespace bevlat::testing;

namespace {

BoxField field_of(std::vector<double> scores) {
    BoxField b(1, 1, static_cast<int>(scores.size()));
    b.score = std::move(scores);
    for (std::size_t k = 0; k < b.size(); ++k) {
        b.length[k] = 3.9;
        b.width[k] = 1.6;
        b.height[k] = 1.56;
        b.z[k] = 2.0;
        b.x[k] = 10.0 * static_cast<double>(k);
    }
    return b;
}

BoxField random_field(Rng& rng, int anchors, int rows, int cols) {
    BoxField b(anchors, rows, cols);
    for (std::size_t k = 0; k < b.size(); ++k) {
        b.x[k] = rng.uniform(-5, 5);
        b.y[k] = rng.uniform(-5, 5);
        b.z[k] = rng.uniform(0.0, 4.0);
        b.length[k] = rng.uniform(1.0, 7.0);
        b.width[k] = rng.uniform(0.5, 7.0);
        b.height[k] = rng.uniform(1.0, 2.0);
        b.yaw[k] = rng.uniform(-3, 3);
        b.score[k] = rng.uniform(0.0, 1.0);
    }
    return b;
}

using FieldLoss = std::function<double(const BoxField&, BoxField*)>;

// Central differences on every box attribute the loss reads.
void check_box_gradient(const FieldLoss& loss, BoxField boxes, double tolerance = 1e-6) {
    BoxField grad(boxes.anchors, boxes.rows, boxes.cols);
    loss(boxes, &grad);
    const double h = 1e-6;
    auto attrs = [](BoxField& b) {
        return std::vector<std::vector<double>*>{&b.x, &b.y, &b.z, &b.length, &b.width, &b.height, &b.score};
    };
    auto values = attrs(boxes);
    auto grads = attrs(grad);
    for (std::size_t a = 0; a < values.size(); ++a)
        for (std::size_t k = 0; k < boxes.size(); ++k) {
            double& v = (*values[a])[k];
            const double base = v;
            v = base + h;
            const double fp = loss(boxes, nullptr);
            v = base - h;
            const double fm = loss(boxes, nullptr);
            v = base;
            const double numeric = (fp - fm) / (2 * h);
            CHECK(numeric == doctest::Approx((*grads[a])[k]).epsilon(tolerance).scale(1e-3));
        }
}

}  // namespace

TEST_CASE("confidence loss examples") {
    CHECK(loss_conf(field_of({0.2, 0.5, 0.9}), 0.2, nullptr) == 0.0);
    CHECK(loss_conf(field_of({0.0, 0.0, 0.0, 0.0}), 0.2, nullptr) == doctest::Approx(0.2));
    BoxField b = field_of({0.1, 0.3});
    BoxField g(1, 1, 2);
    CHECK(loss_conf(b, 0.2, &g) == doctest::Approx(0.05));
    CHECK(g.score[0] == doctest::Approx(-0.5));
    CHECK(g.score[1] == 0.0);
}

TEST_CASE("confidence loss never increases when a score rises") {
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
        BoxField b = random_field(rng, 1, 3, 3);
        const double before = loss_conf(b, 0.2, nullptr);
        b.score[rng.below(9)] += rng.uniform(0.0, 0.5);
        CHECK(loss_conf(b, 0.2, nullptr) <= before);
    }
}

TEST_CASE("shape and vertical surrogate examples") {
    BoxField small = field_of({0.5, 0.5});
    small.length = {2.0, 1.0};
    small.width = {1.0, 1.5};
    CHECK(loss_shape(small, 5.0, 5.0, 10.0, nullptr) <= 1e-3);

    BoxField edge = field_of({0.5});
    edge.length = {5.0};
    edge.width = {1.0};
    CHECK(loss_shape(edge, 5.0, 5.0, 10.0, nullptr) == doctest::Approx(0.5));

    BoxField mid = field_of({0.5, 0.5, 0.5});
    CHECK(loss_vertical(mid, 1.0, 3.0, 10.0, nullptr) <= 1e-3);
    BoxField top = field_of({0.5});
    top.z = {3.0};
    CHECK(loss_vertical(top, 1.0, 3.0, 10.0, nullptr) == doctest::Approx(0.5));
}

TEST_CASE("total loss combines the terms with the configured weights") {
    const AttackConfig cfg;
    CHECK(cfg.lambda_conf == 0.1);
    CHECK(cfg.lambda_geometry == 1.0);
    CHECK(cfg.tau == 0.2);
    CHECK(cfg.steps == 10);
    CHECK(cfg.step_size == 0.1);
    CHECK(cfg.max_length == 5.0);
    CHECK(cfg.z_min == 1.0);
    CHECK(cfg.z_max == 3.0);
    CHECK(0.1 * 0.05 + 1.0 * (0.2 + 0.1) == doctest::Approx(0.305));

    Rng rng(22);
    const BoxField b = random_field(rng, 2, 3, 4);
    const double expect = cfg.lambda_conf * loss_conf(b, cfg.tau, nullptr) +
                          cfg.lambda_geometry * (loss_shape(b, 5, 5, cfg.sharpness, nullptr) +
                                                 loss_vertical(b, 1, 3, cfg.sharpness, nullptr));
    CHECK(loss_total(b, cfg, nullptr) == doctest::Approx(expect).epsilon(1e-15));

    BoxField zero = field_of({0.5, 0.9});
    zero.length = {1.0, 1.0};
    AttackConfig sharp = cfg;
    sharp.sharpness = 1000.0;
    CHECK(loss_total(zero, sharp, nullptr) == doctest::Approx(0.0).scale(1e-12));
}

TEST_CASE("sharp surrogates approach the exact indicator fractions") {
    Rng rng(23);
    int tested = 0;
    for (int t = 0; t < 200; ++t) {
        BoxField b = random_field(rng, 1, 4, 4);
        bool clear = true;
        for (std::size_t k = 0; k < b.size(); ++k)
            for (double gap : {b.length[k] - 5.0, b.width[k] - 5.0, b.z[k] - 1.0, b.z[k] - 3.0})
                clear = clear && std::abs(gap) >= 0.1;
        if (!clear) continue;
        ++tested;
        CHECK(std::abs(loss_shape(b, 5, 5, 100, nullptr) - shape_violation_fraction(b, 5, 5)) <= 0.01);
        CHECK(std::abs(loss_vertical(b, 1, 3, 100, nullptr) - vertical_violation_fraction(b, 1, 3)) <= 0.01);
    }
    CHECK(tested > 5);
}

TEST_CASE("loss gradients with respect to decoded boxes match finite differences") {
    Rng rng(24);
    const AttackConfig cfg;
    const BoxField b = random_field(rng, 2, 3, 3);
    check_box_gradient([&](const BoxField& x, BoxField* g) { return loss_total(x, cfg, g); }, b);
    std::vector<double> reference(b.size());
    for (double& r : reference) r = rng.uniform();
    check_box_gradient([&](const BoxField& x, BoxField* g) { return baseline_pgd_loss(x, reference, g); }, b);

    BoxField packed = b;
    for (std::size_t k = 0; k < packed.size(); ++k) {
        packed.x[k] = 0.4 * static_cast<double>(k % 3) + rng.uniform(-0.05, 0.05);
        packed.y[k] = 0.4 * static_cast<double>((k / 3) % 3) + rng.uniform(-0.05, 0.05);
        packed.length[k] = rng.uniform(0.6, 1.5);
        packed.width[k] = rng.uniform(0.6, 1.5);
    }
    check_box_gradient([&](const BoxField& x, BoxField* g) { return baseline_prior_art_loss(x, 0.7, g); }, packed);
}

TEST_CASE("PGD baseline is the negative cross-entropy against the reference decisions") {
    const std::vector<double> labels{0.9, 0.1, 0.8};
    const double sat = 1.0 - 1e-9;
    const double matching = baseline_pgd_loss(field_of({sat, 1 - sat, sat}), labels, nullptr);
    const double flipped = baseline_pgd_loss(field_of({1 - sat, sat, 1 - sat}), labels, nullptr);
    CHECK(std::abs(matching) < 1e-8);
    CHECK(flipped < -20.0);

    const BoxField b = field_of({0.3, 0.6, 0.75});
    const double expect = (std::log(0.3) + std::log(1 - 0.6) + std::log(0.75)) / 3.0;
    CHECK(baseline_pgd_loss(b, labels, nullptr) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("prior-art baseline examples") {
    CHECK(baseline_prior_art_loss(field_of({1.0, 1.0, 1.0}), 0.0, nullptr) == doctest::Approx(-1.0));
    CHECK(baseline_prior_art_loss(field_of({0.4}), 1.0, nullptr) == doctest::Approx(-0.4));
    // field_of spaces boxes 10 m apart: disjoint, so only the confidence term remains
    CHECK(baseline_prior_art_loss(field_of({0.2, 0.6}), 1.0, nullptr) == doctest::Approx(-0.4));
    BoxField stacked = field_of({0.2, 0.6});
    stacked.x = {0.0, 0.0};
    CHECK(baseline_prior_art_loss(stacked, 1.0, nullptr) == doctest::Approx(-0.4 + 1.0));
}

TEST_CASE("a zero-weight head gives a zero perturbation gradient") {
    Rng rng(25);
    const AttackScene scene = random_scene(rng, 3, 4, 5, 5);
    HeadWeights head = random_head(rng, 4, 2, 3);
    std::fill(head.weight.begin(), head.weight.end(), 0.0);
    const auto objective = make_objective(ObjectiveKind::kLatency, AttackConfig{});
    Tensor3 grad;
    objective_and_gradient(scene, random_tensor(rng, 4, 5, 5), head, two_anchor_config(), *objective, &grad);
    for (double g : grad.values()) CHECK(g == 0.0);
}

TEST_CASE("single-cell gradient matches the hand-derived chain rule") {
    const double fe = 0.7, fa = -0.4, delta = 0.15;
    const double W[8] = {-2.0, 0.1, 0.2, 0.5, 1.2, -0.3, 0.4, 0.05};
    const double bias[8] = {-1.0, 0.0, 0.0, 0.1, 0.3, 0.2, 0.0, 0.0};
    const AttackConfig cfg;
    AnchorConfig anchors = two_anchor_config();
    anchors.priors.resize(1);

    AttackScene scene;
    scene.features = {feature(Tensor3(1, 1, 1, fe), 0), feature(Tensor3(1, 1, 1, fa), 1)};
    HeadWeights head;
    head.in_channels = 1;
    head.anchors = 1;
    head.kernel = 1;
    head.weight.assign(W, W + 8);
    head.bias.assign(bias, bias + 8);

    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    const double u = fa + delta;
    const double ee = std::exp(fe * fe), ea = std::exp(fe * u);
    const double wa = ea / (ee + ea);
    const double F = (1 - wa) * fe + wa * u;
    const double dF = wa + (u - fe) * wa * (1 - wa) * fe;

    const double s = sig(W[0] * F + bias[0]);
    const double z = anchors.z_center + (W[3] * F + bias[3]) * 1.56;
    const double len = 3.9 * std::exp(W[4] * F + bias[4]);
    const double wid = 1.6 * std::exp(W[5] * F + bias[5]);
    const double beta = cfg.sharpness;
    const double sl = sig(beta * (len - 5)), sw = sig(beta * (wid - 5));
    const double below = sig(beta * (1 - z)), above = sig(beta * (z - 3));
    REQUIRE(s < cfg.tau);

    double dL = cfg.lambda_conf * -s * (1 - s) * W[0];
    dL += sl >= sw ? beta * sl * (1 - sl) * len * W[4] : beta * sw * (1 - sw) * wid * W[5];
    dL += below >= above ? -beta * below * (1 - below) * 1.56 * W[3] : beta * above * (1 - above) * 1.56 * W[3];
    const double expect = dL * dF;

    const auto objective = make_objective(ObjectiveKind::kLatency, cfg);
    Tensor3 grad;
    const double loss =
        objective_and_gradient(scene, Tensor3(1, 1, 1, delta), head, anchors, *objective, &grad);
    const double expect_loss = cfg.lambda_conf * (cfg.tau - s) + std::max(sl, sw) + std::max(below, above);
    CHECK(loss == doctest::Approx(expect_loss).epsilon(1e-12));
    CHECK(grad.at(0, 0, 0) == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("perturbation gradients match finite differences on random instances") {
    Rng rng(26);
    AttackConfig cfg;
    int checked = 0;
    for (int inst = 0; inst < 4; ++inst) {
        const int channels = 3 + inst, size = 4 + inst;
        const AttackScene scene = random_scene(rng, 2 + inst % 2, channels, size, size);
        const HeadWeights head = random_head(rng, channels, 2, inst % 2 ? 3 : 1);
        const Tensor3 delta = random_tensor(rng, channels, size, size, -0.5, 0.5);
        const AnchorConfig anchors = two_anchor_config();

        const auto latency = make_objective(ObjectiveKind::kLatency, cfg);
        const GradientCheck a = check_perturbation_gradient(scene, delta, head, anchors, *latency, &cfg, rng, 30);
        CHECK(a.failures == 0);
        checked += a.checked;

        const auto prior = make_objective(ObjectiveKind::kPriorArt, cfg);
        CHECK(check_perturbation_gradient(scene, delta, head, anchors, *prior, nullptr, rng, 15).failures == 0);

        const std::vector<double> reference = clean_scores(scene, head, anchors);
        const auto pgd = make_objective(ObjectiveKind::kPgd, cfg, reference);
        CHECK(check_perturbation_gradient(scene, delta, head, anchors, *pgd, nullptr, rng, 15).failures == 0);
    }
    CHECK(checked >= 80);
}

TEST_CASE("perturbation gradient on the synthetic benchmark head") {
    const Scenario s = generate_scenario(42, 2, 3, 20);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const AttackScene scene = stale_scene(s, 4, true);
    Rng rng(27);
    const Tensor3 delta = random_tensor(rng, s.grid.channels, s.grid.rows, s.grid.cols, -0.3, 0.3);
    AttackConfig cfg;
    const auto objective = make_objective(ObjectiveKind::kLatency, cfg);
    const GradientCheck c = check_perturbation_gradient(scene, delta, head, s.anchors, *objective, &cfg, rng, 40);
    CHECK(c.failures == 0);
    CHECK(c.checked + c.negligible + c.kinks == 40);
}

TEST_CASE("BIM contract") {
    Rng rng(28);
    const AttackScene scene = random_scene(rng, 2, 3, 5, 5);
    const HeadWeights head = random_head(rng, 3, 2, 3);
    const AnchorConfig anchors = two_anchor_config();

    AttackConfig zero;
    zero.steps = 0;
    CHECK_THROWS_AS(zero.validate(), ValidationError);

    AttackConfig one;
    one.steps = 1;
    const auto objective = make_objective(ObjectiveKind::kLatency, one);
    Tensor3 grad;
    objective_and_gradient(scene, Tensor3(3, 5, 5), head, anchors, *objective, &grad);
    const Perturbation p = bim_optimize(scene, head, anchors, *objective, one);
    REQUIRE(p.trace.size() == 2);
    for (std::size_t k = 0; k < grad.size(); ++k) {
        const double g = grad.data()[k];
        CHECK(p.delta.data()[k] == (g > 0 ? -0.1 : g < 0 ? 0.1 : 0.0));
    }

    AttackConfig tight;
    tight.steps = 6;
    tight.step_size = 0.1;
    tight.budget = 0.25;
    const auto obj_tight = make_objective(ObjectiveKind::kLatency, tight);
    const Perturbation q = bim_optimize(scene, head, anchors, *obj_tight, tight);
    for (double v : q.delta.values()) CHECK(std::abs(v) <= 0.25);
    const Perturbation r = bim_optimize(scene, head, anchors, *obj_tight, tight);
    CHECK(q.delta.values() == r.delta.values());
}

TEST_CASE("BIM proposal count rises on most steps on the benchmark scene") {
    const Scenario s = generate_scenario(42, 2, 3, 20);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const AttackConfig cfg;
    const auto objective = make_objective(ObjectiveKind::kLatency, cfg);
    for (int frame : {3, 10, 17}) {
        const Perturbation p = bim_optimize(stale_scene(s, frame, true), head, s.anchors, *objective, cfg);
        REQUIRE(p.trace.size() == 11);
        int rising = 0;
        for (std::size_t k = 1; k < p.trace.size(); ++k) rising += p.trace[k].proposals >= p.trace[k - 1].proposals;
        CHECK(rising >= 8);
        CHECK(p.trace.back().proposals > 10 * p.trace.front().proposals);
    }
}
