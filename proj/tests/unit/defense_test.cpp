#include <algorithm>
#include <vector>

#include "doctest.h"

#include "bevlat/defense.hpp"
#include "bevlat/errors.hpp"
#include "bevlat/metrics.hpp"
#include "bevlat/scenario.hpp"
#include "support/test_support.hpp"

using namespace bevlat;
using namespace bevlat::testing;

namespace {

TimingConfig quick_timing() { return {1, 5}; }

}  // namespace

TEST_CASE("detection Jaccard") {
    const std::vector<ProposalBox> none;
    const ProposalBox a = make_box(0, 0, 4, 2, 0, 0.9), b = make_box(10, 0, 4, 2, 0, 0.8),
                      c = make_box(-10, 5, 4, 2, 0, 0.7);
    const std::vector<ProposalBox> ab{a, b}, ac{a, c}, c_only{c};
    CHECK(detection_jaccard(none, none, 0.5) == 1.0);
    CHECK(detection_jaccard(ab, ab, 0.5) == 1.0);
    CHECK(detection_jaccard(ab, none, 0.5) == 0.0);
    CHECK(detection_jaccard(ab, c_only, 0.5) == 0.0);
    CHECK(detection_jaccard(ab, ac, 0.5) == doctest::Approx(1.0 / 3.0));
    CHECK(detection_jaccard(ab, ac, 0.5) == detection_jaccard(ac, ab, 0.5));
}

TEST_CASE("consensus on an ego-only subset runs the pipeline twice") {
    const Scenario s = generate_scenario(42, 2, 3, 20);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const auto features = shared_features(s, 6);
    ConsensusConfig cfg;
    cfg.iterations = 1;
    cfg.subset_size = 0;
    const ConsensusResult r = robosac_consensus(features, 0, head, s.anchors, PostProcessConfig{}, cfg);
    CHECK(r.invocations == 2);
    CHECK(r.consensus_found);
    CHECK(r.accepted_agents == std::vector<int>{0});

    const double single = measure_latency([&] { run_pipeline(features, 0, head, s.anchors, PostProcessConfig{}); },
                                          2, 15).median;
    const double defended = measure_latency([&] {
        robosac_consensus(features, 0, head, s.anchors, PostProcessConfig{}, cfg);
    }, 2, 15).median;
    CHECK(defended / single >= 1.6);
    CHECK(defended / single <= 2.4);

    cfg.subset_size = 2;
    CHECK_THROWS_AS(robosac_consensus(features, 0, head, s.anchors, PostProcessConfig{}, cfg), ValidationError);
}

TEST_CASE("consensus excludes the attacker when an honest subset exists") {
    const Scenario s = generate_scenario(42, 3, 3, 20);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const FrameInputs in = craft_frame(s, head, 8, AttackOptions{});
    ConsensusConfig cfg;
    cfg.iterations = 8;
    const ConsensusResult r = robosac_consensus(in.attacked, in.ego_index, head, s.anchors, PostProcessConfig{}, cfg);
    REQUIRE(r.consensus_found);
    CHECK(std::find(r.accepted_agents.begin(), r.accepted_agents.end(), in.attacker_index) ==
          r.accepted_agents.end());
    const PipelineResult benign = run_pipeline(in.benign, in.ego_index, head, s.anchors, PostProcessConfig{});
    const PipelineResult attacked = run_pipeline(in.attacked, in.ego_index, head, s.anchors, PostProcessConfig{});
    const double ap_benign = average_precision(benign.detections, in.ground_truth);
    CHECK(average_precision(r.detections, in.ground_truth) >= ap_benign - 0.05);
    CHECK(average_precision(attacked.detections, in.ground_truth) < ap_benign);
}

TEST_CASE("consensus cost grows with the number of sampled attacked pipelines") {
    const Scenario s = generate_scenario(42, 2, 3, 20);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const FrameInputs in = craft_frame(s, head, 5, AttackOptions{});
    const double single = measure_latency([&] {
        run_pipeline(in.attacked, 0, head, s.anchors, PostProcessConfig{});
    }, 3, 15).median;
    for (int k : {1, 3}) {
        ConsensusConfig cfg;
        cfg.iterations = k;
        ConsensusResult r;
        const double defended = measure_latency([&] {
            r = robosac_consensus(in.attacked, 0, head, s.anchors, PostProcessConfig{}, cfg);
        }, 3, 15).median;
        CHECK_FALSE(r.consensus_found);
        CHECK(r.invocations == k + 1);
        CHECK(defended / single >= 0.8 * k);
        CHECK(defended / single <= 1.2 * k);
    }
}

TEST_CASE("capping proposals at one removes the NMS comparisons") {
    const Scenario s = generate_scenario(42, 2, 3, 6);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const std::vector<FrameInputs> frames{craft_frame(s, head, 2, AttackOptions{})};
    AblationGrid grid{{0.2}, {0.15}, {1000, 1}};
    const AblationReport report = sweep_postprocess(frames, head, s.anchors, grid, quick_timing());
    REQUIRE(report.points.size() == 2);
    const AblationPoint& full = report.points[0];
    const AblationPoint& capped = report.points[1];
    CHECK(full.post.max_keep == 1000);
    CHECK(capped.post.max_keep == 1);
    CHECK(capped.attacked_iou_evaluations == 0);
    CHECK(capped.attacked_survivors == 1);
    CHECK(capped.roi_latency < 0.25 * full.roi_latency);
    CHECK(full.attacked_iou_evaluations > 1000);

    CHECK_THROWS_AS(sweep_postprocess(frames, head, s.anchors, AblationGrid{{}, {0.1}, {10}}, quick_timing()),
                    ValidationError);
}
