#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "bevlat/errors.hpp"
#include "bevlat/experiment.hpp"
#include "bevlat/json_io.hpp"
#include "bevlat/metrics.hpp"
#include "bevlat/scenario.hpp"
#include "bevlat/warp.hpp"

using namespace bevlat;

namespace {

// An otherwise empty scene with one parked car at local offset (dx, dy) from
// the victim at frame 0.
Scenario lone_object_scene(double dx = 0.0, double dy = 0.0) {
    Scenario s = generate_scenario(5, 2, 0, 2);
    const PoseSE2& v = s.pose(0, 0);
    ObjectTrack o;
    o.length = 4.2;
    o.width = 1.8;
    o.height = 1.6;
    const auto w = local_to_world(v, dx, dy);
    o.x = w[0];
    o.y = w[1];
    o.z = s.model.road_z + 0.5 * o.height;
    o.yaw = v.yaw;
    s.objects.push_back(o);
    return s;
}

std::vector<FeatureMap> victim_inputs(const Scenario& s, int frame) { return shared_features(s, frame); }

bool object_channels_zero(const Tensor3& t) {
    for (int c : {kHeat, kOrientation, kLengthCode, kWidthCode, kHeightCode, kElevationCode, kYawCode})
        for (std::size_t k = 0; k < t.plane(); ++k)
            if (t.channel(c)[k] != 0.0) return false;
    return true;
}

}  // namespace

TEST_CASE("scenario generation is deterministic and validated") {
    CHECK(Json(generate_scenario(9, 3, 4, 6)) == Json(generate_scenario(9, 3, 4, 6)));
    CHECK(Json(generate_scenario(9, 3, 4, 6)) != Json(generate_scenario(10, 3, 4, 6)));
    CHECK(generate_scenario(9, 2, 0, 5).objects.empty());
    CHECK_THROWS_AS(generate_scenario(1, 1, 3, 5), ValidationError);

    CHECK_THROWS_AS(generate_scenario(42, 4, 40, 8), ValidationError);
    const Scenario s = generate_scenario(42, 4, 4, 8);
    int attackers = 0;
    for (const AgentTrack& a : s.agents) {
        attackers += a.role == "attacker";
        CHECK(a.poses.size() == 8);
    }
    CHECK(attackers == 1);
    CHECK(s.victim == 0);
    CHECK(s.attacker == 1);
    for (const ObjectTrack& o : s.objects)
        for (double d : {o.length, o.width, o.height}) {
            CHECK(d >= 1.5);
            CHECK(d <= 6.0);
        }
}

TEST_CASE("the seed-42 scenario matches the committed fixture") {
    std::ifstream in(std::string(BEVLAT_FIXTURE_DIR) + "/scenario_seed42.json");
    REQUIRE(in.good());
    const Json golden = Json::parse(in);
    CHECK(golden == Json(generate_scenario(42, 2, 3, 20)));
    CHECK(Json(golden.get<Scenario>()) == golden);
}

TEST_CASE("an empty scene leaves every object channel at zero") {
    const Scenario s = generate_scenario(3, 2, 0, 3);
    const FeatureMap f = encode_bev_features(s, 1, 0);
    CHECK(object_channels_zero(f.data));
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const PipelineResult r = run_pipeline(victim_inputs(s, 1), 0, head, s.anchors, PostProcessConfig{});
    CHECK(r.pre_nms_count == 0);
}

TEST_CASE("an object at the ego origin peaks at the grid centre") {
    const Scenario s = lone_object_scene();
    const FeatureMap f = encode_bev_features(s, 0, 0);
    const double* heat = f.data.channel(kHeat);
    const auto peak = std::max_element(heat, heat + f.data.plane()) - heat;
    const int row = static_cast<int>(peak) / s.grid.cols, col = static_cast<int>(peak) % s.grid.cols;
    CHECK((row == 31 || row == 32));
    CHECK((col == 31 || col == 32));
    // the four centre cells are symmetric about the object centre
    CHECK(f.data.at(kHeat, 31, 31) == doctest::Approx(f.data.at(kHeat, 32, 32)).epsilon(1e-12));
    CHECK(f.data.at(kHeat, 31, 32) == doctest::Approx(f.data.at(kHeat, 32, 31)).epsilon(1e-12));
}

TEST_CASE("encoding in a shifted frame equals warping the original encoding") {
    const Scenario s = generate_scenario(42, 2, 3, 20);
    const PoseSE2 p = s.pose(0, 6);
    for (double shift : {0.8, 1.2, -2.0}) {
        const PoseSE2 q{p.x + shift * std::cos(p.yaw), p.y + shift * std::sin(p.yaw), p.yaw};
        const FeatureMap direct = encode_bev_features_in(s, 6, 0, q);
        const FeatureMap warped = warp_to_pose(encode_bev_features_in(s, 6, 0, p), q);
        for (int c = 0; c < kFeatureChannels; ++c) {
            double peak = 0.0, worst = 0.0;
            for (int i = 8; i < 56; ++i)
                for (int j = 8; j < 56; ++j) {
                    peak = std::max(peak, std::abs(direct.data.at(c, i, j)));
                    worst = std::max(worst, std::abs(direct.data.at(c, i, j) - warped.data.at(c, i, j)));
                }
            CAPTURE(shift);
            CAPTURE(c);
            CHECK(worst <= 0.05 * peak + 1e-12);
        }
    }
}

TEST_CASE("synthetic head on a zero feature stays quiet") {
    const Scenario s = generate_scenario(1, 2, 0, 2);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const RawPrediction raw = apply_inference_head(Tensor3(kFeatureChannels, 64, 64), head);
    for (double v : raw.scores.values()) CHECK(v < 0.05);
}

TEST_CASE("a single object bump lights exactly one cell") {
    // centred on cell (32, 32)
    const Scenario s = lone_object_scene(0.2, 0.2);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const FeatureMap f = encode_bev_features(s, 0, 0);
    const RawPrediction raw = apply_inference_head(f.data, head);
    int above = 0;
    for (double v : raw.scores.values()) above += v > 0.5;
    CHECK(above == 1);
    CHECK(raw.scores.at(0, 32, 32) > 0.5);
}

TEST_CASE("benign fixture frames detect every object with the right size") {
    const Scenario s = generate_scenario(42, 2, 3, 20);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    for (int frame : {0, 7, 19}) {
        const PoseSE2& ego = s.pose(0, frame);
        const auto gt = ground_truth_boxes(s, frame, ego);
        const PipelineResult r = run_pipeline(victim_inputs(s, frame), 0, head, s.anchors, PostProcessConfig{});
        CAPTURE(frame);
        REQUIRE(gt.size() == 3);
        CHECK(r.detections.size() == 3);
        for (const ProposalBox& g : gt) {
            const ProposalBox* best = nullptr;
            double best_iou = 0.0;
            for (const ProposalBox& d : r.detections)
                if (rotated_iou(g, d) > best_iou) {
                    best_iou = rotated_iou(g, d);
                    best = &d;
                }
            REQUIRE(best != nullptr);
            CHECK(best_iou >= 0.3);
            CHECK(std::abs(best->length - g.length) <= 0.2 * g.length);
            CHECK(std::abs(best->width - g.width) <= 0.2 * g.width);
            CHECK(std::abs(best->height - g.height) <= 0.2 * g.height);
        }
        CHECK(average_precision(r.detections, gt) == 1.0);
    }
}

TEST_CASE("benign proposal counts stay sparse over 100 frames") {
    int frames = 0;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const Scenario s = generate_scenario(seed, 2, 3, 20);
        const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
        for (int t = 0; t < s.frames; ++t, ++frames) {
            const PipelineResult r = run_pipeline(victim_inputs(s, t), 0, head, s.anchors, PostProcessConfig{});
            CAPTURE(seed);
            CAPTURE(t);
            CHECK(r.pre_nms_count <= 5 * 3);
        }
    }
    CHECK(frames == 100);
}

TEST_CASE("encoder argument checks") {
    const Scenario s = generate_scenario(42, 2, 3, 4);
    CHECK_THROWS_AS(encode_bev_features(s, 0, 5), ValidationError);
    CHECK_THROWS_AS(encode_bev_features(s, 4, 0), ValidationError);
    CHECK_THROWS_AS(stale_scene(s, 0, true), ValidationError);
}
