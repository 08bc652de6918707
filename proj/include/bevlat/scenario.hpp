#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bevlat/geometry.hpp"
#include "bevlat/pipeline.hpp"

namespace bevlat {

// Channel layout produced by the synthetic encoder.
enum FeatureChannel : int {
    kHeat = 0,        // object-centre response
    kOrientation,     // heat * cos(2 * yaw)
    kGround,          // ground-return intensity, masked under objects
    kLengthCode,
    kWidthCode,
    kHeightCode,
    kElevationCode,
    kYawCode,
    kRelief,          // signed ground relief, masked under objects; not read by the head
    kFeatureChannels
};

// World-fixed bilinear value noise v in [0, 1), mapped to offset + amplitude * v^exponent.
struct GroundTexture {
    std::uint64_t seed = 0;
    double lattice = 0.8;
    double amplitude = 3.0;
    double exponent = 1.0;
    double offset = 0.0;

    double value(double wx, double wy) const;
};

// Constants shared by the encoder and the synthetic detection head. The head
// reads each code channel back with the matching gain, so benign objects decode
// to their true geometry at their centre cell.
struct EncoderModel {
    double heat_along = 0.043;    // heat sigma as a fraction of object length
    double heat_across = 0.10;    // ... of object width
    double footprint = 0.25;      // footprint sigma as a fraction of each dimension
    double occupancy_gain = 3.0;
    double size_gain = 20.0;
    double elevation_gain = 1.0;
    double yaw_gain = 2.0;
    double road_z = 1.0;

    double score_heat = 12.0;
    double score_orientation = 6.0;
    double score_ground = 10.0;
    double score_bias = -6.8;
    double anchor_bias_step = -0.5;  // added per anchor index after the first
};

struct ObjectTrack {
    int id = 0;
    double x = 0, y = 0, z = 0;   // world centre at frame 0
    double length = 0, width = 0, height = 0;
    double yaw = 0;
    double vx = 0, vy = 0;        // m/s

    PoseSE2 pose_at(int frame, double dt) const {
        return {x + vx * dt * frame, y + vy * dt * frame, yaw};
    }
};

struct AgentTrack {
    int id = 0;
    std::string role;             // "victim", "attacker" or "collaborator"
    std::vector<PoseSE2> poses;   // one per frame
};

struct Scenario {
    std::uint64_t seed = 0;
    int frames = 0;
    double dt = 0.1;
    double range = 50.0;          // sensing radius of every agent, metres
    GridSpec grid;
    AnchorConfig anchors;
    EncoderModel model;
    GroundTexture ground{0, 0.8, 2.2, 1.0, 0.0};
    GroundTexture relief{0, 0.8, 3.0, 1.0, -1.5};
    std::vector<AgentTrack> agents;
    std::vector<ObjectTrack> objects;
    int victim = 0;
    int attacker = 1;

    const PoseSE2& pose(int agent, int frame) const;
};

AnchorConfig default_anchor_config();

Scenario generate_scenario(std::uint64_t seed, int n_agents, int n_objects, int n_frames);

// Rasterises what `agent` observes at `frame`, expressed in its own frame.
FeatureMap encode_bev_features(const Scenario& s, int frame, int agent);

// Same observation rasterised directly in the frame given by `frame_pose`.
// Used to produce messages already aligned to the receiving vehicle.
FeatureMap encode_bev_features_in(const Scenario& s, int frame, int agent, const PoseSE2& frame_pose);

// Objects whose centre falls inside the grid attached to `frame_pose`, as
// boxes in that frame with score 1.
std::vector<ProposalBox> ground_truth_boxes(const Scenario& s, int frame, const PoseSE2& frame_pose);

HeadWeights synth_head_weights(const AnchorConfig& anchors, const GridSpec& grid, const EncoderModel& model);

}  // namespace bevlat
