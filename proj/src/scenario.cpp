#include "bevlat/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bevlat/errors.hpp"
#include "bevlat/random.hpp"

namespace bevlat {

namespace {

constexpr double kLaneWidth = 3.5;

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x632BE59BD9B4E019ULL +
                                                   static_cast<std::uint64_t>(iy)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Box-symmetric yaw in [-pi/2, pi/2).
double half_turn(double yaw) {
    double a = wrap_angle(yaw);
    if (a >= 0.5 * std::numbers::pi) a -= std::numbers::pi;
    if (a < -0.5 * std::numbers::pi) a += std::numbers::pi;
    return a;
}

}  // namespace

double GroundTexture::value(double wx, double wy) const {
    const double gx = wx / lattice, gy = wy / lattice;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const double ax = gx - fx, ay = gy - fy;
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double v = (1 - ax) * (1 - ay) * lattice_value(seed, ix, iy) +
                     ax * (1 - ay) * lattice_value(seed, ix + 1, iy) +
                     (1 - ax) * ay * lattice_value(seed, ix, iy + 1) +
                     ax * ay * lattice_value(seed, ix + 1, iy + 1);
    return offset + amplitude * std::pow(v, exponent);
}

const PoseSE2& Scenario::pose(int agent, int frame) const {
    if (agent < 0 || agent >= static_cast<int>(agents.size()))
        throw ValidationError("agent index " + std::to_string(agent) + " out of range");
    if (frame < 0 || frame >= frames) throw ValidationError("frame " + std::to_string(frame) + " out of range");
    return agents[agent].poses[frame];
}

AnchorConfig default_anchor_config() {
    AnchorConfig cfg;
    cfg.priors = {AnchorPrior{3.9, 1.6, 1.56, 0.0}, AnchorPrior{3.9, 1.6, 1.56, 0.5 * std::numbers::pi}};
    cfg.z_center = 1.8;
    cfg.resolution = 0.4;
    return cfg;
}

Scenario generate_scenario(std::uint64_t seed, int n_agents, int n_objects, int n_frames) {
    if (n_agents < 2) throw ValidationError("a scenario needs a victim and an attacker");
    if (n_agents > 6) throw ValidationError("at most 6 agents are supported");
    if (n_objects < 0) throw ValidationError("object count must be non-negative");
    if (n_frames < 2) throw ValidationError("a scenario needs at least two frames");

    Rng rng(seed);
    Scenario s;
    s.seed = seed;
    s.frames = n_frames;
    s.grid = GridSpec{kFeatureChannels, 64, 64, 0.4};
    s.anchors = default_anchor_config();
    s.ground.seed = rng.next();
    s.relief.seed = rng.next();

    const double heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double fx = std::cos(heading), fy = std::sin(heading);
    const double lx = -fy, ly = fx;
    const double ox = rng.uniform(-50, 50), oy = rng.uniform(-50, 50);
    const double ego_speed = rng.uniform(8.0, 12.0);

    // Everything below is placed in road coordinates (longitudinal, lateral)
    // relative to the victim at frame 0.
    auto world = [&](double lon, double lat) { return std::array<double, 2>{ox + lon * fx + lat * lx, oy + lon * fy + lat * ly}; };
    auto make_agent = [&](int id, const std::string& role, double lon, double lat, double speed) {
        AgentTrack a{id, role, {}};
        for (int t = 0; t < n_frames; ++t) {
            const auto p = world(lon + speed * s.dt * t, lat);
            a.poses.push_back({p[0], p[1], heading});
        }
        return a;
    };

    struct Slot { double lon, lat; };
    std::vector<Slot> taken{{0.0, 0.0}};
    s.agents.push_back(make_agent(0, "victim", 0.0, 0.0, ego_speed));
    const double side = rng.coin() ? 1.0 : -1.0;
    const double lateral_slots[5] = {side * kLaneWidth, -side * kLaneWidth, 0.0, 2 * side * kLaneWidth,
                                     -2 * side * kLaneWidth};
    for (int k = 1; k < n_agents; ++k) {
        const double lat = lateral_slots[k - 1];
        const double lon = (rng.coin() ? 1.0 : -1.0) * rng.uniform(lat == 0.0 ? 8.0 : 6.0, 12.0);
        taken.push_back({lon, lat});
        s.agents.push_back(make_agent(k, k == 1 ? "attacker" : "collaborator", lon, lat,
                                      ego_speed + rng.uniform(-0.5, 0.5)));
    }

    double lane_speed[3];
    for (double& v : lane_speed) v = ego_speed + rng.uniform(-1.0, 1.0);
    int attempts = 0;
    while (static_cast<int>(s.objects.size()) < n_objects) {
        if (++attempts > 10000) throw ValidationError("cannot place " + std::to_string(n_objects) + " objects");
        const int lane = rng.below(3) - 1;
        const double lat = lane * kLaneWidth + rng.uniform(-0.3, 0.3);
        const double lon = rng.uniform(-10.0, 10.0);
        bool clash = false;
        for (const Slot& t : taken)
            if (std::abs(t.lat - lat) < 2.5 && std::abs(t.lon - lon) < 6.5) clash = true;
        if (clash) continue;
        taken.push_back({lon, lat});

        ObjectTrack o;
        o.id = static_cast<int>(s.objects.size());
        o.length = rng.uniform(3.6, 4.8);
        o.width = rng.uniform(1.6, 2.1);
        o.height = rng.uniform(1.5, 1.9);
        const auto p = world(lon, lat);
        o.x = p[0];
        o.y = p[1];
        o.z = s.model.road_z + 0.5 * o.height;
        o.yaw = heading + rng.uniform(-0.12, 0.12);
        const double v = lane_speed[lane + 1];
        o.vx = v * fx;
        o.vy = v * fy;
        s.objects.push_back(o);
    }
    return s;
}

FeatureMap encode_bev_features(const Scenario& s, int frame, int agent) {
    return encode_bev_features_in(s, frame, agent, s.pose(agent, frame));
}

FeatureMap encode_bev_features_in(const Scenario& s, int frame, int agent, const PoseSE2& frame_pose) {
    const PoseSE2& sensor = s.pose(agent, frame);
    const GridSpec& g = s.grid;
    if (g.channels != kFeatureChannels)
        throw StructuralError("synthetic encoder produces " + std::to_string(kFeatureChannels) + " channels");
    const EncoderModel& m = s.model;
    const AnchorPrior& ref = s.anchors.priors.at(0);
    FeatureMap out{agent, frame, frame_pose, g.resolution, Tensor3(g.channels, g.rows, g.cols)};
    Tensor3& f = out.data;
    Tensor3 occupancy(1, g.rows, g.cols);

    for (const ObjectTrack& o : s.objects) {
        const PoseSE2 op = o.pose_at(frame, s.dt);
        if (std::hypot(op.x - sensor.x, op.y - sensor.y) > s.range) continue;
        const auto centre = world_to_local(frame_pose, op.x, op.y);
        const double yaw = o.yaw - frame_pose.yaw;
        const double c = std::cos(yaw), sn = std::sin(yaw);
        const double orient = std::cos(2.0 * yaw);
        const double sa = m.heat_along * o.length, sc = m.heat_across * o.width;
        const double fa = m.footprint * o.length, fc = m.footprint * o.width;
        const double codes[5] = {std::log(o.length / ref.length) / m.size_gain,
                                 std::log(o.width / ref.width) / m.size_gain,
                                 std::log(o.height / ref.height) / m.size_gain,
                                 (o.z - s.anchors.z_center) / ref.height / m.elevation_gain,
                                 half_turn(yaw) / m.yaw_gain};
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) {
                const double dx = g.cell_x(j) * g.resolution - centre[0];
                const double dy = g.cell_y(i) * g.resolution - centre[1];
                const double along = c * dx + sn * dy;
                const double across = -sn * dx + c * dy;
                const double heat = std::exp(-0.5 * (along * along / (sa * sa) + across * across / (sc * sc)));
                const double fp = std::exp(-0.5 * (along * along / (fa * fa) + across * across / (fc * fc)));
                const double occ = std::min(1.0, m.occupancy_gain * fp);
                f.at(kHeat, i, j) += heat;
                f.at(kOrientation, i, j) += heat * orient;
                for (int k = 0; k < 5; ++k) f.at(kLengthCode + k, i, j) += occ * codes[k];
                occupancy.at(0, i, j) = std::max(occupancy.at(0, i, j), occ);
            }
    }

    for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
            const auto w = local_to_world(frame_pose, g.cell_x(j) * g.resolution, g.cell_y(i) * g.resolution);
            if (std::hypot(w[0] - sensor.x, w[1] - sensor.y) > s.range) continue;
            const double open = 1.0 - occupancy.at(0, i, j);
            f.at(kGround, i, j) = s.ground.value(w[0], w[1]) * open;
            f.at(kRelief, i, j) = s.relief.value(w[0], w[1]) * open;
        }
    return out;
}

std::vector<ProposalBox> ground_truth_boxes(const Scenario& s, int frame, const PoseSE2& frame_pose) {
    if (frame < 0 || frame >= s.frames) throw ValidationError("frame out of range");
    std::vector<ProposalBox> out;
    const double half_x = 0.5 * s.grid.cols * s.grid.resolution;
    const double half_y = 0.5 * s.grid.rows * s.grid.resolution;
    for (const ObjectTrack& o : s.objects) {
        const PoseSE2 op = o.pose_at(frame, s.dt);
        const auto p = world_to_local(frame_pose, op.x, op.y);
        if (std::abs(p[0]) >= half_x || std::abs(p[1]) >= half_y) continue;
        ProposalBox b;
        b.x = p[0];
        b.y = p[1];
        b.z = o.z;
        b.length = o.length;
        b.width = o.width;
        b.height = o.height;
        b.yaw = wrap_angle(o.yaw - frame_pose.yaw);
        b.score = 1.0;
        b.source_index = o.id;
        out.push_back(b);
    }
    return out;
}

HeadWeights synth_head_weights(const AnchorConfig& anchors, const GridSpec& grid, const EncoderModel& m) {
    if (grid.channels != kFeatureChannels)
        throw StructuralError("synthetic head expects " + std::to_string(kFeatureChannels) + " input channels");
    if (anchors.count() < 1) throw ValidationError("at least one anchor is required");
    HeadWeights h;
    h.in_channels = grid.channels;
    h.anchors = anchors.count();
    h.kernel = 1;
    h.weight.assign(static_cast<std::size_t>(h.out_channels()) * h.in_channels, 0.0);
    h.bias.assign(h.out_channels(), 0.0);
    for (int a = 0; a < h.anchors; ++a) {
        const int o = h.score_channel(a);
        h.w(o, kHeat, 0, 0) = m.score_heat;
        h.w(o, kOrientation, 0, 0) = m.score_orientation * std::cos(2.0 * anchors.priors[a].yaw);
        h.w(o, kGround, 0, 0) = -m.score_ground;
        h.bias[o] = m.score_bias + m.anchor_bias_step * a;
        h.w(h.regression_channel(a, kDl), kLengthCode, 0, 0) = m.size_gain;
        h.w(h.regression_channel(a, kDw), kWidthCode, 0, 0) = m.size_gain;
        h.w(h.regression_channel(a, kDh), kHeightCode, 0, 0) = m.size_gain;
        h.w(h.regression_channel(a, kDz), kElevationCode, 0, 0) = m.elevation_gain;
        h.w(h.regression_channel(a, kDyaw), kYawCode, 0, 0) = m.yaw_gain;
        h.bias[h.regression_channel(a, kDyaw)] = -anchors.priors[a].yaw;
    }
    return h;
}

}  // namespace bevlat
