#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace bevlat {

struct PoseSE2 {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
};

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a <= 0.0) a += two_pi;
    return a - std::numbers::pi;
}

// Expresses a world point in the frame of `pose`.
inline std::array<double, 2> world_to_local(const PoseSE2& pose, double wx, double wy) {
    const double dx = wx - pose.x, dy = wy - pose.y;
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    return {c * dx + s * dy, -s * dx + c * dy};
}

inline std::array<double, 2> local_to_world(const PoseSE2& pose, double lx, double ly) {
    const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
    return {pose.x + c * lx - s * ly, pose.y + s * lx + c * ly};
}

// Layout shared by every BEV tensor: rows index y, columns index x, the grid is
// centred on the observing agent and cells are `resolution` metres wide.
struct GridSpec {
    int channels = 8;
    int rows = 64;
    int cols = 64;
    double resolution = 0.4;

    // Cell-centre offsets from the grid centre, in cells.
    double cell_x(int col) const { return col + 0.5 - 0.5 * cols; }
    double cell_y(int row) const { return row + 0.5 - 0.5 * rows; }
};

}  // namespace bevlat
