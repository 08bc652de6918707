#pragma once

#include <array>

#include "bevlat/geometry.hpp"
#include "bevlat/pipeline.hpp"

namespace bevlat {

// Homogeneous 3x3 affine map acting on grid-centred pixel coordinates
// (u, v) = (x / resolution, y / resolution). Row-major.
struct AffineTransform2D {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static AffineTransform2D identity() { return {}; }
    static AffineTransform2D rotation_translation(double angle, double tu, double tv);

    std::array<double, 2> apply(double u, double v) const {
        return {m[0] * u + m[1] * v + m[2], m[3] * u + m[4] * v + m[5]};
    }
    double rotation_angle() const;
    std::array<double, 2> translation() const { return {m[2], m[5]}; }
};

// outer ∘ inner: apply `inner` first.
AffineTransform2D compose(const AffineTransform2D& outer, const AffineTransform2D& inner);
AffineTransform2D invert(const AffineTransform2D& t);

// Maps pixel coordinates of a grid attached to `previous` onto the grid
// attached to `current`.
AffineTransform2D derive_transform(const PoseSE2& previous, const PoseSE2& current, double resolution);

// Resamples `feature` through `transform` (bilinear, zero fill). The result
// carries timestamp + 1; the pose is left for the caller to set.
FeatureMap warp_feature(const FeatureMap& feature, const AffineTransform2D& transform,
                        ExecPolicy exec = {});

// Re-expresses `feature` in the frame of `target` and advances its timestamp.
FeatureMap warp_to_pose(const FeatureMap& feature, const PoseSE2& target, ExecPolicy exec = {});

}  // namespace bevlat
