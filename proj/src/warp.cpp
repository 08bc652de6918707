#include "bevlat/warp.hpp"

#include <cmath>

#include "bevlat/errors.hpp"
#include "bevlat/kernels.hpp"

namespace bevlat {

AffineTransform2D AffineTransform2D::rotation_translation(double angle, double tu, double tv) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {{c, -s, tu, s, c, tv, 0, 0, 1}};
}

double AffineTransform2D::rotation_angle() const { return std::atan2(m[3], m[0]); }

AffineTransform2D compose(const AffineTransform2D& outer, const AffineTransform2D& inner) {
    AffineTransform2D r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += outer.m[i * 3 + k] * inner.m[k * 3 + j];
            r.m[i * 3 + j] = s;
        }
    return r;
}

AffineTransform2D invert(const AffineTransform2D& t) {
    const auto& m = t.m;
    if (m[6] != 0.0 || m[7] != 0.0 || m[8] != 1.0)
        throw ValidationError("only affine transforms (last row 0 0 1) can be inverted");
    const double det = m[0] * m[4] - m[1] * m[3];
    if (!(std::abs(det) > 1e-12)) throw NumericalError("warp", "singular transform");
    const double a = m[4] / det, b = -m[1] / det, c = -m[3] / det, d = m[0] / det;
    return {{a, b, -(a * m[2] + b * m[5]), c, d, -(c * m[2] + d * m[5]), 0, 0, 1}};
}

AffineTransform2D derive_transform(const PoseSE2& previous, const PoseSE2& current, double resolution) {
    if (!(resolution > 0.0)) throw ValidationError("resolution must be positive");
    const auto t = world_to_local(current, previous.x, previous.y);
    return AffineTransform2D::rotation_translation(previous.yaw - current.yaw, t[0] / resolution,
                                                   t[1] / resolution);
}

FeatureMap warp_feature(const FeatureMap& feature, const AffineTransform2D& transform, ExecPolicy exec) {
    const AffineTransform2D inverse = invert(transform);
    FeatureMap out{feature.agent_id, feature.timestamp + 1, feature.pose, feature.resolution, {}};
    kernels::warp_bilinear(exec, feature.data, inverse.m, out.data);
    return out;
}

FeatureMap warp_to_pose(const FeatureMap& feature, const PoseSE2& target, ExecPolicy exec) {
    FeatureMap out = warp_feature(feature, derive_transform(feature.pose, target, feature.resolution), exec);
    out.pose = target;
    return out;
}

}  // namespace bevlat
