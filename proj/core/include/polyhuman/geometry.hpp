#pragma once

#include <Eigen/Core>

#include <limits>
#include <optional>
#include <utility>

namespace polyhuman {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Axis-aligned box.
struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();

    bool contains(const Vec3& p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
    Vec3 extent() const { return hi - lo; }
    Box expanded(double margin) const {
        return {lo - Vec3::Constant(margin), hi + Vec3::Constant(margin)};
    }
    void include(const Vec3& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    static Box empty_box() {
        return {Vec3::Constant(std::numeric_limits<double>::infinity()),
                Vec3::Constant(-std::numeric_limits<double>::infinity())};
    }
    bool operator==(const Box& o) const { return lo == o.lo && hi == o.hi; }

    /// Slab test. Returns (t_enter, t_exit) with t_enter >= 0 for a ray that
    /// crosses the box in front of its origin.
    std::optional<std::pair<double, double>> intersect(const Vec3& origin, const Vec3& direction) const;
};

} // namespace polyhuman
