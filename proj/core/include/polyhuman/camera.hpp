#pragma once

#include "polyhuman/geometry.hpp"

#include <Eigen/Core>

namespace polyhuman {

/// Pinhole camera. World to camera: x_cam = rotation * x_world + translation;
/// the camera looks down +z with image v growing downwards. Pixel (u, v) is the
/// unit square [u, u+1) x [v, v+1); rays go through its center.
struct CameraModel {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    int width = 1;
    int height = 1;

    Vec3 center() const { return -rotation.transpose() * translation; }
    /// Continuous image coordinates of a world point.
    Eigen::Vector2d project(const Vec3& world) const;
    /// Unit world-space direction through continuous image point (x, y).
    Vec3 direction_through(double x, double y) const;
    /// Throws std::invalid_argument when intrinsics or extrinsics are invalid.
    void validate() const;

    static CameraModel look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width,
                               int height);

    bool operator==(const CameraModel& o) const {
        return fx == o.fx && fy == o.fy && cx == o.cx && cy == o.cy && rotation == o.rotation &&
               translation == o.translation && width == o.width && height == o.height;
    }
};

} // namespace polyhuman
