#include "polyhuman/camera.hpp"
#include "polyhuman/geometry.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace polyhuman {

std::optional<std::pair<double, double>> Box::intersect(const Vec3& origin, const Vec3& direction) const {
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(direction[a]) < 1e-15) {
            if (origin[a] < lo[a] || origin[a] > hi[a]) return std::nullopt;
            continue;
        }
        double ta = (lo[a] - origin[a]) / direction[a];
        double tb = (hi[a] - origin[a]) / direction[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 >= t1) return std::nullopt;
    }
    return std::make_pair(t0, t1);
}

Eigen::Vector2d CameraModel::project(const Vec3& world) const {
    const Vec3 c = rotation * world + translation;
    return {fx * c.x() / c.z() + cx, fy * c.y() / c.z() + cy};
}

Vec3 CameraModel::direction_through(double x, double y) const {
    const Vec3 cam((x - cx) / fx, (y - cy) / fy, 1.0);
    return (rotation.transpose() * cam).normalized();
}

void CameraModel::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera focal lengths must be positive");
    if (width < 1 || height < 1) throw std::invalid_argument("camera image extents must be positive");
    if (!((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9)) {
        throw std::invalid_argument("camera rotation is not orthonormal");
    }
}

CameraModel CameraModel::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width,
                                 int height) {
    const Vec3 z = (target - eye).normalized();
    const Vec3 x = z.cross(up).normalized();  // image u to the right
    const Vec3 y = z.cross(x);                 // image v downwards
    CameraModel cam;
    cam.rotation.row(0) = x.transpose();
    cam.rotation.row(1) = y.transpose();
    cam.rotation.row(2) = z.transpose();
    cam.translation = -cam.rotation * eye;
    cam.fx = cam.fy = focal;
    cam.width = width;
    cam.height = height;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    return cam;
}

} // namespace polyhuman
