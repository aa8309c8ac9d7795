#pragma once

#include "polyhuman/camera.hpp"
#include "polyhuman/geometry.hpp"
#include "polyhuman/rng.hpp"
#include "polyhuman/tensor.hpp"

#include <span>
#include <vector>

namespace polyhuman {

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();
    double near = 0.0;
    double far = 0.0;
    bool empty = true;  // missed the scene box
};

struct Pixel {
    int u = 0;
    int v = 0;
};

/// Ray through the center of pixel (u, v), clipped to `scene`.
Ray pixel_ray(const CameraModel& camera, int u, int v, const Box& scene);
std::vector<Ray> generate_rays(const CameraModel& camera, std::span<const Pixel> pixels, const Box& scene);
std::vector<Pixel> patch_pixels(int u0, int v0, int size);
std::vector<Pixel> image_pixels(int width, int height);

/// M increasing depths in [near, far): one uniform draw per equal bin, or bin
/// centers when `jitter` is false.
std::vector<double> stratified_sample(const Ray& ray, std::size_t samples, Rng& rng, bool jitter = true);
/// Gaps to the next depth; the last gap is (far - near) / M.
std::vector<double> sample_deltas(std::span<const double> depths, double near, double far);

/// Compositing of one ray. weights_out, when given, receives
/// T_m (1 - exp(-sigma_m delta_m)).
struct RayColor {
    Vec3 color = Vec3::Zero();
    double alpha = 0.0;
};
RayColor composite_ray(std::span<const Vec3> colors, std::span<const double> densities,
                       std::span<const double> deltas, std::vector<double>* weights_out = nullptr);

/// Differentiable compositing of R rays with M samples each. colors
/// [R M x 3], densities [R M x 1], deltas R M values -> [R x 4] (rgb, alpha).
Tensor composite(const Tensor& colors, const Tensor& densities, std::span<const double> deltas, std::size_t rays,
                 std::size_t samples);

/// rgb + (1 - alpha) background for an [R x 4] composite -> [R x 3].
Tensor over_background(const Tensor& rgba, const Vec3& background);

} // namespace polyhuman
