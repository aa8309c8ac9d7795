#include "polyhuman/renderer.hpp"

#include "polyhuman/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace polyhuman {

Ray pixel_ray(const CameraModel& camera, int u, int v, const Box& scene) {
    Ray r;
    r.origin = camera.center();
    r.direction = camera.direction_through(u + 0.5, v + 0.5);
    if (auto hit = scene.intersect(r.origin, r.direction); hit && hit->second > hit->first) {
        r.near = hit->first;
        r.far = hit->second;
        r.empty = false;
    }
    return r;
}

std::vector<Ray> generate_rays(const CameraModel& camera, std::span<const Pixel> pixels, const Box& scene) {
    std::vector<Ray> rays;
    rays.reserve(pixels.size());
    for (const auto& p : pixels) rays.push_back(pixel_ray(camera, p.u, p.v, scene));
    return rays;
}

std::vector<Pixel> patch_pixels(int u0, int v0, int size) {
    std::vector<Pixel> out;
    out.reserve(static_cast<std::size_t>(size * size));
    for (int v = 0; v < size; ++v)
        for (int u = 0; u < size; ++u) out.push_back({u0 + u, v0 + v});
    return out;
}

std::vector<Pixel> image_pixels(int width, int height) {
    std::vector<Pixel> out;
    out.reserve(static_cast<std::size_t>(width * height));
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) out.push_back({u, v});
    return out;
}

std::vector<double> stratified_sample(const Ray& ray, std::size_t samples, Rng& rng, bool jitter) {
    if (samples == 0) throw std::invalid_argument("stratified_sample: need at least one sample");
    const double bin = (ray.far - ray.near) / static_cast<double>(samples);
    std::vector<double> depths(samples);
    for (std::size_t m = 0; m < samples; ++m) {
        const double offset = jitter ? rng.uniform() : 0.5;
        depths[m] = ray.near + (static_cast<double>(m) + offset) * bin;
    }
    return depths;
}

std::vector<double> sample_deltas(std::span<const double> depths, double near, double far) {
    std::vector<double> d(depths.size());
    for (std::size_t m = 0; m + 1 < depths.size(); ++m) d[m] = depths[m + 1] - depths[m];
    if (!depths.empty()) d.back() = (far - near) / static_cast<double>(depths.size());
    return d;
}

RayColor composite_ray(std::span<const Vec3> colors, std::span<const double> densities,
                       std::span<const double> deltas, std::vector<double>* weights_out) {
    RayColor out;
    double transmittance = 1.0;
    if (weights_out) weights_out->assign(densities.size(), 0.0);
    for (std::size_t m = 0; m < densities.size(); ++m) {
        const double absorbed = std::exp(-densities[m] * deltas[m]);
        const double w = transmittance * (1.0 - absorbed);
        out.color += w * colors[m];
        out.alpha += w;
        if (weights_out) (*weights_out)[m] = w;
        transmittance *= absorbed;
    }
    return out;
}

Tensor composite(const Tensor& colors, const Tensor& densities, std::span<const double> deltas, std::size_t rays,
                 std::size_t samples) {
    const std::size_t n = rays * samples;
    if (colors.shape() != Shape{n, 3} || densities.shape() != Shape{n, 1} || deltas.size() != n) {
        throw ShapeError("composite: expected [" + std::to_string(n) + " x 3] colors and [" + std::to_string(n) +
                         " x 1] densities, got " + shape_to_string(colors.shape()) + " and " +
                         shape_to_string(densities.shape()));
    }
    const auto c = colors.data();
    const auto s = densities.data();
    std::vector<double> out(rays * 4, 0.0);
    // Per-sample weight and transmittance after the sample, kept for backward.
    std::vector<double> weight(n), after(n);
    for (std::size_t r = 0; r < rays; ++r) {
        double t = 1.0;
        for (std::size_t m = 0; m < samples; ++m) {
            const std::size_t i = r * samples + m;
            const double absorbed = std::exp(-s[i] * deltas[i]);
            const double w = t * (1.0 - absorbed);
            t *= absorbed;
            weight[i] = w;
            after[i] = t;
            for (std::size_t ch = 0; ch < 3; ++ch) out[r * 4 + ch] += w * c[i * 3 + ch];
            out[r * 4 + 3] += w;
        }
    }
    std::vector<double> dl(deltas.begin(), deltas.end());
    return make_result(
        "composite", {rays, 4}, std::move(out), {colors, densities},
        [rays, samples, colors, weight = std::move(weight), after = std::move(after), dl = std::move(dl)](
            std::span<const double>, std::span<const double> g, std::span<const std::span<double>> grads) {
            const auto c = colors.data();
            auto gc = grads[0];
            auto gs = grads[1];
            for (std::size_t r = 0; r < rays; ++r) {
                const double* gr = g.data() + r * 4;
                // Suffix sum of w_j G_j over later samples, G_j = g . c_j + g_alpha.
                double tail = 0.0;
                for (std::size_t m = samples; m-- > 0;) {
                    const std::size_t i = r * samples + m;
                    const double G = gr[0] * c[i * 3] + gr[1] * c[i * 3 + 1] + gr[2] * c[i * 3 + 2] + gr[3];
                    if (!gc.empty())
                        for (std::size_t ch = 0; ch < 3; ++ch) gc[i * 3 + ch] += weight[i] * gr[ch];
                    if (!gs.empty()) gs[i] += dl[i] * (after[i] * G - tail);
                    tail += weight[i] * G;
                }
            }
        });
}

Tensor over_background(const Tensor& rgba, const Vec3& background) {
    const Tensor rgb = narrow(rgba, 1, 0, 3);
    const Tensor alpha = narrow(rgba, 1, 3, 1);
    const Tensor bg = Tensor::from({1, 3}, {background.x(), background.y(), background.z()});
    const Tensor transparent = add_scalar(neg(alpha), 1.0);
    return add(rgb, mul(transparent, bg));
}

} // namespace polyhuman
