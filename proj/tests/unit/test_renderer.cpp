#include <doctest.h>

#include "polyhuman/gradcheck.hpp"
#include "polyhuman/ops.hpp"
#include "polyhuman/renderer.hpp"

#include <cmath>

using namespace polyhuman;

namespace {

CameraModel test_camera() { return CameraModel::look_at(Vec3(0.3, 0.2, 4.0), Vec3(0, 0, 0), Vec3(0, 1, 0), 70.0, 64, 64); }

const Box kScene{Vec3(-1, -1, -1), Vec3(1, 1, 1)};

} // namespace

TEST_CASE("rays through pixel centers") {
    CameraModel cam;
    cam.fx = cam.fy = 50;
    cam.cx = 31.5;
    cam.cy = 31.5;
    cam.width = cam.height = 64;
    cam.translation = Vec3(0, 0, 5);
    const Ray center = pixel_ray(cam, 31, 31, kScene);
    CHECK((center.direction - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK_FALSE(center.empty);
    CHECK(center.near == doctest::Approx(4.0));
    CHECK(center.far == doctest::Approx(6.0));

    const auto cam2 = test_camera();
    const auto rays = generate_rays(cam2, image_pixels(64, 64), kScene);
    REQUIRE(rays.size() == 4096);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rays.size(); ++i) {
        const auto& r = rays[i];
        CHECK(std::abs(r.direction.norm() - 1.0) < 1e-9);
        if (!r.empty) {
            ++hits;
            CHECK(r.near < r.far);
        }
        const auto uv = cam2.project(r.origin + 2.5 * r.direction);
        CHECK(std::abs(uv.x() - (static_cast<double>(i % 64) + 0.5)) < 1e-9);
        CHECK(std::abs(uv.y() - (static_cast<double>(i / 64) + 0.5)) < 1e-9);
    }
    CHECK(hits > 0);
    CHECK(hits < rays.size());
}

TEST_CASE("rays missing the scene are flagged and composite to background") {
    const auto cam = test_camera();
    const Ray r = pixel_ray(cam, 0, 0, Box{Vec3(-0.1, -0.1, -0.1), Vec3(0.1, 0.1, 0.1)});
    CHECK(r.empty);
    const Tensor rgba = Tensor::zeros({1, 4});
    const Tensor rgb = over_background(rgba, Vec3(1, 1, 1));
    for (double v : rgb.data()) CHECK(v == 1.0);
}

TEST_CASE("stratified samples fall one per bin") {
    Ray ray;
    ray.near = 1.5;
    ray.far = 4.0;
    ray.empty = false;
    Rng rng(1);
    const auto one = stratified_sample(ray, 1, rng);
    CHECK((one[0] >= 1.5 && one[0] < 4.0));
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng r(seed);
        const auto d = stratified_sample(ray, 128, r);
        REQUIRE(d.size() == 128);
        const double bin = 2.5 / 128;
        for (std::size_t m = 0; m < 128; ++m) {
            CHECK(d[m] >= 1.5 + m * bin);
            CHECK(d[m] < 1.5 + (m + 1) * bin);
            if (m > 0) CHECK(d[m] > d[m - 1]);
        }
        Rng again(seed);
        CHECK(stratified_sample(ray, 128, again) == d);
    }
    const auto centers = stratified_sample(ray, 4, rng, false);
    CHECK(centers[0] == doctest::Approx(1.5 + 0.3125));
    const auto deltas = sample_deltas(centers, ray.near, ray.far);
    CHECK(deltas[0] == doctest::Approx(0.625));
    CHECK(deltas[3] == doctest::Approx(0.625));
    CHECK_THROWS_AS(stratified_sample(ray, 0, rng), std::invalid_argument);
}

TEST_CASE("compositing closed forms") {
    const double ln2 = std::log(2.0);
    SUBCASE("vacuum") {
        const Tensor rgba = composite(Tensor::full({5, 3}, 0.7), Tensor::zeros({5, 1}), std::vector<double>(5, 0.1), 1, 5);
        for (double v : rgba.data()) CHECK(v == 0.0);
    }
    SUBCASE("one sample absorbing half") {
        const Tensor rgba = composite(Tensor::from({1, 3}, {0.2, 0.4, 0.8}), Tensor::from({1, 1}, {ln2}),
                                      std::vector<double>{1.0}, 1, 1);
        CHECK(rgba[3] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(rgba[0] == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(rgba[2] == doctest::Approx(0.4).epsilon(1e-15));
    }
    SUBCASE("two samples absorbing half each") {
        const Tensor rgba = composite(Tensor::from({2, 3}, {1, 0, 0, 0, 1, 0}), Tensor::from({2, 1}, {ln2 / 0.5, ln2 / 0.5}),
                                      std::vector<double>{0.5, 0.5}, 1, 2);
        CHECK(rgba[0] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(rgba[1] == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(rgba[3] == doctest::Approx(0.75).epsilon(1e-14));
    }
    SUBCASE("constant medium") {
        Ray ray;
        ray.near = 2.0;
        ray.far = 3.7;
        ray.empty = false;
        Rng rng(3);
        const auto depths = stratified_sample(ray, 128, rng);
        const auto deltas = sample_deltas(depths, ray.near, ray.far);
        const double sigma = 1.3;
        const Tensor rgba = composite(Tensor::full({128, 3}, 0.6), Tensor::full({128, 1}, sigma), deltas, 1, 128);
        // The quadrature integrates from the first sample over sum(deltas).
        double span = 0.0;
        for (double d : deltas) span += d;
        const double analytic = 0.6 * (1.0 - std::exp(-sigma * (ray.far - ray.near)));
        CHECK(std::abs(rgba[0] - analytic) / analytic < 1e-3);
        CHECK(std::abs(rgba[0] - 0.6 * (1.0 - std::exp(-sigma * span))) < 1e-12);
    }
}

TEST_CASE("composite agrees with the single-ray routine and keeps weights bounded") {
    Rng rng(4);
    const std::size_t R = 7, M = 20;
    std::vector<double> c(R * M * 3), s(R * M), d(R * M);
    for (auto& x : c) x = rng.uniform();
    for (auto& x : s) x = rng.uniform(0.0, 20.0);
    for (auto& x : d) x = rng.uniform(0.0, 0.2);
    const Tensor rgba = composite(Tensor::from({R * M, 3}, c), Tensor::from({R * M, 1}, s), d, R, M);
    for (std::size_t r = 0; r < R; ++r) {
        std::vector<Vec3> cols(M);
        for (std::size_t m = 0; m < M; ++m) cols[m] = Vec3(c[(r * M + m) * 3], c[(r * M + m) * 3 + 1], c[(r * M + m) * 3 + 2]);
        std::vector<double> w;
        const auto one = composite_ray(cols, std::span(s).subspan(r * M, M), std::span(d).subspan(r * M, M), &w);
        double total = 0.0;
        for (double x : w) {
            CHECK(x >= 0.0);
            total += x;
        }
        CHECK(total <= 1.0 + 1e-9);
        for (int ch = 0; ch < 3; ++ch) CHECK(rgba[r * 4 + ch] == one.color[ch]);
        CHECK(rgba[r * 4 + 3] == one.alpha);
    }
}

TEST_CASE("compositing gradients match finite differences") {
    Rng rng(5);
    const std::size_t R = 3, M = 6;
    std::vector<double> c(R * M * 3), s(R * M), d(R * M), w(R * 4);
    for (auto& x : c) x = rng.uniform();
    for (auto& x : s) x = rng.uniform(0.0, 5.0);
    for (auto& x : d) x = rng.uniform(0.05, 0.3);
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
    Tensor colors = Tensor::parameter({R * M, 3}, c);
    Tensor dens = Tensor::parameter({R * M, 1}, s);
    const Tensor weights = Tensor::from({R, 4}, w);
    std::vector<std::pair<Tensor, std::size_t>> probes;
    for (std::size_t i = 0; i < R * M * 3; ++i) probes.emplace_back(colors, i);
    for (std::size_t i = 0; i < R * M; ++i) probes.emplace_back(dens, i);
    auto f = [&] { return sum(mul(over_background(composite(colors, dens, d, R, M), Vec3(1, 0.5, 0.2)), narrow(weights, 1, 0, 3))) + sum(mul(composite(colors, dens, d, R, M), weights)); };
    CHECK(grad_check(f, probes).max_rel_error < 1e-6);
}

TEST_CASE("composite shape errors") {
    CHECK_THROWS_AS(composite(Tensor::zeros({4, 3}), Tensor::zeros({4, 1}), std::vector<double>(4, 0.1), 2, 3), ShapeError);
}
