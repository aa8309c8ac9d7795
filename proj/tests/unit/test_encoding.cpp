#include <doctest.h>

#include "polyhuman/camera.hpp"
#include "polyhuman/encoding.hpp"
#include "polyhuman/gradcheck.hpp"
#include "polyhuman/ops.hpp"
#include "polyhuman/rng.hpp"

#include <cmath>
#include <numbers>

using namespace polyhuman;

TEST_CASE("joint encoding of the origin is 36 alternating zeros and ones") {
    const Tensor p = Tensor::zeros({1, 3});
    const Tensor e = positional_encode(p, EncodingSpec{6});
    REQUIRE(e.shape() == Shape{1, 36});
    for (std::size_t i = 0; i < 36; ++i) CHECK(e[i] == (i % 2 == 0 ? 0.0 : 1.0));
}

TEST_CASE("single band at 0.5 gives (1, 0)") {
    const Tensor e = positional_encode(Tensor::from({1, 1}, {0.5}), EncodingSpec{1});
    CHECK(e[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(e[1]) < 1e-15);
}

TEST_CASE("encoding matches the per-element formula") {
    Rng rng(7);
    const int bands = 10;
    std::vector<double> v(5 * 3);
    for (auto& x : v) x = rng.uniform(-1.5, 1.5);
    const Tensor p = Tensor::from({5, 3}, v);
    const Tensor e = positional_encode(p, EncodingSpec{bands});
    REQUIRE(e.shape() == Shape{5, 60});
    double worst = 0.0;
    for (std::size_t r = 0; r < 5; ++r) {
        std::size_t col = 0;
        for (std::size_t c = 0; c < 3; ++c) {
            for (int b = 0; b < bands; ++b) {
                const double arg = std::pow(2.0, b) * std::numbers::pi * v[r * 3 + c];
                worst = std::max(worst, std::abs(e[r * 60 + col++] - std::sin(arg)));
                worst = std::max(worst, std::abs(e[r * 60 + col++] - std::cos(arg)));
            }
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("fewer bands select a per-coordinate prefix") {
    Rng rng(11);
    std::vector<double> v(4 * 3);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    const Tensor p = Tensor::from({4, 3}, v);
    const Tensor full = positional_encode(p, EncodingSpec{8});
    for (int lp = 1; lp < 8; ++lp) {
        const Tensor part = positional_encode(p, EncodingSpec{lp});
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t c = 0; c < 3; ++c) {
                for (std::size_t k = 0; k < static_cast<std::size_t>(2 * lp); ++k) {
                    CHECK(part[r * 6 * lp + c * 2 * lp + k] == full[r * 48 + c * 16 + k]);
                }
            }
        }
    }
}

TEST_CASE("annealing weights ramp bands in order") {
    CHECK(band_weight(0, 0.0) == 0.0);
    CHECK(band_weight(0, 1.0) == 1.0);
    CHECK(band_weight(3, 3.5) == doctest::Approx(0.5));
    CHECK(band_weight(4, 3.5) == 0.0);
    const Tensor p = Tensor::from({1, 1}, {0.3});
    const Tensor e = positional_encode(p, EncodingSpec{4}, 1.0);
    CHECK(e[0] == doctest::Approx(std::sin(0.3 * std::numbers::pi)));
    CHECK(e[2] == 0.0);
    CHECK(e[3] == 0.0);
}

TEST_CASE("encoding gradient matches finite differences") {
    Rng rng(3);
    std::vector<double> v(4 * 3), w(4 * 36);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
    Tensor p = Tensor::parameter({4, 3}, v);
    const Tensor weights = Tensor::from({4, 36}, w);
    const auto r = grad_check([&](const Tensor& t) { return sum(mul(positional_encode(t, EncodingSpec{6}), weights)); }, p);
    CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("encoding errors") {
    CHECK_THROWS_AS(positional_encode(Tensor::zeros({2, 3}), EncodingSpec{0}), std::invalid_argument);
    CHECK_THROWS_AS(positional_encode(Tensor::zeros({3}), EncodingSpec{2}), ShapeError);
}

TEST_CASE("box slab intersection") {
    const Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
    auto hit = box.intersect(Vec3(0, 0, -5), Vec3(0, 0, 1));
    REQUIRE(hit);
    CHECK(hit->first == doctest::Approx(4.0));
    CHECK(hit->second == doctest::Approx(6.0));
    CHECK_FALSE(box.intersect(Vec3(0, 3, -5), Vec3(0, 0, 1)));
    CHECK_FALSE(box.intersect(Vec3(0, 0, 5), Vec3(0, 0, 1)));
    auto inside = box.intersect(Vec3(0, 0, 0), Vec3(1, 0, 0));
    REQUIRE(inside);
    CHECK(inside->first == 0.0);
    CHECK(inside->second == doctest::Approx(1.0));
}

TEST_CASE("camera look_at projects its target to the principal point") {
    const auto cam = CameraModel::look_at(Vec3(0, -0.2, 3), Vec3(0, 0, 0), Vec3(0, 1, 0), 80.0, 64, 48);
    cam.validate();
    const auto uv = cam.project(Vec3(0, 0, 0));
    CHECK(uv.x() == doctest::Approx(32.0));
    CHECK(uv.y() == doctest::Approx(24.0));
    // world up projects upwards in the image
    CHECK(cam.project(Vec3(0, 0.5, 0)).y() < uv.y());
    CHECK(cam.project(Vec3(0.5, 0, 0)).x() > uv.x());
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(0, 64), y = rng.uniform(0, 48);
        const Vec3 p = cam.center() + rng.uniform(1.0, 5.0) * cam.direction_through(x, y);
        const auto back = cam.project(p);
        CHECK(std::abs(back.x() - x) < 1e-9);
        CHECK(std::abs(back.y() - y) < 1e-9);
    }
    CameraModel bad = cam;
    bad.fx = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
