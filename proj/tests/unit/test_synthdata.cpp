#include <doctest.h>

#include "polyhuman/renderer.hpp"
#include "polyhuman/synthdata.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace polyhuman;

namespace {

PoseFrame random_pose(const ToyIdentity& id, std::uint64_t seed) {
    Rng rng(seed);
    PoseFrame p;
    p.joints.assign(1, Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)));
    for (std::size_t k = 0; k < id.topology.joints(); ++k) {
        p.orientations.push_back(Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)));
    }
    return p;
}

PoseFrame rest_pose(const ToyIdentity& id) {
    PoseFrame p;
    p.joints.assign(1, Vec3::Zero());
    p.orientations.assign(id.topology.joints(), Vec3::Zero());
    return p;
}

Vec3 to_observation(const PosedBody& body, std::size_t k, const Vec3& canonical) {
    return body.rotations[k].transpose() * (canonical - body.translations[k]);
}

CameraModel front_camera(int size) {
    return CameraModel::look_at(Vec3(0, 0.3, 3.0), Vec3::Zero(), Vec3::UnitY(), 80.0 * size / 64.0, size, size);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("identities are deterministic and respect the bone count") {
    const auto a = make_identity(7);
    const auto b = make_identity(7);
    CHECK(a.topology == b.topology);
    REQUIRE(a.capsules.size() == b.capsules.size());
    for (std::size_t k = 0; k < a.capsules.size(); ++k) {
        CHECK(a.capsules[k].a == b.capsules[k].a);
        CHECK(a.capsules[k].b == b.capsules[k].b);
        CHECK(a.capsules[k].radius == b.capsules[k].radius);
        CHECK(a.colors[k] == b.colors[k]);
    }
    for (std::size_t K = 2; K <= 8; ++K) {
        const auto id = make_identity(3, K);
        CHECK(id.topology.joints() == K);
        CHECK(id.capsules.size() == K);
        CHECK_NOTHROW(id.topology.validate());
    }
    CHECK_THROWS_AS(make_identity(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_identity(0, 9), std::invalid_argument);
}

TEST_CASE("distinct seeds give distinct colors") {
    for (std::uint64_t s = 0; s < 12; ++s) {
        for (std::uint64_t t = s + 1; t < 12; ++t) {
            const auto a = make_identity(s);
            const auto b = make_identity(t);
            for (std::size_t k = 0; k < a.colors.size(); ++k) {
                const double dist = (a.colors[k] - b.colors[k]).cwiseAbs().maxCoeff();
                CHECK_MESSAGE(dist >= 0.2, "seeds " << s << "," << t << " bone " << k);
            }
        }
    }
}

TEST_CASE("analytic density on the axis and out of support") {
    const auto id = make_identity(2);
    const auto pose = random_pose(id, 11);
    const auto body = pose_body(id, pose);
    // Leg midpoint: no other capsule reaches it.
    const auto& leg = id.capsules[5];
    const Vec3 x = to_observation(body, 5, 0.5 * (leg.a + leg.b));
    const auto f = analytic_field(x, body);
    CHECK(f.density == doctest::Approx(id.amplitude).epsilon(1e-12));
    CHECK((f.color - id.colors[5]).norm() < 1e-12);
    CHECK(analytic_field(x, pose, id).density == f.density);

    const auto far = analytic_field(Vec3(5, 5, 5), body);
    CHECK(far.density == 0.0);
    CHECK(far.color == Vec3::Zero());
    CHECK_FALSE(body.bounds.contains(Vec3(5, 5, 5)));
}

TEST_CASE("two overlapping bones blend by density") {
    ToyIdentity id;
    id.topology.parent = {-1, 0};
    id.topology.rest_offsets = {Vec3::Zero(), Vec3::Zero()};
    id.capsules = {{Vec3(-1, 0, 0), Vec3(0, 0, 0), 0.2}, {Vec3(0, 0, 0), Vec3(0, 1, 0), 0.2}};
    id.colors = {Vec3(1, 0, 0), Vec3(0, 0, 1)};
    id.amplitude = 40.0;
    id.softness = 0.2;
    const Vec3 p(0.05, 0.05, 0.0);
    const auto f = analytic_field(p, rest_pose(id), id);

    const double dA = std::sqrt(0.05 * 0.05 + 0.05 * 0.05);
    const double dB = 0.05;
    auto ss = [](double s) { return 3 * s * s - 2 * s * s * s; };
    const double sA = 40.0 * ss((0.2 - dA) / 0.2);
    const double sB = 40.0 * ss((0.2 - dB) / 0.2);
    CHECK(f.density == doctest::Approx(sA + sB).epsilon(1e-12));
    const Vec3 expect = (sA * id.colors[0] + sB * id.colors[1]) / (sA + sB);
    CHECK((f.color - expect).norm() < 1e-12);
}

TEST_CASE("smoothstep endpoints") {
    CHECK(smoothstep(-1.0) == 0.0);
    CHECK(smoothstep(0.0) == 0.0);
    CHECK(smoothstep(0.5) == 0.5);
    CHECK(smoothstep(1.0) == 1.0);
    CHECK(smoothstep(3.0) == 1.0);
}

TEST_CASE("reference quadrature is converged") {
    const auto id = make_identity(4);
    const auto pose = random_pose(id, 5);
    const Box scene = pose_body(id, pose).bounds.expanded(0.05);
    const auto cam = front_camera(40);
    const auto ref = oracle_render(cam, pose, id, scene, Vec3::Ones(), OracleQuality::Reference);
    const auto fine = oracle_render(cam, pose, id, scene, Vec3::Ones(), 2048);
    double err = 0.0;
    for (std::size_t i = 0; i < ref.rgb.size(); ++i) err += std::abs(ref.rgb[i] - fine.rgb[i]);
    err /= static_cast<double>(ref.rgb.size());
    CHECK(err < 1e-3);
    CHECK(oracle_samples(OracleQuality::Reference) == 1024);
}

TEST_CASE("oracle pixels agree with the differentiable compositor") {
    const auto id = make_identity(1);
    const auto pose = random_pose(id, 3);
    const auto body = pose_body(id, pose);
    const Box scene = body.bounds.expanded(0.05);
    const auto cam = front_camera(32);
    const std::size_t M = 1024;
    std::size_t checked = 0;
    for (int v = 4; v < 32; v += 5) {
        for (int u = 4; u < 32; u += 5) {
            const Ray ray = pixel_ray(cam, u, v, scene);
            if (ray.empty) continue;
            Rng rng(0);
            const auto depths = stratified_sample(ray, M, rng, false);
            const auto deltas = sample_deltas(depths, ray.near, ray.far);
            std::vector<double> colors, dens;
            for (double t : depths) {
                const auto f = analytic_field(ray.origin + t * ray.direction, body);
                colors.insert(colors.end(), {f.color.x(), f.color.y(), f.color.z()});
                dens.push_back(f.density);
            }
            const auto rgba = composite(Tensor::from({M, 3}, colors), Tensor::from({M, 1}, dens), deltas, 1, M);
            const auto oracle = oracle_ray(ray, body, M);
            for (int c = 0; c < 3; ++c) CHECK(std::abs(rgba[static_cast<std::size_t>(c)] - oracle.color[c]) < 1e-6);
            CHECK(std::abs(rgba[3] - oracle.alpha) < 1e-6);
            ++checked;
        }
    }
    CHECK(checked >= 20);
}

TEST_CASE("mask covers the pixel behind a capsule center") {
    const auto id = make_identity(9);
    const auto pose = random_pose(id, 8);
    const auto body = pose_body(id, pose);
    const Box scene = body.bounds.expanded(0.05);
    const auto cam = front_camera(48);
    const auto img = oracle_render(cam, pose, id, scene, Vec3::Ones(), OracleQuality::Fast);
    const auto mask = threshold_alpha(img);
    const auto& chest = id.capsules[1];
    const Vec3 center = to_observation(body, 1, 0.5 * (chest.a + chest.b));
    const Eigen::Vector2d px = cam.project(center);
    const int u = static_cast<int>(std::floor(px.x()));
    const int v = static_cast<int>(std::floor(px.y()));
    REQUIRE(u >= 0);
    REQUIRE(v >= 0);
    CHECK(mask.data[static_cast<std::size_t>(v) * 48 + static_cast<std::size_t>(u)] == 1);
    CHECK(mask.count() > 50);
}

TEST_CASE("empty scene renders background") {
    const auto id = make_identity(0);
    const auto pose = rest_pose(id);
    const Box scene = pose_body(id, pose).bounds;
    const auto cam = CameraModel::look_at(Vec3(0, 0, 3), Vec3(0, 0, 6), Vec3::UnitY(), 80, 16, 16);
    const Vec3 bg(0.2, 0.4, 0.6);
    const auto img = oracle_render(cam, pose, id, scene, bg, OracleQuality::Fast);
    for (int v = 0; v < 16; ++v)
        for (int u = 0; u < 16; ++u) CHECK((img.pixel(u, v) - bg).norm() == 0.0);
    CHECK(threshold_alpha(img).count() == 0);
}

TEST_CASE("motions are continuous and consistent with kinematics") {
    for (std::uint64_t s = 0; s < 4; ++s) {
        const auto id = make_identity(s);
        const auto frames = make_motion(id, 60, mix_seed(s, "motion"));
        REQUIRE(frames.size() == 60);
        double worst = 0.0;
        for (std::size_t f = 0; f + 1 < frames.size(); ++f) {
            for (std::size_t k = 0; k < id.topology.joints(); ++k) {
                const Mat3 r = rodrigues(frames[f].orientations[k]).transpose() * rodrigues(frames[f + 1].orientations[k]);
                worst = std::max(worst, Eigen::AngleAxisd(r).angle());
            }
        }
        CHECK(worst < 0.2);
        const auto bt = forward_kinematics(id.topology, frames[7]);
        for (std::size_t k = 0; k < id.topology.joints(); ++k)
            for (int a = 0; a < 3; ++a) CHECK(frames[7].joints[k][a] == doctest::Approx(bt.joints[k * 3 + static_cast<std::size_t>(a)]).epsilon(1e-12));
    }
    const auto id = make_identity(0);
    const auto a = make_motion(id, 10, 1);
    const auto b = make_motion(id, 10, 2);
    CHECK(a[3].orientations != b[3].orientations);
}

TEST_CASE("dataset export, counting and round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "polyhuman_synth_test";
    std::filesystem::remove_all(dir);
    SynthConfig cfg;
    cfg.width = cfg.height = 16;
    cfg.focal = 20.0;
    cfg.reference_samples = 48;
    const auto m = export_dataset(cfg, dir);

    CHECK(m.identities.size() == 2);
    CHECK(m.split(Split::Train).size() == 60);
    CHECK(m.split(Split::Test).size() == 2 * 6 * 2);
    CHECK(m.cameras.size() == 3);
    for (const auto& r : m.records) {
        CHECK(std::filesystem::exists(dir / r.image));
        const auto img = read_png(dir / r.image);
        CHECK(img.width == 16);
        CHECK(img.height == 16);
    }
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(std::filesystem::exists(dir / "cameras.txt"));
    CHECK(std::filesystem::exists(dir / "poses" / "1.txt"));

    const auto loaded = load_dataset(dir);
    CHECK(loaded == m);
    CHECK(loaded.subjects()[1] == m.subjects()[1]);
    const auto& rec = *m.split(Split::Test)[3];
    CHECK(loaded.pose(rec).camera == m.cameras[rec.camera]);
    const auto toy = loaded.toy_identity(1);
    CHECK(toy.colors == make_identity(cfg.seed + 1).colors);

    const auto again = std::filesystem::temp_directory_path() / "polyhuman_synth_test_again";
    std::filesystem::remove_all(again);
    export_dataset(cfg, again);
    CHECK(slurp(dir / "manifest.json") == slurp(again / "manifest.json"));
    CHECK(slurp(dir / "poses" / "0.txt") == slurp(again / "poses" / "0.txt"));
    CHECK(slurp(dir / m.records[5].image) == slurp(again / m.records[5].image));

    std::filesystem::remove(dir / m.records[0].mask);
    CHECK_THROWS_AS(load_dataset(dir), std::runtime_error);
    CHECK_THROWS_AS(load_dataset(dir / "nowhere"), std::runtime_error);
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(again);
}
