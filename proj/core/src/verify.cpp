#include "polyhuman/verify.hpp"

#include "polyhuman/encoding.hpp"
#include "polyhuman/losses.hpp"
#include "polyhuman/model.hpp"
#include "polyhuman/ops.hpp"
#include "polyhuman/renderer.hpp"
#include "polyhuman/rng.hpp"
#include "polyhuman/skeleton.hpp"
#include "polyhuman/synthdata.hpp"

#include <algorithm>
#include <cmath>

namespace polyhuman {

namespace {

Tensor random_param(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::parameter(std::move(shape), std::move(v));
}

Tensor random_const(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from(std::move(shape), std::move(v));
}

} // namespace

std::vector<GradCheckCase> pipeline_grad_checks(std::uint64_t seed) {
    std::vector<GradCheckCase> cases;
    auto s = [&](std::uint64_t k) { return mix_seed(seed, "pipeline-gradcheck", k); };
    cases.push_back({"composite", [=] {
                         Rng rng(s(1));
                         const std::size_t R = 3, M = 6;
                         Tensor colors = random_param(rng, {R * M, 3}, 0.0, 1.0);
                         Tensor dens = random_param(rng, {R * M, 1}, 0.0, 3.0);
                         std::vector<double> deltas(R * M);
                         for (auto& d : deltas) d = rng.uniform(0.05, 0.3);
                         Tensor w = random_const(rng, {R, 4});
                         auto f = [&] { return sum(mul(composite(colors, dens, deltas, R, M), w)); };
                         std::vector<std::pair<Tensor, std::size_t>> probes;
                         for (std::size_t i = 0; i < colors.numel(); ++i) probes.emplace_back(colors, i);
                         for (std::size_t i = 0; i < dens.numel(); ++i) probes.emplace_back(dens, i);
                         return grad_check(f, probes);
                     }});
    cases.push_back({"positional_encode", [=] {
                         Rng rng(s(2));
                         Tensor x = random_param(rng, {4, 3});
                         Tensor w = random_const(rng, {4, 24});
                         return grad_check([&](const Tensor& t) { return sum(mul(positional_encode(t, {4}), w)); }, x);
                     }});
    cases.push_back({"positional_encode_annealed", [=] {
                         Rng rng(s(3));
                         Tensor x = random_param(rng, {4, 3});
                         Tensor w = random_const(rng, {4, 24});
                         return grad_check(
                             [&](const Tensor& t) { return sum(mul(positional_encode(t, {4}, 2.4), w)); }, x);
                     }});
    cases.push_back({"rodrigues", [=] {
                         Rng rng(s(4));
                         Tensor x = random_param(rng, {3, 3});
                         Tensor w = random_const(rng, {3, 9});
                         return grad_check([&](const Tensor& t) { return sum(mul(rodrigues(t), w)); }, x);
                     }});
    cases.push_back({"l2_loss", [=] {
                         Rng rng(s(5));
                         Tensor x = random_param(rng, {16, 3}, 0.0, 1.0);
                         Tensor g = random_const(rng, {16, 3}, 0.0, 1.0);
                         return grad_check([&](const Tensor& t) { return l2_loss(t, g); }, x);
                     }});
    cases.push_back({"gradient_l1_loss", [=] {
                         Rng rng(s(6));
                         Tensor x = random_param(rng, {16, 3}, 0.0, 1.0);
                         Tensor g = random_const(rng, {16, 3}, 0.0, 1.0);
                         return grad_check([&](const Tensor& t) { return GradientL1Loss(2)(t, g, 4); }, x);
                     }});
    return cases;
}

GradCheckCase end_to_end_grad_check(std::uint64_t seed, std::size_t probe_count) {
    GradCheckCase c;
    c.name = "end_to_end_pixel_loss";
    c.tolerance = 1e-3;
    c.run = [=] {
        ModelConfig cfg;
        cfg.code_dim = 8;
        cfg.joint_bands = 2;
        cfg.nonrigid = {3, 16, 1, 4};
        cfg.canonical = {3, 16, 1, 4, 0.0, 1.0};
        cfg.pose_width = 8;
        cfg.pose_depth = 1;
        cfg.skinning_grid = 6;
        cfg.bone_prior_sigma = 0.15;

        std::vector<ToyIdentity> toys{make_identity(seed, 3), make_identity(seed + 1, 3)};
        std::vector<SubjectSpec> subjects;
        for (const auto& t : toys) subjects.push_back(t.subject());
        const Model model = Model::create(cfg, subjects, seed);

        // Zero-initialized layers would hide every path behind them.
        Rng rng = Rng::substream(seed, "e2e");
        const auto params = model.parameters();
        for (const auto& p : params) {
            Tensor t = p.tensor;
            auto d = t.mutable_data();
            bool zero = true;
            for (double v : d) zero = zero && v == 0.0;
            if (zero)
                for (double& v : d) v = rng.normal(0.0, 0.1);
        }

        const std::size_t id = 1;
        PoseFrame pose = make_motion(toys[id], 4, seed)[2];
        pose.camera = CameraModel::look_at(Vec3(0.2, 0.3, 3.0), Vec3::Zero(), Vec3::UnitY(), 24.0, 16, 16);
        const Box scene = pose_body(toys[id], pose).bounds.expanded(0.05);
        const auto pixels = patch_pixels(6, 5, 4);
        Tensor gt = random_const(rng, {16, 3}, 0.0, 1.0);
        LossConfig loss;
        loss.scales = 2;
        RenderOptions options;
        options.samples = 24;
        options.jitter = false;

        std::vector<std::pair<Tensor, std::size_t>> probes;
        for (const auto& p : params) {
            if (p.name == "identity.codes") {
                for (std::size_t k = 0; k < 4; ++k) probes.emplace_back(p.tensor, id * cfg.code_dim + rng.index(cfg.code_dim));
            } else if (p.name.rfind("identity.w_", 0) == 0) {
                for (std::size_t k = 0; k < 3; ++k) probes.emplace_back(p.tensor, rng.index(p.tensor.numel()));
            }
        }
        std::vector<std::size_t> others;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& n = params[i].name;
            if (n.rfind("identity.", 0) != 0 && n != "skinning.identity0.logits") others.push_back(i);
        }
        while (probes.size() < probe_count) {
            const auto& p = params[others[rng.index(others.size())]];
            probes.emplace_back(p.tensor, rng.index(p.tensor.numel()));
        }
        auto f = [&] {
            Rng render_rng(0);
            const auto out = render_pixels(model, id, pose, pixels, scene, options, render_rng);
            return total_loss(out.rgb, gt, 4, loss).total;
        };
        // Analytic gradients once, then central differences per probe.
        for (const auto& p : params) Tensor(p.tensor).zero_grad();
        f().backward();
        std::vector<double> analytic, numeric;
        for (auto& [t, i] : probes) analytic.push_back(t.has_grad() ? t.grad()[i] : 0.0);
        const double eps = 1e-6;
        for (auto& [t, i] : probes) {
            Tensor leaf = t;
            const double saved = leaf.data()[i];
            leaf.mutable_data()[i] = saved + eps;
            const double up = f().item();
            leaf.mutable_data()[i] = saved - eps;
            const double down = f().item();
            leaf.mutable_data()[i] = saved;
            numeric.push_back((up - down) / (2 * eps));
        }
        double scale = 0.0;
        for (double a : analytic) scale = std::max(scale, std::abs(a));
        GradCheckResult r;
        r.coordinates = probes.size();
        for (std::size_t k = 0; k < probes.size(); ++k) {
            const double denom = std::max({std::abs(analytic[k]), std::abs(numeric[k]), 1e-6 * scale, 1e-8});
            const double err = std::abs(analytic[k] - numeric[k]) / denom;
            if (err >= r.max_rel_error) {
                r.max_rel_error = err;
                r.worst_coordinate = k;
                r.analytic = analytic[k];
                r.numeric = numeric[k];
            }
        }
        return r;
    };
    return c;
}

std::vector<GradCheckCase> full_grad_suite(std::uint64_t seed) {
    auto cases = engine_grad_checks(seed);
    for (auto& c : pipeline_grad_checks(seed)) cases.push_back(std::move(c));
    cases.push_back(end_to_end_grad_check(seed));
    return cases;
}

} // namespace polyhuman
