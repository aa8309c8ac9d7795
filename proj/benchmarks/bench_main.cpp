#include <benchmark/benchmark.h>

#include "polyhuman/encoding.hpp"
#include "polyhuman/losses.hpp"
#include "polyhuman/model.hpp"
#include "polyhuman/ops.hpp"
#include "polyhuman/renderer.hpp"
#include "polyhuman/rng.hpp"
#include "polyhuman/synthdata.hpp"

using namespace polyhuman;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, bool param) {
    auto v = rng.normal_vector(shape_numel(shape), 1.0);
    return param ? Tensor::parameter(std::move(shape), std::move(v)) : Tensor::from(std::move(shape), std::move(v));
}

void BM_MatmulForwardBackward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    Tensor x = random_tensor(rng, {n, 64}, false);
    Tensor w = random_tensor(rng, {64, 64}, true);
    for (auto _ : state) {
        Tensor y = sum(relu(matmul(x, w)));
        y.backward();
        benchmark::DoNotOptimize(w.grad().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(1024)->Arg(8192);

void BM_PositionalEncode(benchmark::State& state) {
    Rng rng(2);
    Tensor x = random_tensor(rng, {8192, 3}, false);
    const EncodingSpec spec{10};
    for (auto _ : state) benchmark::DoNotOptimize(positional_encode(x, spec).data().data());
    state.SetItemsProcessed(state.iterations() * 8192);
}
BENCHMARK(BM_PositionalEncode);

void BM_Composite(benchmark::State& state) {
    const std::size_t R = 1024, M = 64;
    Rng rng(3);
    Tensor colors = Tensor::parameter({R * M, 3}, std::vector<double>(R * M * 3, 0.5));
    Tensor density = Tensor::parameter({R * M, 1}, std::vector<double>(R * M, 1.0));
    std::vector<double> deltas(R * M, 0.02);
    for (auto _ : state) {
        Tensor out = sum(composite(colors, density, deltas, R, M));
        out.backward();
        benchmark::DoNotOptimize(density.grad().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(R));
}
BENCHMARK(BM_Composite);

void BM_RenderPatch(benchmark::State& state) {
    const auto toy = make_identity(0, 8);
    auto poses = make_motion(toy, 2, 5);
    PoseFrame pose = poses[1];
    pose.camera = CameraModel::look_at(Vec3(0, 0.3, 3), Vec3::Zero(), Vec3::UnitY(), 80, 64, 64);
    const Box scene = pose_body(toy, pose).bounds.expanded(0.05);
    ModelConfig config;
    config.code_dim = 64;
    config.nonrigid.width = 48;
    config.canonical.width = 64;
    config.skinning_grid = 16;
    config.bone_prior_sigma = 0.1;
    const Model model = Model::create(config, {toy.subject()}, 7);
    RenderOptions options;
    options.samples = static_cast<std::size_t>(state.range(0));
    const auto pixels = patch_pixels(24, 16, 16);
    Rng rng(4);
    for (auto _ : state) {
        const auto out = render_pixels(model, 0, pose, pixels, scene, options, rng);
        Tensor loss = sum(square(out.rgb));
        loss.backward();
        benchmark::DoNotOptimize(loss.item());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pixels.size()));
}
BENCHMARK(BM_RenderPatch)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
