#include <doctest.h>

#include "polyhuman/checkpoint.hpp"
#include "polyhuman/config.hpp"
#include "polyhuman/trainer.hpp"

#include <fstream>

using namespace polyhuman;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
    RunConfig c;
    c.seed = 3;
    c.dataset.identities = 2;
    c.dataset.frames = 4;
    c.dataset.bones = 3;
    c.dataset.width = c.dataset.height = 16;
    c.dataset.focal = 20.0;
    c.dataset.reference_samples = 64;
    c.dataset.test_frame_stride = 2;
    c.model.code_dim = 8;
    c.model.joint_bands = 2;
    c.model.nonrigid = {3, 12, 1, 3};
    c.model.canonical = {3, 16, 1, 4, -1.0, 1.0};
    c.model.pose_width = 8;
    c.model.pose_depth = 1;
    c.model.skinning_grid = 5;
    c.model.bone_prior_sigma = 0.1;
    c.loss.scales = 2;
    c.train.iterations = 6;
    c.train.patches_per_iter = 2;
    c.train.patch_size = 4;
    c.train.samples = 12;
    c.train.snapshot_every = 2;
    c.train.log_every = 2;
    c.train.eval_samples = 16;
    return c;
}

struct TinyData {
    fs::path dir;
    RunConfig config;
    DatasetManifest manifest;
};

const TinyData& tiny_data() {
    static const TinyData data = [] {
        TinyData d;
        d.dir = fs::temp_directory_path() / "polyhuman_training_test";
        fs::remove_all(d.dir);
        d.config = tiny_config();
        SynthConfig s = d.config.dataset;
        s.seed = d.config.seed;
        d.manifest = export_dataset(s, d.dir / "data");
        return d;
    }();
    return data;
}

std::vector<double> losses(Trainer& t, std::size_t steps) {
    std::vector<double> out;
    for (std::size_t i = 0; i < steps; ++i) out.push_back(t.step().total);
    return out;
}

} // namespace

TEST_CASE("config defaults, round trip and unknown keys") {
    const RunConfig d;
    CHECK(d.train.patches_per_iter == 6);
    CHECK(d.train.patch_size == 32);
    CHECK(d.train.samples == 128);
    CHECK(d.train.lr_fast == 5e-4);
    CHECK(d.train.lr_slow == 5e-5);
    CHECK(d.train.beta1 == 0.9);
    CHECK(d.train.beta2 == 0.999);
    CHECK(d.model.code_dim == 256);
    CHECK(d.loss.lambda == 0.2);
    CHECK(d.dataset.identities == 2);
    CHECK(d.dataset.frames == 30);

    const auto text = dump_config(tiny_config());
    const auto back = parse_config(text);
    CHECK(dump_config(back) == text);
    CHECK(back.model.canonical.width == 16);
    CHECK(back.model.bone_prior_sigma == 0.1);

    CHECK(dump_config(parse_config("")) == dump_config(RunConfig{}));
    CHECK(parse_config("train:\n  iterations: 7\n").train.iterations == 7);
    try {
        parse_config("train:\n  iteratoins: 7\n");
        FAIL("unknown key accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.iteratoins") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("colour: red\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("model:\n  canonical:\n    depht: 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("train:\n  iterations: -4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("train:\n  iterations: 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("train:\n  lr_fast: abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("loss:\n  perceptual: vgg\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("dataset:\n  bones: 9\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[1, 2"), ConfigError);
}

TEST_CASE("checkpoint encoding and corruption") {
    Checkpoint c;
    c.config = "seed: 1\n";
    c.subjects = "[]\n";
    c.iteration = 42;
    c.parameters = {{"a", {2, 3}, {1, 2, 3, 4, 5, 0.25}, false}, {"b", {1}, {-7.5}, false}};
    c.optimizer = {{"adam.a.m", {2}, {0.1, 1e-300}, true}};
    const auto bytes = encode_checkpoint(c);
    CHECK(decode_checkpoint(bytes) == c);

    auto truncated = bytes;
    truncated.resize(bytes.size() / 2);
    CHECK_THROWS_AS(decode_checkpoint(truncated), CheckpointError);
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    CHECK_THROWS_WITH_AS(decode_checkpoint(flipped), doctest::Contains("CRC"), CheckpointError);
    auto version = bytes;
    version[4] = 9;
    CHECK_THROWS_WITH_AS(decode_checkpoint(version), doctest::Contains("version"), CheckpointError);
    CHECK_THROWS_AS(decode_checkpoint({1, 2, 3}), CheckpointError);

    const auto path = fs::temp_directory_path() / "polyhuman_ckpt_test.ckpt";
    save_checkpoint(c, path);
    CHECK(load_checkpoint(path) == c);
    fs::resize_file(path, fs::file_size(path) - 9);
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
    fs::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
}

TEST_CASE("parameter count grows by one identity's share") {
    RunConfig c = tiny_config();
    std::vector<SubjectSpec> subjects;
    for (std::uint64_t s = 0; s < 4; ++s) {
        const auto id = make_identity(s, 3);
        subjects.push_back(id.subject());
    }
    const std::size_t D = c.model.code_dim, G = c.model.skinning_grid, K = 3;
    std::size_t previous = 0;
    std::uintmax_t previous_bytes = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const Model m = make_model(c, {subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(n)});
        const std::size_t count = parameter_count(m.parameters());
        CHECK(m.per_identity_parameter_count() == D + G * G * G * (K + 1));
        const auto bytes = encode_checkpoint(make_checkpoint(c, m, 0)).size();
        if (n > 1) {
            CHECK(count - previous == D + G * G * G * (K + 1));
            const double expected = 4.0 * static_cast<double>(D + G * G * G * (K + 1));
            CHECK(std::abs(static_cast<double>(bytes - previous_bytes) - expected) <= 0.25 * expected);
        }
        previous = count;
        previous_bytes = bytes;
    }
}

TEST_CASE("optimizer groups cover every parameter once") {
    RunConfig c = tiny_config();
    const auto& data = tiny_data();
    const Model m = make_model(c, data.manifest.subjects());
    auto groups = optimizer_groups(m, c.train);
    CHECK_NOTHROW(audit_groups(m, groups));
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].lr == c.train.lr_fast);
    for (const auto& t : groups[0].params) {
        const auto& n = t.name();
        CHECK((n.rfind("identity.", 0) == 0 || n.rfind("fields.nonrigid.", 0) == 0));
    }
    std::size_t canonical_slow = 0;
    for (const auto& t : groups[1].params) canonical_slow += t.name().rfind("fields.canonical.", 0) == 0;
    CHECK(canonical_slow > 0);

    c.train.canonical_in_fast_group = true;
    groups = optimizer_groups(m, c.train);
    for (const auto& t : groups[1].params) CHECK(t.name().rfind("fields.canonical.", 0) != 0);
    CHECK_NOTHROW(audit_groups(m, groups));
    groups[1].params.push_back(groups[0].params.front());
    CHECK_THROWS_AS(audit_groups(m, groups), std::logic_error);
    for (const auto& p : m.parameters()) CHECK(p.tensor.name() == p.name);
}

TEST_CASE("patch rectangles follow the mask") {
    Mask mask{32, 32, std::vector<std::uint8_t>(32 * 32, 0)};
    for (int v = 10; v <= 14; ++v)
        for (int u = 20; u <= 22; ++u) mask.data[static_cast<std::size_t>(v) * 32 + u] = 1;
    const auto r = mask_bounds(mask, 8);
    CHECK(r.u0 == 12);
    CHECK(r.u1 == 30);
    CHECK(r.v0 == 2);
    CHECK(r.v1 == 22);
    Mask empty{8, 8, std::vector<std::uint8_t>(64, 0)};
    const auto e = mask_bounds(empty, 8);
    CHECK(e.u0 == 0);
    CHECK(e.u1 == 7);

    Rng rng(1);
    for (const auto& o : sample_patch_origins(r, 32, 32, 8, 200, rng)) {
        CHECK(o.u >= r.u0);
        CHECK(o.u + 8 - 1 <= r.u1);
        CHECK(o.v >= r.v0);
        CHECK(o.v + 8 - 1 <= r.v1);
    }
    for (const auto& o : sample_patch_origins({0, 0, 3, 3}, 32, 32, 16, 20, rng)) {
        CHECK(o.u == 0);
        CHECK(o.v == 0);
    }
}

TEST_CASE("untrained model with background-dominated skinning renders the background") {
    RunConfig c = tiny_config();
    c.model.bone_prior_sigma = 0.0;
    c.model.background_logit = 14.0;
    c.model.skinning_noise = 0.0;
    const auto& data = tiny_data();
    const Model m = make_model(c, data.manifest.subjects());
    const auto& rec = *data.manifest.split(Split::Train)[0];
    Rng rng(0);
    RenderOptions opt;
    opt.samples = 16;
    const auto px = patch_pixels(4, 4, 8);
    const auto out = render_pixels(m, rec.identity, data.manifest.pose(rec), px, data.manifest.scene_box, opt, rng);
    CHECK(out.rgb.dim(0) == 64);
    CHECK(out.evaluated_samples == 0);
    for (double v : out.rgb.data()) CHECK(v == 1.0);
}

TEST_CASE("training is deterministic and honors the budget") {
    const auto& data = tiny_data();
    Trainer a(data.config, data.manifest);
    Trainer b(data.config, data.manifest);
    const auto la = losses(a, 4);
    CHECK(la == losses(b, 4));
    CHECK(a.iteration() == 4);
    for (double l : la) CHECK(std::isfinite(l));
    for (const auto& p : a.model().parameters())
        for (double v : p.tensor.data()) CHECK(static_cast<double>(static_cast<float>(v)) == v);

    const auto out = data.dir / "run";
    fs::remove_all(out);
    Trainer t(data.config, data.manifest);
    const auto result = train(t, out);
    CHECK(t.iteration() == data.config.train.iterations);
    CHECK(result.log.size() == data.config.train.iterations);
    CHECK(fs::exists(out / "snapshots" / "iter_00000002.ckpt"));
    CHECK(fs::exists(out / "snapshots" / "iter_00000004.ckpt"));
    CHECK_FALSE(fs::exists(out / "snapshots" / "iter_00000006.ckpt"));
    CHECK(fs::exists(out / "final.ckpt"));
    CHECK(fs::exists(out / "model.ckpt"));
    CHECK(fs::exists(out / "train_metrics.json"));
    std::ifstream tsv(out / "train_log.tsv");
    std::size_t lines = 0;
    for (std::string l; std::getline(tsv, l);) ++lines;
    CHECK(lines == 1 + 3);
}

TEST_CASE("resume continues the counter and the trajectory") {
    const auto& data = tiny_data();
    Trainer full(data.config, data.manifest);
    const auto reference = losses(full, 6);

    Trainer first(data.config, data.manifest);
    losses(first, 3);
    const auto bytes = encode_checkpoint(first.checkpoint(true));
    Trainer second(data.config, data.manifest);
    second.resume(decode_checkpoint(bytes));
    CHECK(second.iteration() == 3);
    const auto rest = losses(second, 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(rest[i] == reference[3 + i]);

    Trainer model_only(data.config, data.manifest);
    CHECK_THROWS_AS(model_only.resume(first.checkpoint(false)), CheckpointError);
}

TEST_CASE("ablation without codes or pose condition never touches the codes") {
    const auto& data = tiny_data();
    RunConfig c = data.config;
    c.model.use_identity_codes = false;
    c.model.use_pose_condition = false;
    Trainer t(c, data.manifest);
    const auto before = t.model().identity_table.codes.to_vector();
    for (int i = 0; i < 3; ++i) {
        t.step();
        const auto& codes = t.model().identity_table.codes;
        if (codes.has_grad())
            for (double g : codes.grad()) CHECK(g == 0.0);
    }
    CHECK(t.model().identity_table.codes.to_vector() == before);
}

TEST_CASE("checkpoint round trip renders identical pixels") {
    const auto& data = tiny_data();
    Trainer t(data.config, data.manifest);
    losses(t, 2);
    const auto path = data.dir / "roundtrip.ckpt";
    save_checkpoint(t.checkpoint(false), path);
    const auto loaded = model_from_checkpoint(load_checkpoint(path));
    CHECK(loaded.iteration == 2);
    const auto& rec = *data.manifest.split(Split::Test)[1];
    RenderOptions opt;
    opt.samples = 16;
    opt.jitter = false;
    const Image a = render_image(t.model(), rec.identity, data.manifest.pose(rec), data.manifest.scene_box, opt, 5);
    const Image b = render_image(loaded.model, rec.identity, data.manifest.pose(rec), data.manifest.scene_box, opt, 5);
    CHECK(a.rgb == b.rgb);
    CHECK(a.alpha == b.alpha);

    RunConfig wider = data.config;
    wider.model.canonical.width = 20;
    const Model other = make_model(wider, data.manifest.subjects());
    CHECK_THROWS_WITH_AS(load_parameters(other, load_checkpoint(path).parameters),
                         doctest::Contains("fields.canonical.layer0"), CheckpointError);
}

TEST_CASE("evaluation table and self comparison") {
    const auto& data = tiny_data();
    const Model m = make_model(data.config, data.manifest.subjects());
    const auto report = evaluate(m, data.manifest, Split::Test, 8, 0);
    CHECK(report.rows.size() == data.manifest.split(Split::Test).size());
    CHECK(report.rows.size() == 2 * 2 * 2);
    CHECK(report.identity_psnr.size() == 2);
    const auto again = evaluate(m, data.manifest, Split::Test, 8, 0);
    CHECK(again.mean_psnr == report.mean_psnr);

    std::vector<EvalRow> rows;
    for (const auto* r : data.manifest.split(Split::Test)) {
        const Image gt = read_png(data.manifest.root / r->image);
        rows.push_back({r->identity, r->frame, r->camera, psnr(gt, gt), ssim(Image::filled(16, 16, Vec3::Ones()), Image::filled(16, 16, Vec3::Ones()))});
    }
    const auto self = summarize(rows, 2);
    CHECK(self.mean_psnr == kPsnrCap);
    CHECK(self.mean_ssim == doctest::Approx(1.0));
    write_report(report, data.dir / "eval.tsv", data.dir / "eval.json");
    CHECK(fs::exists(data.dir / "eval.json"));
}
