#include "polyhuman/trainer.hpp"

#include "polyhuman/ops.hpp"

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

namespace polyhuman {

namespace {

std::string number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string shape_text(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out + "]";
}

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

void round_to_float(const Model& model) {
    for (const auto& p : model.parameters()) {
        Tensor t = p.tensor;
        for (double& v : t.mutable_data()) v = static_cast<double>(static_cast<float>(v));
    }
}

Tensor image_rows(const Image& img, std::span<const Pixel> pixels) {
    std::vector<double> v;
    v.reserve(pixels.size() * 3);
    for (const auto& p : pixels) {
        const std::size_t i = (static_cast<std::size_t>(p.v) * img.width + p.u) * 3;
        v.insert(v.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(i), img.rgb.begin() + static_cast<std::ptrdiff_t>(i + 3));
    }
    return Tensor::from({pixels.size(), 3}, std::move(v));
}

} // namespace

PixelRect mask_bounds(const Mask& mask, int dilation) {
    PixelRect r{mask.width, mask.height, -1, -1};
    for (int v = 0; v < mask.height; ++v)
        for (int u = 0; u < mask.width; ++u)
            if (mask.data[static_cast<std::size_t>(v) * mask.width + u]) {
                r.u0 = std::min(r.u0, u);
                r.v0 = std::min(r.v0, v);
                r.u1 = std::max(r.u1, u);
                r.v1 = std::max(r.v1, v);
            }
    if (r.empty()) return {0, 0, mask.width - 1, mask.height - 1};
    r.u0 = std::max(0, r.u0 - dilation);
    r.v0 = std::max(0, r.v0 - dilation);
    r.u1 = std::min(mask.width - 1, r.u1 + dilation);
    r.v1 = std::min(mask.height - 1, r.v1 + dilation);
    return r;
}

std::vector<Pixel> sample_patch_origins(const PixelRect& rect, int width, int height, int size, std::size_t count,
                                        Rng& rng) {
    if (size > width || size > height) throw std::invalid_argument("patch larger than the image");
    auto pick = [&](int lo, int hi, int extent) {
        int start;
        if (hi - lo + 1 <= size) {
            start = (lo + hi + 1) / 2 - size / 2;
        } else {
            start = lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 2 - size)));
        }
        return std::clamp(start, 0, extent - size);
    };
    std::vector<Pixel> out;
    for (std::size_t i = 0; i < count; ++i) {
        const int u = pick(rect.u0, rect.u1, width);
        const int v = pick(rect.v0, rect.v1, height);
        out.push_back({u, v});
    }
    return out;
}

Model make_model(const RunConfig& config, std::vector<SubjectSpec> subjects) {
    Model m = Model::create(config.model, std::move(subjects), mix_seed(config.seed, "model"));
    if (config.train.single_precision_storage) round_to_float(m);
    return m;
}

std::vector<Adam::Group> optimizer_groups(const Model& model, const TrainConfig& config) {
    Adam::Group fast{"fast", {}, config.lr_fast};
    Adam::Group slow{"slow", {}, config.lr_slow};
    for (const auto& p : model.parameters()) {
        const bool is_fast = starts_with(p.name, "identity.") || starts_with(p.name, "fields.nonrigid.") ||
                             (config.canonical_in_fast_group && starts_with(p.name, "fields.canonical."));
        (is_fast ? fast : slow).params.push_back(p.tensor);
    }
    return {fast, slow};
}

void audit_groups(const Model& model, const std::vector<Adam::Group>& groups) {
    std::map<const void*, int> seen;
    std::vector<std::pair<std::string, Tensor>> all;
    for (const auto& p : model.parameters()) all.emplace_back(p.name, p.tensor);
    for (const auto& [name, t] : all) {
        int hits = 0;
        for (const auto& g : groups)
            for (const auto& q : g.params)
                if (q.same_node(t)) ++hits;
        if (hits != 1) {
            throw std::logic_error("parameter " + name + " appears in " + std::to_string(hits) + " optimizer groups");
        }
    }
    std::size_t total = 0;
    for (const auto& g : groups) total += g.params.size();
    if (total != all.size()) throw std::logic_error("optimizer groups hold tensors outside the model");
}

std::string encode_subjects(const std::vector<SubjectSpec>& subjects) {
    YAML::Emitter out;
    out << YAML::BeginSeq;
    auto vec = [&](const Vec3& v) {
        out << YAML::Flow << YAML::BeginSeq << number(v.x()) << number(v.y()) << number(v.z()) << YAML::EndSeq;
    };
    for (const auto& s : subjects) {
        out << YAML::BeginMap;
        out << YAML::Key << "parent" << YAML::Value << YAML::Flow << s.topology.parent;
        out << YAML::Key << "rest_offsets" << YAML::Value << YAML::BeginSeq;
        for (const auto& o : s.topology.rest_offsets) vec(o);
        out << YAML::EndSeq;
        out << YAML::Key << "canonical_box" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "lo" << YAML::Value;
        vec(s.canonical_box.lo);
        out << YAML::Key << "hi" << YAML::Value;
        vec(s.canonical_box.hi);
        out << YAML::EndMap;
        if (!s.bone_tips.empty()) {
            out << YAML::Key << "bone_tips" << YAML::Value << YAML::BeginSeq;
            for (const auto& t : s.bone_tips) vec(t);
            out << YAML::EndSeq;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    return std::string(out.c_str()) + "\n";
}

std::vector<SubjectSpec> decode_subjects(const std::string& text) {
    std::vector<SubjectSpec> out;
    try {
        const auto root = YAML::Load(text);
        auto vec = [](const YAML::Node& n) { return Vec3(n[0].as<double>(), n[1].as<double>(), n[2].as<double>()); };
        for (const auto& n : root) {
            SubjectSpec s;
            s.topology.parent = n["parent"].as<std::vector<int>>();
            for (const auto& o : n["rest_offsets"]) s.topology.rest_offsets.push_back(vec(o));
            s.canonical_box = {vec(n["canonical_box"]["lo"]), vec(n["canonical_box"]["hi"])};
            if (n["bone_tips"])
                for (const auto& t : n["bone_tips"]) s.bone_tips.push_back(vec(t));
            s.topology.validate();
            out.push_back(std::move(s));
        }
    } catch (const YAML::Exception& e) {
        throw CheckpointError("malformed subject table: " + e.msg);
    }
    return out;
}

Checkpoint make_checkpoint(const RunConfig& config, const Model& model, std::uint64_t iteration, const Adam* optimizer) {
    Checkpoint c;
    c.config = dump_config(config);
    c.subjects = encode_subjects(model.subjects());
    c.iteration = iteration;
    for (const auto& p : model.parameters()) {
        const auto d = p.tensor.data();
        c.parameters.push_back({p.name, p.tensor.shape(), {d.begin(), d.end()}, false});
    }
    if (optimizer) {
        std::size_t s = 0;
        for (const auto& g : optimizer->groups()) {
            for (const auto& p : g.params) {
                const auto& st = optimizer->states()[s++];
                const std::string base = "adam." + p.name();
                std::vector<double> m = st.m, v = st.v;
                if (m.empty()) m.assign(p.numel(), 0.0);
                if (v.empty()) v.assign(p.numel(), 0.0);
                c.optimizer.push_back({base + ".m", p.shape(), std::move(m), true});
                c.optimizer.push_back({base + ".v", p.shape(), std::move(v), true});
                c.optimizer.push_back({base + ".t", {1}, {static_cast<double>(st.t)}, true});
            }
        }
    }
    return c;
}

void load_parameters(const Model& model, const std::vector<Blob>& blobs) {
    const auto params = model.parameters();
    for (std::size_t i = 0; i < std::max(params.size(), blobs.size()); ++i) {
        if (i >= blobs.size()) throw CheckpointError("checkpoint lacks blob " + params[i].name);
        if (i >= params.size()) throw CheckpointError("checkpoint has unexpected blob " + blobs[i].name);
        const auto& b = blobs[i];
        const auto& p = params[i];
        if (b.name != p.name) throw CheckpointError("blob " + b.name + " found where " + p.name + " was expected");
        if (b.shape != p.tensor.shape()) {
            throw CheckpointError("shape mismatch for blob " + b.name + ": checkpoint " + shape_text(b.shape) +
                                  " vs model " + shape_text(p.tensor.shape()));
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor t = params[i].tensor;
        std::copy(blobs[i].values.begin(), blobs[i].values.end(), t.mutable_data().begin());
    }
}

LoadedModel model_from_checkpoint(const Checkpoint& ckpt) {
    RunConfig cfg;
    try {
        cfg = parse_config(ckpt.config);
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("checkpoint config: ") + e.what());
    }
    Model model = make_model(cfg, decode_subjects(ckpt.subjects));
    load_parameters(model, ckpt.parameters);
    return {cfg, std::move(model), ckpt.iteration};
}

SplitData load_split(const DatasetManifest& manifest, Split split, int dilation) {
    SplitData out;
    out.records = manifest.split(split);
    for (const auto* r : out.records) {
        out.images.push_back(read_png(manifest.root / r->image));
        const auto& img = out.images.back();
        if (img.width != manifest.width || img.height != manifest.height) {
            throw std::runtime_error((manifest.root / r->image).string() + " does not match the declared extents");
        }
        out.rects.push_back(mask_bounds(read_mask_png(manifest.root / r->mask), dilation));
    }
    return out;
}

Trainer::Trainer(RunConfig config, const DatasetManifest& manifest)
    : config_(std::move(config)), manifest_(&manifest), model_(make_model(config_, manifest.subjects())) {
    config_.validate();
    if (static_cast<int>(config_.train.patch_size) > manifest.width ||
        static_cast<int>(config_.train.patch_size) > manifest.height) {
        throw std::invalid_argument("patch size exceeds the dataset image extents");
    }
    train_ = load_split(manifest, Split::Train, config_.train.mask_dilation);
    if (train_.records.empty()) throw std::invalid_argument("dataset has no training frames");
    auto groups = optimizer_groups(model_, config_.train);
    audit_groups(model_, groups);
    optimizer_ = Adam(std::move(groups), config_.train.beta1, config_.train.beta2);
    optimizer_.set_single_precision_storage(config_.train.single_precision_storage);
    perceptual_ = make_perceptual(config_.loss);
}

void Trainer::resume(const Checkpoint& ckpt) {
    load_parameters(model_, ckpt.parameters);
    if (ckpt.optimizer.empty()) throw CheckpointError("checkpoint holds no optimizer state; cannot resume");
    std::map<std::string, const Blob*> byname;
    for (const auto& b : ckpt.optimizer) byname[b.name] = &b;
    std::size_t s = 0;
    for (const auto& g : optimizer_.groups()) {
        for (const auto& p : g.params) {
            const std::string base = "adam." + p.name();
            for (const char* suffix : {".m", ".v", ".t"}) {
                if (!byname.count(base + suffix)) throw CheckpointError("checkpoint lacks optimizer blob " + base + suffix);
            }
            auto& st = optimizer_.states()[s++];
            st.m = byname[base + ".m"]->values;
            st.v = byname[base + ".v"]->values;
            st.t = static_cast<std::uint64_t>(byname[base + ".t"]->values.at(0));
            if (st.m.size() != p.numel() || st.v.size() != p.numel()) {
                throw CheckpointError("optimizer blob " + base + " does not match the parameter shape");
            }
        }
    }
    iteration_ = ckpt.iteration;
}

IterationLog Trainer::step() {
    const auto start = std::chrono::steady_clock::now();
    const auto& tc = config_.train;
    Rng rng = Rng::substream(config_.seed, "train", iteration_);
    const std::size_t pick = rng.index(train_.records.size());
    const FrameRecord& rec = *train_.records[pick];
    const Image& gt_image = train_.images[pick];
    const int size = static_cast<int>(tc.patch_size);
    const auto origins = sample_patch_origins(train_.rects[pick], gt_image.width, gt_image.height, size,
                                              tc.patches_per_iter, rng);
    std::vector<Pixel> pixels;
    for (const auto& o : origins) {
        const auto patch = patch_pixels(o.u, o.v, size);
        pixels.insert(pixels.end(), patch.begin(), patch.end());
    }
    RenderOptions options;
    options.samples = tc.samples;
    options.jitter = true;
    if (tc.anneal_iterations > 0) {
        options.anneal_alpha = static_cast<double>(config_.model.nonrigid.point_bands) *
                               std::min(1.0, static_cast<double>(iteration_) / static_cast<double>(tc.anneal_iterations));
    }
    const PoseFrame pose = manifest_->pose(rec);
    optimizer_.zero_grad();
    const auto out = render_pixels(model_, rec.identity, pose, pixels, manifest_->scene_box, options, rng);
    const auto terms = total_loss(out.rgb, image_rows(gt_image, pixels), tc.patch_size, config_.loss, perceptual_.get());
    const double total = terms.total.item();
    if (!std::isfinite(total)) {
        throw DivergenceError(iteration_, "loss",
                              "non-finite loss at iteration " + std::to_string(iteration_));
    }
    terms.total.backward();
    for (const auto& p : model_.parameters()) {
        if (!p.tensor.has_grad()) continue;
        for (double g : p.tensor.grad()) {
            if (!std::isfinite(g)) {
                throw DivergenceError(iteration_, p.name,
                                      "non-finite gradient in " + p.name + " at iteration " + std::to_string(iteration_));
            }
        }
    }
    const double decay = std::pow(tc.lr_decay, static_cast<double>(iteration_) / static_cast<double>(tc.iterations));
    auto& groups = optimizer_.groups();
    groups[0].lr = tc.lr_fast * decay;
    groups[1].lr = tc.lr_slow * decay;
    optimizer_.step();
    ++iteration_;
    IterationLog log;
    log.iteration = iteration_;
    log.total = total;
    log.l2 = terms.l2.item();
    log.perceptual = terms.perceptual.item();
    log.record = pick;
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return log;
}

Checkpoint Trainer::checkpoint(bool with_optimizer) const {
    return make_checkpoint(config_, model_, iteration_, with_optimizer ? &optimizer_ : nullptr);
}

TrainOutputs train(Trainer& trainer, const std::filesystem::path& out_dir, std::ostream* log) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto& tc = trainer.config().train;
    TrainOutputs outputs;
    const bool fresh = trainer.iteration() == 0;
    std::ofstream tsv(out_dir / "train_log.tsv", fresh ? std::ios::trunc : std::ios::app);
    if (!tsv) throw std::runtime_error("cannot write " + (out_dir / "train_log.tsv").string());
    if (fresh) tsv << "iteration\ttotal\tl2\tperceptual\tseconds\n";
    double window_total = 0, window_l2 = 0, window_per = 0, elapsed = 0;
    std::size_t window = 0;
    while (trainer.iteration() < tc.iterations) {
        const auto it = trainer.step();
        outputs.log.push_back(it);
        window_total += it.total;
        window_l2 += it.l2;
        window_per += it.perceptual;
        elapsed += it.seconds;
        ++window;
        if (it.iteration % tc.log_every == 0 || it.iteration == tc.iterations) {
            const double n = static_cast<double>(window);
            tsv << it.iteration << '\t' << number(window_total / n) << '\t' << number(window_l2 / n) << '\t'
                << number(window_per / n) << '\t' << number(elapsed) << '\n';
            tsv.flush();
            if (log) {
                *log << "iter " << it.iteration << "  loss " << window_total / n << "  l2 " << window_l2 / n
                     << "  perceptual " << window_per / n << "  " << elapsed << " s\n";
                log->flush();
            }
            window_total = window_l2 = window_per = 0;
            window = 0;
        }
        if (tc.snapshot_every > 0 && it.iteration % tc.snapshot_every == 0 && it.iteration != tc.iterations) {
            fs::create_directories(out_dir / "snapshots");
            char name[64];
            std::snprintf(name, sizeof name, "iter_%08llu.ckpt", static_cast<unsigned long long>(it.iteration));
            save_checkpoint(trainer.checkpoint(true), out_dir / "snapshots" / name);
        }
    }
    outputs.final_checkpoint = out_dir / "final.ckpt";
    outputs.model_checkpoint = out_dir / "model.ckpt";
    save_checkpoint(trainer.checkpoint(true), outputs.final_checkpoint);
    save_checkpoint(trainer.checkpoint(false), outputs.model_checkpoint);

    nlohmann::json j;
    j["iterations"] = trainer.iteration();
    j["log"] = nlohmann::json::array();
    for (const auto& l : outputs.log) {
        j["log"].push_back({{"iteration", l.iteration}, {"total", l.total}, {"l2", l.l2}, {"perceptual", l.perceptual},
                            {"seconds", l.seconds}});
    }
    std::ofstream(out_dir / "train_metrics.json") << j.dump(1) << "\n";
    return outputs;
}

EvalReport summarize(std::vector<EvalRow> rows, std::size_t identities) {
    EvalReport r;
    r.rows = std::move(rows);
    r.identity_psnr.assign(identities, 0.0);
    r.identity_ssim.assign(identities, 0.0);
    std::vector<std::size_t> count(identities, 0);
    for (const auto& row : r.rows) {
        r.identity_psnr[row.identity] += row.psnr;
        r.identity_ssim[row.identity] += row.ssim;
        ++count[row.identity];
    }
    std::size_t used = 0;
    for (std::size_t i = 0; i < identities; ++i) {
        if (count[i] == 0) continue;
        r.identity_psnr[i] /= static_cast<double>(count[i]);
        r.identity_ssim[i] /= static_cast<double>(count[i]);
        r.mean_psnr += r.identity_psnr[i];
        r.mean_ssim += r.identity_ssim[i];
        ++used;
    }
    if (used > 0) {
        r.mean_psnr /= static_cast<double>(used);
        r.mean_ssim /= static_cast<double>(used);
    }
    return r;
}

EvalReport evaluate(const Model& model, const DatasetManifest& manifest, Split split, std::size_t samples,
                    std::uint64_t seed) {
    RenderOptions options;
    options.samples = samples;
    options.jitter = false;
    std::vector<EvalRow> rows;
    for (const auto* r : manifest.split(split)) {
        const Image gt = read_png(manifest.root / r->image);
        const Image pred = render_image(model, r->identity, manifest.pose(*r), manifest.scene_box, options,
                                        mix_seed(seed, "eval"));
        rows.push_back({r->identity, r->frame, r->camera, psnr(pred, gt), ssim(pred, gt)});
    }
    return summarize(std::move(rows), manifest.identities.size());
}

void write_report(const EvalReport& report, const std::filesystem::path& tsv, const std::filesystem::path& json_path) {
    std::ofstream out(tsv);
    if (!out) throw std::runtime_error("cannot write " + tsv.string());
    out << "identity\tframe\tcamera\tpsnr\tssim\n";
    for (const auto& r : report.rows) {
        out << r.identity << '\t' << r.frame << '\t' << r.camera << '\t' << number(r.psnr) << '\t' << number(r.ssim) << '\n';
    }
    nlohmann::json j;
    j["mean_psnr"] = report.mean_psnr;
    j["mean_ssim"] = report.mean_ssim;
    j["perceptual"] = "substitute (not reported)";
    j["identities"] = nlohmann::json::array();
    for (std::size_t i = 0; i < report.identity_psnr.size(); ++i) {
        j["identities"].push_back({{"identity", i}, {"psnr", report.identity_psnr[i]}, {"ssim", report.identity_ssim[i]}});
    }
    j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows) {
        j["rows"].push_back({{"identity", r.identity}, {"frame", r.frame}, {"camera", r.camera}, {"psnr", r.psnr}, {"ssim", r.ssim}});
    }
    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("cannot write " + json_path.string());
    js << j.dump(2) << "\n";
}

} // namespace polyhuman
