#include "polyhuman/checkpoint.hpp"
#include "polyhuman/config.hpp"
#include "polyhuman/trainer.hpp"
#include "polyhuman/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace polyhuman;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInput = 1, kDiverged = 2, kVerifyFailed = 3 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Writes to two streams at once.
class TeeBuf : public std::streambuf {
public:
    TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

protected:
    int overflow(int c) override {
        if (c == EOF) return !EOF;
        const int r1 = a_->sputc(static_cast<char>(c));
        const int r2 = b_->sputc(static_cast<char>(c));
        return r1 == EOF || r2 == EOF ? EOF : c;
    }
    int sync() override { return a_->pubsync() == 0 && b_->pubsync() == 0 ? 0 : -1; }

private:
    std::streambuf* a_;
    std::streambuf* b_;
};

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool print_defaults = false;

    std::string out;
    std::string data;
    std::string ckpt;
    std::string resume;
    std::string ablation = "none";
    std::string split = "test";
    std::string pose_file;
    std::string frames = "0:10";
    std::string corrupt;
    std::string alpha_out;
    std::optional<std::size_t> identities;
    std::optional<std::size_t> frame_count;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> samples;
    std::size_t identity = 0;
    std::size_t pose_source = 0;
    std::size_t frame = 0;
    std::size_t camera = 0;
    std::size_t probes = 48;
};

RunConfig base_config(const Options& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    return c;
}

void apply_ablation(RunConfig& c, const std::string& name) {
    if (name == "none") return;
    if (name == "no-id-codes") {
        c.model.use_identity_codes = false;
    } else if (name == "no-pose-condition") {
        c.model.use_pose_condition = false;
    } else if (name == "no-id-codes-and-pose") {
        c.model.use_identity_codes = false;
        c.model.use_pose_condition = false;
    } else {
        throw UsageError("unknown ablation '" + name + "' (none, no-id-codes, no-pose-condition, no-id-codes-and-pose)");
    }
}

void check_identity(std::size_t id, std::size_t count, const char* what) {
    if (id >= count) {
        throw UsageError(std::string(what) + " " + std::to_string(id) + " out of range; valid identities are 0.." +
                         std::to_string(count - 1));
    }
}

PoseFrame pose_from_file(const fs::path& path, std::size_t frame, std::size_t joints) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read pose file " + path.string());
    std::size_t row = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        if (row++ != frame) continue;
        std::istringstream ss(line);
        double index;
        ss >> index;
        PoseFrame p;
        p.joints.resize(joints);
        p.orientations.resize(joints);
        for (auto& j : p.joints) ss >> j.x() >> j.y() >> j.z();
        for (auto& o : p.orientations) ss >> o.x() >> o.y() >> o.z();
        if (!ss) throw UsageError(path.string() + ": frame " + std::to_string(frame) + " does not hold " +
                                  std::to_string(joints) + " joints");
        return p;
    }
    throw UsageError(path.string() + " has no frame " + std::to_string(frame));
}

int cmd_synth(const Options& o) {
    RunConfig c = base_config(o);
    if (o.identities) c.dataset.identities = *o.identities;
    if (o.frame_count) c.dataset.frames = *o.frame_count;
    c.validate();
    c.dataset.seed = c.seed;
    const fs::path out = o.out.empty() ? fs::path(c.output_dir) / "data" : fs::path(o.out);
    const auto m = export_dataset(c.dataset, out);
    std::cout << "dataset " << out.string() << "\n"
              << "  identities " << m.identities.size() << ", frames " << c.dataset.frames << ", bones "
              << c.dataset.bones << ", " << m.width << "x" << m.height << "\n"
              << "  train images " << m.split(Split::Train).size() << ", held-out images "
              << m.split(Split::Test).size() << " from " << m.cameras.size() - 1 << " novel cameras\n";
    return kOk;
}

int cmd_train(const Options& o) {
    const auto manifest = load_dataset(o.data);
    std::optional<Checkpoint> resume;
    RunConfig c;
    if (!o.resume.empty()) {
        resume = load_checkpoint(o.resume);
        c = parse_config(resume->config);
    } else {
        c = base_config(o);
        apply_ablation(c, o.ablation);
    }
    if (o.iterations) c.train.iterations = *o.iterations;
    if (o.samples) c.train.samples = *o.samples;
    c.validate();
    const fs::path out = o.out.empty() ? fs::path(c.output_dir) : fs::path(o.out);
    fs::create_directories(out);
    std::ofstream(out / "config.yaml") << dump_config(c);

    Trainer trainer(c, manifest);
    if (resume) trainer.resume(*resume);
    std::ofstream logfile(out / "train.log", resume ? std::ios::app : std::ios::trunc);
    TeeBuf tee(std::cout.rdbuf(), logfile.rdbuf());
    std::ostream log(&tee);
    log << "training " << manifest.identities.size() << " identities from iteration " << trainer.iteration() << " to "
        << c.train.iterations << "\n";
    try {
        const auto outputs = train(trainer, out, &log);
        log << "wrote " << outputs.final_checkpoint.string() << " and " << outputs.model_checkpoint.string() << "\n";
    } catch (const DivergenceError& e) {
        log << "diverged: " << e.what() << " (tensor " << e.tensor << ")\n";
        return kDiverged;
    }
    return kOk;
}

struct Loaded {
    LoadedModel model;
    DatasetManifest manifest;
};

Loaded load_for_render(const Options& o) {
    if (o.ckpt.empty()) throw UsageError("--ckpt is required");
    if (o.data.empty()) throw UsageError("--data is required (cameras and scene box)");
    Loaded l{model_from_checkpoint(load_checkpoint(o.ckpt)), load_dataset(o.data)};
    if (l.model.model.identities() != l.manifest.identities.size()) {
        throw UsageError("checkpoint has " + std::to_string(l.model.model.identities()) + " identities but the dataset has " +
                         std::to_string(l.manifest.identities.size()));
    }
    return l;
}

RenderOptions eval_options(const Options& o, const RunConfig& c) {
    RenderOptions r;
    r.samples = o.samples.value_or(c.train.eval_samples);
    r.jitter = false;
    return r;
}

int cmd_render(const Options& o) {
    auto l = load_for_render(o);
    const auto& model = l.model.model;
    check_identity(o.identity, model.identities(), "identity");
    if (o.camera >= l.manifest.cameras.size()) {
        throw UsageError("camera " + std::to_string(o.camera) + " out of range; valid cameras are 0.." +
                         std::to_string(l.manifest.cameras.size() - 1));
    }
    PoseFrame pose;
    if (!o.pose_file.empty()) {
        pose = pose_from_file(o.pose_file, o.frame, model.joints());
    } else {
        const auto& poses = l.manifest.identities[o.identity].poses;
        if (o.frame >= poses.size()) throw UsageError("frame " + std::to_string(o.frame) + " out of range");
        pose = poses[o.frame];
    }
    pose.camera = l.manifest.cameras[o.camera];
    const Image img = render_image(model, o.identity, pose, l.manifest.scene_box, eval_options(o, l.model.config),
                                   mix_seed(l.model.config.seed, "eval"));
    const fs::path out = o.out.empty() ? fs::path("render.png") : fs::path(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_png(out, img);
    if (!o.alpha_out.empty()) write_alpha_png(o.alpha_out, img);
    std::cout << "wrote " << out.string() << "\n";
    return kOk;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
    const auto colon = s.find(':');
    try {
        if (colon == std::string::npos) {
            const auto f = std::stoul(s);
            return {f, f + 1};
        }
        return {std::stoul(s.substr(0, colon)), std::stoul(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError("frame range '" + s + "' is not of the form start:end");
    }
}

int cmd_transfer(const Options& o) {
    auto l = load_for_render(o);
    const auto& model = l.model.model;
    check_identity(o.identity, model.identities(), "identity");
    check_identity(o.pose_source, model.identities(), "pose source");
    const auto& poses = l.manifest.identities[o.pose_source].poses;
    const auto [begin, end] = parse_range(o.frames);
    if (begin >= end || end > poses.size()) {
        throw UsageError("frame range " + o.frames + " invalid; identity " + std::to_string(o.pose_source) + " has frames 0.." +
                         std::to_string(poses.size() - 1));
    }
    if (o.camera >= l.manifest.cameras.size()) throw UsageError("camera " + std::to_string(o.camera) + " out of range");
    const fs::path out = o.out.empty() ? fs::path("transfer") : fs::path(o.out);
    fs::create_directories(out);
    const auto frames = render_sequence(model, o.identity, std::span(poses).subspan(begin, end - begin),
                                        l.manifest.cameras[o.camera], l.manifest.scene_box,
                                        eval_options(o, l.model.config), mix_seed(l.model.config.seed, "eval"));
    for (std::size_t f = begin; f < end; ++f) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu.png", f);
        write_png(out / name, frames[f - begin]);
        write_alpha_png(out / (std::string("alpha_") + name), frames[f - begin]);
    }
    std::cout << "wrote " << end - begin << " frames of identity " << o.identity << " driven by identity "
              << o.pose_source << " to " << out.string() << "\n";
    return kOk;
}

int cmd_eval(const Options& o) {
    auto l = load_for_render(o);
    if (o.split != "test" && o.split != "train") throw UsageError("split must be test or train");
    const Split split = o.split == "test" ? Split::Test : Split::Train;
    if (l.manifest.split(split).empty()) throw UsageError("dataset has no " + o.split + " frames");
    const auto report = evaluate(l.model.model, l.manifest, split, o.samples.value_or(l.model.config.train.eval_samples),
                                 l.model.config.seed);
    const fs::path out = o.out.empty() ? fs::path(o.ckpt).parent_path() : fs::path(o.out);
    if (!out.empty()) fs::create_directories(out);
    write_report(report, out / "eval.tsv", out / "eval.json");
    std::cout << std::fixed << std::setprecision(3) << "identity\tframe\tcamera\tpsnr\tssim\n";
    for (const auto& r : report.rows) {
        std::cout << r.identity << '\t' << r.frame << '\t' << r.camera << '\t' << r.psnr << '\t' << r.ssim << '\n';
    }
    for (std::size_t i = 0; i < report.identity_psnr.size(); ++i) {
        std::cout << "identity " << i << ": PSNR " << report.identity_psnr[i] << " dB, SSIM " << report.identity_ssim[i]
                  << "\n";
    }
    std::cout << "mean: PSNR " << report.mean_psnr << " dB, SSIM " << report.mean_ssim
              << " (perceptual column: substitute, not reported)\n";
    return kOk;
}

int cmd_gradcheck(const Options& o) {
    const RunConfig c = base_config(o);
    if (!o.corrupt.empty()) set_backward_fault(o.corrupt);
    auto cases = engine_grad_checks(c.seed);
    for (auto& k : pipeline_grad_checks(c.seed)) cases.push_back(std::move(k));
    cases.push_back(end_to_end_grad_check(c.seed, o.probes));
    const auto report = run_grad_checks(cases);
    set_backward_fault("");
    std::cout << std::left << std::setw(30) << "case" << std::setw(16) << "max rel error" << std::setw(12) << "tolerance"
              << "result\n";
    for (const auto& r : report.rows) {
        std::cout << std::setw(30) << r.name << std::setw(16) << std::scientific << std::setprecision(3)
                  << r.result.max_rel_error << std::setw(12) << r.tolerance << (r.passed ? "pass" : "FAIL");
        if (!r.error.empty()) std::cout << "  " << r.error;
        std::cout << "\n";
    }
    if (!report.all_passed) {
        const auto& w = report.rows[report.worst];
        std::cout << "gradient check failed; worst offender: " << w.name << " (max relative error "
                  << w.result.max_rel_error << ")\n";
        return kVerifyFailed;
    }
    std::cout << "all " << report.rows.size() << " gradient checks passed\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-identity articulated neural renderer: synthesize data, train once, render any identity."};
    app.require_subcommand(0, 1);
    Options o;
    app.add_option("-c,--config", o.config, "YAML run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Override the root seed");
    app.add_flag("--print-defaults", o.print_defaults, "Print the effective configuration as YAML and exit");

    auto* synth = app.add_subcommand("synth", "Generate a procedural multi-identity dataset");
    synth->add_option("-o,--out", o.out, "Dataset directory");
    synth->add_option("--identities", o.identities, "Number of identities");
    synth->add_option("--frames", o.frame_count, "Frames per identity");

    auto* train_cmd = app.add_subcommand("train", "Train one model over every identity of a dataset");
    train_cmd->add_option("-d,--data", o.data, "Dataset directory")->required();
    train_cmd->add_option("-o,--out", o.out, "Run directory (checkpoints, logs)");
    train_cmd->add_option("--iterations", o.iterations, "Iteration budget");
    train_cmd->add_option("--samples", o.samples, "Samples per ray");
    train_cmd->add_option("--ablation", o.ablation, "none, no-id-codes, no-pose-condition or no-id-codes-and-pose");
    train_cmd->add_option("--resume", o.resume, "Continue from a snapshot or final checkpoint")->check(CLI::ExistingFile);

    auto* render = app.add_subcommand("render", "Render one identity in one pose from one camera");
    render->add_option("--ckpt", o.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    render->add_option("-d,--data", o.data, "Dataset directory")->required();
    render->add_option("--identity", o.identity, "Identity index");
    render->add_option("--frame", o.frame, "Frame of the identity's own sequence, or row of --pose-file");
    render->add_option("--pose-file", o.pose_file, "Pose file in the dataset poses/<id>.txt format");
    render->add_option("--camera", o.camera, "Camera index");
    render->add_option("--samples", o.samples, "Samples per ray");
    render->add_option("-o,--out", o.out, "Output PNG");
    render->add_option("--alpha", o.alpha_out, "Optional alpha PNG");

    auto* transfer = app.add_subcommand("transfer", "Render identity A driven by identity B's motion");
    transfer->add_option("--ckpt", o.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    transfer->add_option("-d,--data", o.data, "Dataset directory")->required();
    transfer->add_option("--identity", o.identity, "Appearance identity A")->required();
    transfer->add_option("--pose-source", o.pose_source, "Pose identity B")->required();
    transfer->add_option("--frames", o.frames, "Frame range start:end of B's sequence");
    transfer->add_option("--camera", o.camera, "Camera index");
    transfer->add_option("--samples", o.samples, "Samples per ray");
    transfer->add_option("-o,--out", o.out, "Output directory");

    auto* eval = app.add_subcommand("eval", "PSNR and SSIM on held-out views");
    eval->add_option("--ckpt", o.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    eval->add_option("-d,--data", o.data, "Dataset directory")->required();
    eval->add_option("--split", o.split, "test or train");
    eval->add_option("--samples", o.samples, "Samples per ray");
    eval->add_option("-o,--out", o.out, "Directory for eval.tsv and eval.json");

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference verification of every backward rule");
    gradcheck->add_option("--probes", o.probes, "Parameters probed end to end");
    gradcheck->add_option("--corrupt", o.corrupt, "Test fixture: give this op a wrong backward rule");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInput;
    }

    try {
        if (o.print_defaults) {
            std::cout << dump_config(base_config(o));
            return kOk;
        }
        if (synth->parsed()) return cmd_synth(o);
        if (train_cmd->parsed()) return cmd_train(o);
        if (render->parsed()) return cmd_render(o);
        if (transfer->parsed()) return cmd_transfer(o);
        if (eval->parsed()) return cmd_eval(o);
        if (gradcheck->parsed()) return cmd_gradcheck(o);
        std::cout << app.help();
        return kInput;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    }
}
