#pragma once

#include "polyhuman/adam.hpp"
#include "polyhuman/checkpoint.hpp"
#include "polyhuman/config.hpp"
#include "polyhuman/losses.hpp"
#include "polyhuman/model.hpp"
#include "polyhuman/synthdata.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyhuman {

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::uint64_t iteration, std::string tensor, const std::string& what)
        : std::runtime_error(what), iteration(iteration), tensor(std::move(tensor)) {}
    std::uint64_t iteration;
    std::string tensor;
};

/// Inclusive pixel rectangle.
struct PixelRect {
    int u0 = 0, v0 = 0, u1 = -1, v1 = -1;
    bool empty() const { return u1 < u0 || v1 < v0; }
};
PixelRect mask_bounds(const Mask& mask, int dilation);

/// Top-left corners of `count` patches of `size` pixels inside `rect`,
/// clamped to the image.
std::vector<Pixel> sample_patch_origins(const PixelRect& rect, int width, int height, int size, std::size_t count,
                                        Rng& rng);

Model make_model(const RunConfig& config, std::vector<SubjectSpec> subjects);

/// Fast group: non-rigid field, identity codes, attention projections (plus
/// the canonical field when configured). Slow group: everything else.
std::vector<Adam::Group> optimizer_groups(const Model& model, const TrainConfig& config);
/// Every parameter in exactly one group; throws naming the offender otherwise.
void audit_groups(const Model& model, const std::vector<Adam::Group>& groups);

std::string encode_subjects(const std::vector<SubjectSpec>& subjects);
std::vector<SubjectSpec> decode_subjects(const std::string& text);

Checkpoint make_checkpoint(const RunConfig& config, const Model& model, std::uint64_t iteration,
                           const Adam* optimizer = nullptr);
/// Copies blobs into the model. Names and shapes must match in order; the
/// first mismatch is reported.
void load_parameters(const Model& model, const std::vector<Blob>& blobs);

struct LoadedModel {
    RunConfig config;
    Model model;
    std::uint64_t iteration = 0;
};
LoadedModel model_from_checkpoint(const Checkpoint& ckpt);

struct IterationLog {
    std::uint64_t iteration = 0;
    double total = 0.0;
    double l2 = 0.0;
    double perceptual = 0.0;
    double seconds = 0.0;
    std::size_t record = 0;
};

/// Ground-truth images, masks and patch rectangles of one split.
struct SplitData {
    std::vector<const FrameRecord*> records;
    std::vector<Image> images;
    std::vector<PixelRect> rects;
};
SplitData load_split(const DatasetManifest& manifest, Split split, int dilation);

class Trainer {
public:
    Trainer(RunConfig config, const DatasetManifest& manifest);

    /// Continues from a full checkpoint (parameters, moments, iteration).
    void resume(const Checkpoint& ckpt);

    /// One optimization step; throws DivergenceError on non-finite loss or gradient.
    IterationLog step();

    const RunConfig& config() const { return config_; }
    const Model& model() const { return model_; }
    const Adam& optimizer() const { return optimizer_; }
    std::uint64_t iteration() const { return iteration_; }
    Checkpoint checkpoint(bool with_optimizer = true) const;

private:
    RunConfig config_;
    const DatasetManifest* manifest_;
    SplitData train_;
    Model model_;
    Adam optimizer_;
    std::unique_ptr<PerceptualLoss> perceptual_;
    std::uint64_t iteration_ = 0;
};

struct TrainOutputs {
    std::filesystem::path final_checkpoint;
    std::filesystem::path model_checkpoint;
    std::vector<IterationLog> log;
};

/// Runs until config.train.iterations, writing snapshots, train_log.tsv,
/// train_metrics.json, final.ckpt (with optimizer state) and model.ckpt.
TrainOutputs train(Trainer& trainer, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

struct EvalRow {
    std::size_t identity = 0;
    std::size_t frame = 0;
    std::size_t camera = 0;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::vector<double> identity_psnr;
    std::vector<double> identity_ssim;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

/// Renders every record of `split` at full resolution with bin-center samples.
EvalReport evaluate(const Model& model, const DatasetManifest& manifest, Split split, std::size_t samples,
                    std::uint64_t seed);
EvalReport summarize(std::vector<EvalRow> rows, std::size_t identities);
void write_report(const EvalReport& report, const std::filesystem::path& tsv, const std::filesystem::path& json);

} // namespace polyhuman
