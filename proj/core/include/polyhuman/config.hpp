#pragma once

#include "polyhuman/losses.hpp"
#include "polyhuman/model.hpp"
#include "polyhuman/synthdata.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace polyhuman {

struct TrainConfig {
    std::size_t iterations = 20000;
    std::size_t patches_per_iter = 6;
    std::size_t patch_size = 32;
    std::size_t samples = 128;
    double lr_fast = 5e-4;
    double lr_slow = 5e-5;
    /// Learning rates decay exponentially to this fraction at the last iteration.
    double lr_decay = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    /// Train the canonical field at lr_fast together with the non-rigid field.
    bool canonical_in_fast_group = false;
    std::size_t snapshot_every = 5000;  // 0 disables snapshots
    std::size_t log_every = 100;
    int mask_dilation = 8;
    /// Linear ramp of the non-rigid positional-encoding bands; 0 keeps every band on.
    std::size_t anneal_iterations = 0;
    /// Round parameters to float32 after every step so checkpoints are exact.
    bool single_precision_storage = true;
    std::size_t eval_samples = 128;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "runs/default";
    SynthConfig dataset;
    ModelConfig model;
    LossConfig loss;
    TrainConfig train;

    /// Positive counts, positive learning rates, bone count in [2, 8].
    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Keys missing from the text keep their defaults; unknown keys are rejected
/// with their dotted path.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::filesystem::path& path);
std::string dump_config(const RunConfig& config);

std::string perceptual_name(PerceptualKind kind);

} // namespace polyhuman
