#pragma once

#include "polyhuman/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyhuman {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Named array. Parameters are stored as little-endian float32, optimizer
/// moments as float64.
struct Blob {
    std::string name;
    Shape shape;
    std::vector<double> values;
    bool wide = false;
    bool operator==(const Blob&) const = default;
};

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::string config;    // run configuration as YAML
    std::string subjects;  // skeletons and canonical boxes as YAML
    std::uint64_t iteration = 0;
    std::vector<Blob> parameters;
    std::vector<Blob> optimizer;  // empty for model-only files
    bool operator==(const Checkpoint&) const = default;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Layout: magic, version, iteration, config, subjects, blob tables, CRC32 of
/// everything before it.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source = "<memory>");

} // namespace polyhuman
