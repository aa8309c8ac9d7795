#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace polyhuman {

/// Seeded generator. Independent streams are derived from one root seed by
/// name (and an optional index), so adding a consumer never shifts another.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    static Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }
    std::vector<double> normal_vector(std::size_t n, double stddev);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

} // namespace polyhuman
