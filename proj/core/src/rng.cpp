#include "polyhuman/rng.hpp"

namespace polyhuman {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(seed ^ h) + index);
}

Rng Rng::substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    return Rng(mix_seed(seed, name, index));
}

std::vector<double> Rng::normal_vector(std::size_t n, double stddev) {
    std::vector<double> v(n);
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& x : v) x = dist(engine_);
    return v;
}

} // namespace polyhuman
