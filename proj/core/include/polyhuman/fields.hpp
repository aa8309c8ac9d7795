#pragma once

#include "polyhuman/encoding.hpp"
#include "polyhuman/nn.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace polyhuman {

struct NonRigidConfig {
    std::size_t depth = 6;
    std::size_t width = 128;
    std::size_t inject_layer = 4;
    int point_bands = 10;
};

struct CanonicalConfig {
    std::size_t depth = 8;
    std::size_t width = 256;
    std::size_t inject_layer = 5;
    int point_bands = 10;
    double density_bias = -1.0;
    double density_scale = 1.0;
};

/// MLP of ReLU layers where layer `inject_layer` also sees a code row shared by
/// the whole batch. Layer 0 can likewise take a shared row (the joint vector of
/// the offset field).
class ConditionedMlp {
public:
    ConditionedMlp() = default;
    ConditionedMlp(std::size_t in, std::size_t shared_in, std::size_t depth, std::size_t width,
                   std::size_t inject_layer, std::size_t code, Rng& rng, const std::string& name);

    /// Hidden features of the last layer, [P x width].
    Tensor features(const Tensor& x, const Tensor& shared_row, const Tensor& code_row) const;
    void collect(ParameterList& out) const;
    std::size_t width() const { return width_; }

private:
    using Layer = std::variant<Linear, InjectLinear>;
    std::vector<Layer> layers_;
    std::size_t inject_ = 0;
    std::size_t width_ = 0;
};

/// Delta x_c = M(J (+) gamma(x_c); F), injected at `inject_layer`. The output
/// layer starts at zero so the offset is exactly zero until trained.
struct NonRigidField {
    NonRigidConfig config;
    ConditionedMlp body;
    Linear out;

    static NonRigidField create(const NonRigidConfig& config, std::size_t joints, std::size_t code, Rng& rng);

    /// points [P x 3], joints_row [1 x 3K] root-relative, code [1 x D] -> [P x 3].
    Tensor offset(const Tensor& points, const Tensor& joints_row, const Tensor& code,
                  std::optional<double> anneal_alpha = std::nullopt) const;
    void collect(ParameterList& out) const;
};

struct Radiance {
    Tensor color;    // [P x 3] in [0, 1]
    Tensor density;  // [P x 1] >= 0
};

/// (c, sigma) = M(gamma(x_c); S), with S injected at `inject_layer`.
struct CanonicalField {
    CanonicalConfig config;
    ConditionedMlp body;
    Linear color_head;
    Linear density_head;

    static CanonicalField create(const CanonicalConfig& config, std::size_t code, Rng& rng);

    Radiance radiance(const Tensor& points, const Tensor& code) const;
    void collect(ParameterList& out) const;
};

} // namespace polyhuman
