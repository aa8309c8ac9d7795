#include "polyhuman/fields.hpp"

#include "polyhuman/ops.hpp"

#include <stdexcept>

namespace polyhuman {

ConditionedMlp::ConditionedMlp(std::size_t in, std::size_t shared_in, std::size_t depth, std::size_t width,
                               std::size_t inject_layer, std::size_t code, Rng& rng, const std::string& name)
    : inject_(inject_layer), width_(width) {
    if (depth < 1 || width < 1) throw std::invalid_argument(name + ": depth and width must be positive");
    if (inject_layer < 1 || inject_layer >= depth) {
        throw std::invalid_argument(name + ": injection layer " + std::to_string(inject_layer) +
                                    " must lie in [1, " + std::to_string(depth) + ")");
    }
    for (std::size_t l = 0; l < depth; ++l) {
        const std::string lname = name + ".layer" + std::to_string(l);
        const std::size_t lin = l == 0 ? in : width;
        if (l == 0 && shared_in > 0) {
            layers_.emplace_back(InjectLinear::create(lin, shared_in, width, rng, lname));
        } else if (l == inject_layer) {
            layers_.emplace_back(InjectLinear::create(lin, code, width, rng, lname));
        } else {
            layers_.emplace_back(Linear::create(lin, width, rng, lname));
        }
    }
}

Tensor ConditionedMlp::features(const Tensor& x, const Tensor& shared_row, const Tensor& code_row) const {
    Tensor h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (const auto* lin = std::get_if<Linear>(&layers_[l])) {
            h = relu((*lin)(h));
        } else {
            const auto& inj = std::get<InjectLinear>(layers_[l]);
            h = relu(inj(h, l == inject_ ? code_row : shared_row));
        }
    }
    return h;
}

void ConditionedMlp::collect(ParameterList& out) const {
    for (const auto& layer : layers_) std::visit([&](const auto& l) { l.collect(out); }, layer);
}

NonRigidField NonRigidField::create(const NonRigidConfig& config, std::size_t joints, std::size_t code, Rng& rng) {
    NonRigidField f;
    f.config = config;
    const EncodingSpec enc{config.point_bands};
    f.body = ConditionedMlp(enc.output_dim(3), joints * 3, config.depth, config.width, config.inject_layer, code, rng,
                            "fields.nonrigid");
    f.out = Linear::create(config.width, 3, rng, "fields.nonrigid.out", true);
    return f;
}

Tensor NonRigidField::offset(const Tensor& points, const Tensor& joints_row, const Tensor& code,
                             std::optional<double> anneal_alpha) const {
    const Tensor enc = positional_encode(points, EncodingSpec{config.point_bands}, anneal_alpha);
    return out(body.features(enc, joints_row, code));
}

void NonRigidField::collect(ParameterList& list) const {
    body.collect(list);
    out.collect(list);
}

CanonicalField CanonicalField::create(const CanonicalConfig& config, std::size_t code, Rng& rng) {
    CanonicalField f;
    f.config = config;
    const EncodingSpec enc{config.point_bands};
    f.body = ConditionedMlp(enc.output_dim(3), 0, config.depth, config.width, config.inject_layer, code, rng,
                            "fields.canonical");
    f.color_head = Linear::create(config.width, 3, rng, "fields.canonical.color");
    f.density_head = Linear::create(config.width, 1, rng, "fields.canonical.density");
    f.density_head.bias.mutable_data()[0] = config.density_bias;
    return f;
}

Radiance CanonicalField::radiance(const Tensor& points, const Tensor& code) const {
    const Tensor h = body.features(positional_encode(points, EncodingSpec{config.point_bands}), Tensor(), code);
    Tensor density = softplus(density_head(h));
    if (config.density_scale != 1.0) density = scale(density, config.density_scale);
    return {sigmoid(color_head(h)), density};
}

void CanonicalField::collect(ParameterList& list) const {
    body.collect(list);
    color_head.collect(list);
    density_head.collect(list);
}

} // namespace polyhuman
