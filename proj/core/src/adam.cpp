#include "polyhuman/adam.hpp"

#include <cmath>

namespace polyhuman {

void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state, const AdamHyper& hyper) {
    if (grad.size() != param.size()) {
        throw ShapeError("adam_step: gradient has " + std::to_string(grad.size()) + " entries, parameter has " +
                         std::to_string(param.size()));
    }
    if (!(hyper.lr > 0.0)) throw std::invalid_argument("adam_step: learning rate must be positive");
    if (state.m.empty()) {
        state.m.assign(param.size(), 0.0);
        state.v.assign(param.size(), 0.0);
    }
    if (state.m.size() != param.size() || state.v.size() != param.size()) {
        throw ShapeError("adam_step: moment buffers do not match parameter");
    }
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(hyper.beta1, t);
    const double c2 = 1.0 - std::pow(hyper.beta2, t);
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        param[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
}

Adam::Adam(std::vector<Group> groups, double beta1, double beta2, double eps)
    : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    std::size_t n = 0;
    for (const auto& g : groups_) n += g.params.size();
    states_.resize(n);
}

void Adam::zero_grad() {
    for (auto& g : groups_)
        for (auto& p : g.params) p.zero_grad();
}

void Adam::step() {
    std::size_t s = 0;
    std::vector<double> zeros;
    for (auto& g : groups_) {
        const AdamHyper hyper{g.lr, beta1_, beta2_, eps_};
        for (auto& p : g.params) {
            std::span<const double> grad = p.grad();
            if (grad.size() != p.numel()) {
                zeros.assign(p.numel(), 0.0);
                grad = zeros;
            }
            auto values = p.mutable_data();
            adam_step(values, grad, states_[s++], hyper);
            if (single_storage_) {
                for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
            }
        }
    }
}

} // namespace polyhuman
