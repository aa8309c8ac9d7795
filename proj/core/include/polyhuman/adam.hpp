#pragma once

#include "polyhuman/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polyhuman {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment buffers of one parameter plus its step counter.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
};

/// Bias-corrected Adam update applied in place; increments state.t.
void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state, const AdamHyper& hyper);

/// Adam over named parameter groups, each with its own learning rate.
class Adam {
public:
    struct Group {
        std::string name;
        std::vector<Tensor> params;
        double lr = 1e-3;
    };

    Adam() = default;
    Adam(std::vector<Group> groups, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void zero_grad();
    /// One update for every parameter; a parameter without a gradient buffer is
    /// treated as having zero gradient.
    void step();

    /// After each step, round parameters to the nearest float32 value.
    void set_single_precision_storage(bool enabled) { single_storage_ = enabled; }

    const std::vector<Group>& groups() const { return groups_; }
    std::vector<Group>& groups() { return groups_; }
    std::vector<AdamState>& states() { return states_; }
    const std::vector<AdamState>& states() const { return states_; }
    std::uint64_t steps() const { return states_.empty() ? 0 : states_.front().t; }

private:
    std::vector<Group> groups_;
    std::vector<AdamState> states_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    bool single_storage_ = false;
};

} // namespace polyhuman
