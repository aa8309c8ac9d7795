#pragma once

#include "polyhuman/rng.hpp"
#include "polyhuman/tensor.hpp"

#include <string>
#include <vector>

namespace polyhuman {

struct NamedParameter {
    std::string name;
    Tensor tensor;
};
using ParameterList = std::vector<NamedParameter>;

std::size_t parameter_count(const ParameterList& params);

/// y = x W + b with W stored [in x out]. He-normal weights, zero bias; a
/// zero layer starts with W = 0 as well.
struct Linear {
    Tensor weight;
    Tensor bias;

    static Linear create(std::size_t in, std::size_t out, Rng& rng, const std::string& name, bool zero = false);

    std::size_t in_features() const { return weight.dim(0); }
    std::size_t out_features() const { return weight.dim(1); }
    Tensor operator()(const Tensor& x) const;
    void collect(ParameterList& out) const;
};

/// Linear layer over concat(h, code) where one code row is shared by every row
/// of h. Evaluated as h W_h + (code W_c + b), which is the concatenated product
/// without materializing the repeated code.
struct InjectLinear {
    Tensor weight;  // [(in + code) x out]; rows [0, in) act on h
    Tensor bias;
    std::size_t in = 0;
    std::size_t code = 0;

    static InjectLinear create(std::size_t in, std::size_t code, std::size_t out, Rng& rng, const std::string& name);

    Tensor operator()(const Tensor& h, const Tensor& code_row) const;
    void collect(ParameterList& out) const;
};

} // namespace polyhuman
