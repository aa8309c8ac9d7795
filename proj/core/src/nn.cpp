#include "polyhuman/nn.hpp"

#include "polyhuman/ops.hpp"

#include <cmath>

namespace polyhuman {

std::size_t parameter_count(const ParameterList& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.tensor.numel();
    return n;
}

Linear Linear::create(std::size_t in, std::size_t out, Rng& rng, const std::string& name, bool zero) {
    std::vector<double> w = zero ? std::vector<double>(in * out, 0.0)
                                 : rng.normal_vector(in * out, std::sqrt(2.0 / static_cast<double>(in)));
    Linear l;
    l.weight = Tensor::parameter({in, out}, std::move(w), name + ".weight");
    l.bias = Tensor::parameter({out}, std::vector<double>(out, 0.0), name + ".bias");
    return l;
}

Tensor Linear::operator()(const Tensor& x) const {
    if (x.rank() != 2 || x.dim(1) != in_features()) {
        throw ShapeError(weight.name() + ": expected [B x " + std::to_string(in_features()) + "] input, got " +
                         shape_to_string(x.shape()));
    }
    return add(matmul(x, weight), bias);
}

void Linear::collect(ParameterList& out) const {
    out.push_back({weight.name(), weight});
    out.push_back({bias.name(), bias});
}

InjectLinear InjectLinear::create(std::size_t in, std::size_t code, std::size_t out, Rng& rng,
                                  const std::string& name) {
    InjectLinear l;
    l.in = in;
    l.code = code;
    l.weight = Tensor::parameter({in + code, out}, rng.normal_vector((in + code) * out, std::sqrt(2.0 / (in + code))),
                                 name + ".weight");
    l.bias = Tensor::parameter({out}, std::vector<double>(out, 0.0), name + ".bias");
    return l;
}

Tensor InjectLinear::operator()(const Tensor& h, const Tensor& code_row) const {
    if (h.rank() != 2 || h.dim(1) != in) {
        throw ShapeError(weight.name() + ": expected [B x " + std::to_string(in) + "] input, got " +
                         shape_to_string(h.shape()));
    }
    if (code_row.shape() != Shape{1, code}) {
        throw ShapeError(weight.name() + ": expected [1 x " + std::to_string(code) + "] code, got " +
                         shape_to_string(code_row.shape()));
    }
    const Tensor wh = narrow(weight, 0, 0, in);
    const Tensor wc = narrow(weight, 0, in, code);
    const Tensor shared = add(matmul(code_row, wc), bias);
    return add(matmul(h, wh), shared);
}

void InjectLinear::collect(ParameterList& out) const {
    out.push_back({weight.name(), weight});
    out.push_back({bias.name(), bias});
}

} // namespace polyhuman
