#include "polyhuman/identity.hpp"

#include "polyhuman/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace polyhuman {

IdentityTable IdentityTable::create(std::size_t identities, std::size_t dim, Rng& rng, double init_std) {
    if (identities == 0 || dim == 0) throw std::invalid_argument("identity table needs N >= 1 and D >= 1");
    return {Tensor::parameter({identities, dim}, rng.normal_vector(identities * dim, init_std), "identity.codes")};
}

Tensor IdentityTable::get_code(std::size_t i) const {
    if (i >= size()) {
        throw std::out_of_range("identity " + std::to_string(i) + " out of range [0, " + std::to_string(size()) + ")");
    }
    return narrow(codes, 0, i, 1);
}

void IdentityTable::collect(ParameterList& out) const { out.push_back({codes.name(), codes}); }

AttentionParams AttentionParams::create(std::size_t dim, Rng& rng, int joint_bands) {
    AttentionParams p;
    p.joint_encoding = EncodingSpec{joint_bands};
    const std::size_t in = p.joint_encoding.output_dim(3);
    auto make = [&](std::size_t rows, const char* name) {
        return Tensor::parameter({rows, dim}, rng.normal_vector(rows * dim, 1.0 / std::sqrt(static_cast<double>(rows))),
                                 name);
    };
    p.w_p = make(in, "identity.w_p");
    p.w_q = make(dim, "identity.w_q");
    p.w_k = make(dim, "identity.w_k");
    p.w_v = make(dim, "identity.w_v");
    return p;
}

void AttentionParams::collect(ParameterList& out) const {
    for (const Tensor* t : {&w_p, &w_q, &w_k, &w_v}) out.push_back({t->name(), *t});
}

Tensor pose_code(const Tensor& joints, const AttentionParams& params) {
    if (joints.rank() != 2 || joints.dim(1) != 3) {
        throw ShapeError("pose_code: expected [K x 3] joints, got " + shape_to_string(joints.shape()));
    }
    return matmul(positional_encode(joints, params.joint_encoding), params.w_p);
}

PoseConditionedCode pose_conditioned_code(const Tensor& s, const Tensor& p, const AttentionParams& params,
                                          bool scaled) {
    const std::size_t d = params.dim();
    if (p.rank() != 2 || p.dim(0) == 0) throw std::invalid_argument("pose_conditioned_code: no joints");
    if (s.shape() != Shape{1, d} || p.dim(1) != d) {
        throw ShapeError("pose_conditioned_code: code " + shape_to_string(s.shape()) + " and pose code " +
                         shape_to_string(p.shape()) + " do not match D = " + std::to_string(d));
    }
    const Tensor q = matmul(s, params.w_q);
    const Tensor keys = matmul(p, params.w_k);
    const Tensor values = matmul(p, params.w_v);
    Tensor logits = matmul(q, transpose(keys));
    if (scaled) logits = scale(logits, 1.0 / std::sqrt(static_cast<double>(d)));
    const Tensor attention = softmax(logits, 1);
    return {add(matmul(attention, values), s), attention};
}

} // namespace polyhuman
