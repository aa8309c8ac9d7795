#pragma once

#include "polyhuman/encoding.hpp"
#include "polyhuman/nn.hpp"
#include "polyhuman/rng.hpp"
#include "polyhuman/tensor.hpp"

namespace polyhuman {

/// One learnable code row per identity, [N x D].
struct IdentityTable {
    Tensor codes;

    static IdentityTable create(std::size_t identities, std::size_t dim, Rng& rng, double init_std = 0.1);

    std::size_t size() const { return codes.dim(0); }
    std::size_t dim() const { return codes.dim(1); }
    /// Row i as [1 x D]; gradients land on that row only.
    Tensor get_code(std::size_t i) const;
    void collect(ParameterList& out) const;
};

/// Bias-free projections of the pose-conditioned code, row-vector convention:
/// P = gamma(J) W_p, q = S W_q, keys = P W_k, values = P W_v.
struct AttentionParams {
    Tensor w_p;  // [6 L x D]
    Tensor w_q;  // [D x D]
    Tensor w_k;
    Tensor w_v;
    EncodingSpec joint_encoding{6};

    static AttentionParams create(std::size_t dim, Rng& rng, int joint_bands = 6);

    std::size_t dim() const { return w_q.dim(0); }
    void collect(ParameterList& out) const;
};

/// Encodes each joint and maps it through the shared W_p: [K x 3] -> [K x D].
Tensor pose_code(const Tensor& joints, const AttentionParams& params);

struct PoseConditionedCode {
    Tensor code;       // [1 x D], attended values plus the identity code
    Tensor attention;  // [1 x K], softmax over joints
};

/// Single-query cross-attention of the identity code over the pose code. The
/// logits are unscaled unless `scaled` is set (then divided by sqrt(D)).
PoseConditionedCode pose_conditioned_code(const Tensor& identity_code, const Tensor& pose_code,
                                          const AttentionParams& params, bool scaled = false);

} // namespace polyhuman
