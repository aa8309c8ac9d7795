#pragma once

#include "polyhuman/tensor.hpp"

#include <optional>

namespace polyhuman {

/// Sinusoidal positional encoding with `bands` octaves.
///
/// Output layout (normative, checkpoints depend on it): coordinate-major, then
/// band, then sin before cos. For an input row (x, y, z) and L bands:
///   sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{L-1} pi x), cos(2^{L-1} pi x), <same for y>, <same for z>
struct EncodingSpec {
    int bands = 10;

    std::size_t output_dim(std::size_t input_dim) const { return input_dim * 2 * static_cast<std::size_t>(bands); }
};

/// Weight of band `band` under coarse-to-fine annealing with progress `alpha`
/// in [0, bands]: 0 until alpha reaches band, then a cosine ramp to 1.
double band_weight(int band, double alpha);

/// Encodes each row of `points` [B x d] into [B x 2Ld]. Differentiable with
/// respect to the points. With `anneal_alpha`, each band's sin/cos pair is
/// scaled by band_weight(band, alpha).
Tensor positional_encode(const Tensor& points, const EncodingSpec& spec,
                         std::optional<double> anneal_alpha = std::nullopt);

} // namespace polyhuman
