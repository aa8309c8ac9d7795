#include "polyhuman/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace polyhuman {

double band_weight(int band, double alpha) {
    const double x = std::clamp(alpha - band, 0.0, 1.0);
    return 0.5 * (1.0 - std::cos(std::numbers::pi * x));
}

Tensor positional_encode(const Tensor& points, const EncodingSpec& spec, std::optional<double> anneal_alpha) {
    if (spec.bands < 1) throw std::invalid_argument("positional encoding needs at least one band");
    if (points.rank() != 2) {
        throw ShapeError("positional_encode expects [B x d] points, got " + shape_to_string(points.shape()));
    }
    const std::size_t rows = points.dim(0);
    const std::size_t dims = points.dim(1);
    const auto bands = static_cast<std::size_t>(spec.bands);
    const std::size_t width = dims * 2 * bands;

    std::vector<double> freq(bands);
    std::vector<double> weight(bands, 1.0);
    for (std::size_t b = 0; b < bands; ++b) {
        freq[b] = std::ldexp(std::numbers::pi, static_cast<int>(b));
        if (anneal_alpha) weight[b] = band_weight(static_cast<int>(b), *anneal_alpha);
    }

    const auto in = points.data();
    std::vector<double> out(rows * width);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < dims; ++c) {
            const double v = in[r * dims + c];
            double* dst = out.data() + r * width + c * 2 * bands;
            for (std::size_t b = 0; b < bands; ++b) {
                dst[2 * b] = weight[b] * std::sin(freq[b] * v);
                dst[2 * b + 1] = weight[b] * std::cos(freq[b] * v);
            }
        }
    }
    return make_result("positional_encode", {rows, width}, std::move(out), {points},
                       [rows, dims, bands, width, freq, weight](std::span<const double> y, std::span<const double> g,
                                                                std::span<const std::span<double>> grads) {
                           auto gx = grads[0];
                           for (std::size_t r = 0; r < rows; ++r) {
                               for (std::size_t c = 0; c < dims; ++c) {
                                   const std::size_t base = r * width + c * 2 * bands;
                                   double acc = 0.0;
                                   for (std::size_t b = 0; b < bands; ++b) {
                                       // d sin(f v) = f cos(f v), d cos(f v) = -f sin(f v)
                                       acc += freq[b] * (g[base + 2 * b] * y[base + 2 * b + 1] -
                                                         g[base + 2 * b + 1] * y[base + 2 * b]);
                                   }
                                   gx[r * dims + c] += acc;
                               }
                           }
                       });
}

} // namespace polyhuman
