#pragma once

#include "polyhuman/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace polyhuman {

/// RGB image with values in [0, 1] and an optional alpha plane.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> rgb;    // row-major, 3 per pixel
    std::vector<double> alpha;  // 1 per pixel, or empty

    static Image filled(int width, int height, const Vec3& color);
    Vec3 pixel(int u, int v) const;
    void set_pixel(int u, int v, const Vec3& color);
};

/// Binary foreground mask.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // 0 or 1 per pixel

    std::size_t count() const;
};

double intersection_over_union(const Mask& a, const Mask& b);
Mask threshold_alpha(const Image& image, double threshold = 0.5);

std::uint8_t to_byte(double value);

/// 8-bit RGB PNG. Throws std::runtime_error naming the path on failure.
void write_png(const std::filesystem::path& path, const Image& image);
/// 8-bit grayscale PNG, 255 where the mask is set.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
/// 8-bit grayscale PNG of the alpha plane.
void write_alpha_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);
Mask read_mask_png(const std::filesystem::path& path);

} // namespace polyhuman
