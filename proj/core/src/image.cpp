#include "polyhuman/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace polyhuman {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
    File f(std::fopen(path.c_str(), mode));
    if (!f) throw std::runtime_error("cannot open " + path.string());
    return f;
}

void write_png_bytes(const std::filesystem::path& path, int width, int height, int channels,
                     const std::vector<std::uint8_t>& bytes) {
    File f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("cannot allocate PNG writer for " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed writing PNG " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * width * channels));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Decodes to 8-bit gray (channels 1) or RGB (channels 3).
std::vector<std::uint8_t> read_png_bytes(const std::filesystem::path& path, int channels, int& width, int& height) {
    File f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("cannot allocate PNG reader for " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed reading PNG " + path.string());
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    const bool gray = color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA;
    if (channels == 3 && gray) png_set_gray_to_rgb(png);
    if (channels == 1 && !gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height * channels);
    for (int y = 0; y < height; ++y) png_read_row(png, bytes.data() + static_cast<std::size_t>(y) * width * channels, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return bytes;
}

} // namespace

Image Image::filled(int width, int height, const Vec3& color) {
    Image img;
    img.width = width;
    img.height = height;
    img.rgb.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = color[static_cast<int>(i % 3)];
    img.alpha.assign(static_cast<std::size_t>(width) * height, 0.0);
    return img;
}

Vec3 Image::pixel(int u, int v) const {
    const std::size_t i = (static_cast<std::size_t>(v) * width + u) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void Image::set_pixel(int u, int v, const Vec3& color) {
    const std::size_t i = (static_cast<std::size_t>(v) * width + u) * 3;
    for (int c = 0; c < 3; ++c) rgb[i + c] = color[c];
}

std::size_t Mask::count() const { return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1)); }

double intersection_over_union(const Mask& a, const Mask& b) {
    if (a.width != b.width || a.height != b.height) throw std::invalid_argument("IoU of masks with different extents");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        inter += a.data[i] && b.data[i];
        uni += a.data[i] || b.data[i];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Mask threshold_alpha(const Image& image, double threshold) {
    Mask m{image.width, image.height, std::vector<std::uint8_t>(image.alpha.size())};
    for (std::size_t i = 0; i < image.alpha.size(); ++i) m.data[i] = image.alpha[i] > threshold ? 1 : 0;
    return m;
}

std::uint8_t to_byte(double value) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 1.0) * 255.0));
}

void write_png(const std::filesystem::path& path, const Image& image) {
    std::vector<std::uint8_t> bytes(image.rgb.size());
    std::transform(image.rgb.begin(), image.rgb.end(), bytes.begin(), to_byte);
    write_png_bytes(path, image.width, image.height, 3, bytes);
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
    std::vector<std::uint8_t> bytes(mask.data.size());
    std::transform(mask.data.begin(), mask.data.end(), bytes.begin(), [](std::uint8_t m) { return m ? 255 : 0; });
    write_png_bytes(path, mask.width, mask.height, 1, bytes);
}

void write_alpha_png(const std::filesystem::path& path, const Image& image) {
    std::vector<std::uint8_t> bytes(image.alpha.size());
    std::transform(image.alpha.begin(), image.alpha.end(), bytes.begin(), to_byte);
    write_png_bytes(path, image.width, image.height, 1, bytes);
}

Image read_png(const std::filesystem::path& path) {
    Image img;
    const auto bytes = read_png_bytes(path, 3, img.width, img.height);
    img.rgb.resize(bytes.size());
    std::transform(bytes.begin(), bytes.end(), img.rgb.begin(), [](std::uint8_t b) { return b / 255.0; });
    return img;
}

Mask read_mask_png(const std::filesystem::path& path) {
    Mask m;
    const auto bytes = read_png_bytes(path, 1, m.width, m.height);
    m.data.resize(bytes.size());
    std::transform(bytes.begin(), bytes.end(), m.data.begin(), [](std::uint8_t b) { return b >= 128 ? 1 : 0; });
    return m;
}

} // namespace polyhuman
