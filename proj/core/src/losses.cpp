#include "polyhuman/losses.hpp"

#include "polyhuman/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace polyhuman {

namespace {

std::string shape_text(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out + "]";
}

void require_same(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_text(a.shape()) + " vs " +
                                    shape_text(b.shape()));
    }
}

Tensor pool2(const Tensor& img, std::size_t size) {
    const std::size_t half = size / 2;
    std::vector<std::size_t> idx[4];
    for (std::size_t y = 0; y < half; ++y) {
        for (std::size_t x = 0; x < half; ++x) {
            idx[0].push_back(2 * y * size + 2 * x);
            idx[1].push_back(2 * y * size + 2 * x + 1);
            idx[2].push_back((2 * y + 1) * size + 2 * x);
            idx[3].push_back((2 * y + 1) * size + 2 * x + 1);
        }
    }
    Tensor acc = gather_rows(img, idx[0]);
    for (int i = 1; i < 4; ++i) acc = acc + gather_rows(img, idx[i]);
    return scale(acc, 0.25);
}

Tensor gradient_l1(const Tensor& pred, const Tensor& gt, std::size_t size) {
    std::vector<std::size_t> left, right, up, down;
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x + 1 < size; ++x) {
            left.push_back(y * size + x);
            right.push_back(y * size + x + 1);
            up.push_back(x * size + y);
            down.push_back((x + 1) * size + y);
        }
    }
    auto diff = [](const Tensor& img, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        return gather_rows(img, b) - gather_rows(img, a);
    };
    const Tensor dx = abs(diff(pred, left, right) - diff(gt, left, right));
    const Tensor dy = abs(diff(pred, up, down) - diff(gt, up, down));
    return mean(dx) + mean(dy);
}

} // namespace

Tensor l2_loss(const Tensor& pred, const Tensor& gt) {
    require_same(pred, gt, "l2_loss");
    return sum(square(pred - gt));
}

Tensor GradientL1Loss::operator()(const Tensor& pred, const Tensor& gt, std::size_t size) const {
    require_same(pred, gt, "perceptual loss");
    if (scales_ == 0) throw std::invalid_argument("perceptual loss needs at least one scale");
    if (pred.rank() != 2 || pred.dim(0) != size * size) {
        throw std::invalid_argument("perceptual loss expects a square patch of " + std::to_string(size * size) +
                                    " pixels, got " + shape_text(pred.shape()));
    }
    if ((size >> (scales_ - 1)) < 2 || size % (std::size_t{1} << (scales_ - 1)) != 0) {
        throw std::invalid_argument("patch of size " + std::to_string(size) + " is too small for " +
                                    std::to_string(scales_) + " pyramid levels");
    }
    Tensor p = pred, g = gt;
    std::size_t s = size;
    Tensor total = gradient_l1(p, g, s);
    for (std::size_t level = 1; level < scales_; ++level) {
        p = pool2(p, s);
        g = pool2(g, s);
        s /= 2;
        total = total + gradient_l1(p, g, s);
    }
    return scale(total, 1.0 / static_cast<double>(scales_));
}

std::unique_ptr<PerceptualLoss> make_perceptual(const LossConfig& config) {
    if (config.perceptual == PerceptualKind::Off) return nullptr;
    return std::make_unique<GradientL1Loss>(config.scales);
}

LossTerms total_loss(const Tensor& pred, const Tensor& gt, std::size_t size, const LossConfig& config,
                     const PerceptualLoss* perceptual) {
    if (config.lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    require_same(pred, gt, "total_loss");
    LossTerms out;
    out.l2 = l2_loss(pred, gt);
    std::unique_ptr<PerceptualLoss> owned;
    if (!perceptual && config.perceptual != PerceptualKind::Off) {
        owned = make_perceptual(config);
        perceptual = owned.get();
    }
    if (perceptual && config.perceptual != PerceptualKind::Off) {
        const std::size_t pixels = size * size;
        if (pixels == 0 || pred.dim(0) % pixels != 0) {
            throw std::invalid_argument("rows are not a whole number of " + std::to_string(size) + "x" +
                                        std::to_string(size) + " patches");
        }
        const std::size_t patches = pred.dim(0) / pixels;
        Tensor acc;
        for (std::size_t p = 0; p < patches; ++p) {
            const Tensor term = (*perceptual)(narrow(pred, 0, p * pixels, pixels), narrow(gt, 0, p * pixels, pixels), size);
            acc = acc.defined() ? acc + term : term;
        }
        out.perceptual = scale(acc, 1.0 / static_cast<double>(patches));
        out.total = out.perceptual + scale(out.l2, config.lambda);
    } else {
        out.perceptual = Tensor::scalar(0.0);
        out.total = scale(out.l2, config.lambda);
    }
    return out;
}

double mean_squared_error(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("image size mismatch " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                    " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = a.rgb[i] - b.rgb[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.rgb.size());
}

double psnr_from_mse(double mse) {
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mean_squared_error(a, b)); }

double ssim(const Image& a, const Image& b) {
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    if (a.width != b.width || a.height != b.height) throw std::invalid_argument("ssim: image size mismatch");
    if (a.width < kWin || a.height < kWin) {
        throw std::invalid_argument("ssim: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                    " is smaller than the 11x11 window");
    }
    double w[kWin];
    double wsum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - kWin / 2;
        w[i] = std::exp(-d * d / (2 * kSigma * kSigma));
        wsum += w[i];
    }
    for (double& v : w) v /= wsum;

    const int W = a.width, H = a.height;
    const std::size_t n = static_cast<std::size_t>(W) * H;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = (a.rgb[3 * i] + a.rgb[3 * i + 1] + a.rgb[3 * i + 2]) / 3.0;
        y[i] = (b.rgb[3 * i] + b.rgb[3 * i + 1] + b.rgb[3 * i + 2]) / 3.0;
    }
    // Separable valid filtering of x, y, xx, yy, xy.
    const int OW = W - kWin + 1, OH = H - kWin + 1;
    auto filter = [&](auto value) {
        std::vector<double> rows(static_cast<std::size_t>(OW) * H);
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < OW; ++c) {
                double acc = 0.0;
                for (int k = 0; k < kWin; ++k) acc += w[k] * value(static_cast<std::size_t>(r) * W + c + k);
                rows[static_cast<std::size_t>(r) * OW + c] = acc;
            }
        std::vector<double> out(static_cast<std::size_t>(OW) * OH);
        for (int r = 0; r < OH; ++r)
            for (int c = 0; c < OW; ++c) {
                double acc = 0.0;
                for (int k = 0; k < kWin; ++k) acc += w[k] * rows[static_cast<std::size_t>(r + k) * OW + c];
                out[static_cast<std::size_t>(r) * OW + c] = acc;
            }
        return out;
    };
    const auto mx = filter([&](std::size_t i) { return x[i]; });
    const auto my = filter([&](std::size_t i) { return y[i]; });
    const auto xx = filter([&](std::size_t i) { return x[i] * x[i]; });
    const auto yy = filter([&](std::size_t i) { return y[i] * y[i]; });
    const auto xy = filter([&](std::size_t i) { return x[i] * y[i]; });
    constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = xx[i] - mx[i] * mx[i];
        const double vy = yy[i] - my[i] * my[i];
        const double cxy = xy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + C1) * (2 * cxy + C2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + C1) * (vx + vy + C2));
    }
    return total / static_cast<double>(mx.size());
}

} // namespace polyhuman
