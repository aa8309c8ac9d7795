#pragma once

#include "polyhuman/image.hpp"
#include "polyhuman/tensor.hpp"

#include <memory>
#include <string>

namespace polyhuman {

enum class PerceptualKind { Off, GradientL1 };

struct LossConfig {
    double lambda = 0.2;
    PerceptualKind perceptual = PerceptualKind::GradientL1;
    std::size_t scales = 3;  // pyramid levels of the perceptual term
};

/// Sum of squared differences over every ray and channel.
Tensor l2_loss(const Tensor& pred, const Tensor& gt);

/// Patch distance used in place of a learned perceptual metric. Patches are
/// [size*size x 3] tensors in row-major pixel order.
class PerceptualLoss {
public:
    virtual ~PerceptualLoss() = default;
    virtual std::string name() const = 0;
    virtual Tensor operator()(const Tensor& pred, const Tensor& gt, std::size_t size) const = 0;
};

/// L1 between horizontal and vertical finite differences, averaged over a
/// 2x2 average-pooling pyramid.
class GradientL1Loss final : public PerceptualLoss {
public:
    explicit GradientL1Loss(std::size_t scales = 3) : scales_(scales) {}
    std::string name() const override { return "gradient_l1"; }
    Tensor operator()(const Tensor& pred, const Tensor& gt, std::size_t size) const override;

private:
    std::size_t scales_;
};

std::unique_ptr<PerceptualLoss> make_perceptual(const LossConfig& config);

struct LossTerms {
    Tensor total;
    Tensor l2;
    Tensor perceptual;  // mean over patches; a zero scalar when off
};

/// pred and gt hold `patches` consecutive size x size patches, [P*size*size x 3].
LossTerms total_loss(const Tensor& pred, const Tensor& gt, std::size_t size, const LossConfig& config,
                     const PerceptualLoss* perceptual = nullptr);

inline constexpr double kPsnrCap = 99.0;

double mean_squared_error(const Image& a, const Image& b);
/// 10 log10(1 / MSE) for values in [0, 1]; identical images give kPsnrCap.
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse);

/// SSIM on the channel-mean grayscale, 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, averaged over windows that fit inside the image.
double ssim(const Image& a, const Image& b);

} // namespace polyhuman
