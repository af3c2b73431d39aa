#pragma once

#include "derain/core/tensor.hpp"

namespace derain::eval {

using core::Image;

// Mean local structural similarity over valid (fully interior) windows of a
// Gaussian-weighted patch, averaged across channels. Exactly 1 for bitwise
// identical inputs. Images smaller than the window raise ShapeError.
double ssim(const Image& a, const Image& b, double max_value = 1.0, int window = 11,
            double sigma = 1.5, double k1 = 0.01, double k2 = 0.03);

// 10*log10(max_value^2 / MSE); +infinity for identical images.
double psnr(const Image& a, const Image& b, double max_value = 1.0);

}  // namespace derain::eval
