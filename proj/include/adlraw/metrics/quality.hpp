#pragma once

#include "adlraw/numcore/tensor.hpp"

namespace adlraw::metrics {

using numcore::Tensor;

inline constexpr double kPsnrCap = 99.0;

/// Mean squared error accumulated in double.
double mse(const Tensor& a, const Tensor& b);

/// 10 log10(peak^2 / MSE) over all elements jointly; `cap` when MSE is zero.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0, double cap = kPsnrCap);

/// Gaussian-window SSIM (11 x 11, sigma 1.5) over the valid region of each
/// channel, averaged across channels. The last two axes are spatial; any
/// leading axes are treated as channels.
double ssim(const Tensor& a, const Tensor& b, double peak = 1.0);

/// |a - b| elementwise.
Tensor error_map(const Tensor& a, const Tensor& b);

/// Divides by the maximum so values land in [0, 1]. An all-zero map stays zero.
Tensor normalize_map(const Tensor& map);

} // namespace adlraw::metrics
