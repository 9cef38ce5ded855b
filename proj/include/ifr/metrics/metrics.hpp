#pragma once

#include <string>
#include <vector>

#include "ifr/core/image.hpp"

namespace ifr {

// 10*log10(1 / MSE) with peak 1.0. Identical images return +infinity; report
// writers cap the displayed value at 100 dB per sample.
double psnr(const Image& a, const Image& b);

// Mean local structural similarity: 11x11 Gaussian window sigma 1.5,
// K1=0.01, K2=0.03, dynamic range 1.0, reflected borders.
double ssim(const Image& a, const Image& b);

// Case-insensitive exact-match fraction over the alphanumeric characters of
// each string. Throws std::invalid_argument on length mismatch or empty input.
double word_accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& gts);

// Display cap applied to per-sample PSNR before averaging into reports.
inline constexpr double kPsnrReportCap = 100.0;

}  // namespace ifr
