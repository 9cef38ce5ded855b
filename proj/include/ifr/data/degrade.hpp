#pragma once

#include <cstdint>
#include <vector>

#include "ifr/core/image.hpp"

namespace ifr {

// Square blur kernel; size odd, weights nonnegative, sum 1.
struct Kernel2D {
  int size = 1;
  std::vector<double> weights;  // row-major size*size

  double at(int r, int c) const { return weights[static_cast<size_t>(r) * size + c]; }
};

enum class SigmaRule {
  kAuto,   // sigma(k) = 0.3*((k-1)*0.5 - 1) + 0.8
  kFixed,  // sigma_fixed regardless of kernel size
};

struct DegradeConfig {
  int kernel_min = 9;   // odd
  int kernel_max = 17;  // odd, >= kernel_min
  double ratio_min = 1.0;
  double ratio_max = 3.0;
  // Branch probabilities: identity, blur only, downup only, blur then downup.
  double mix_clean = 0.25;
  double mix_blur = 0.25;
  double mix_downup = 0.25;
  double mix_both = 0.25;
  SigmaRule sigma_rule = SigmaRule::kAuto;
  double sigma_fixed = 1.0;

  void validate() const;  // throws std::invalid_argument
  double sigma_for(int kernel_size) const;
};

Kernel2D gaussian_kernel(int size, double sigma);

// Convolution with reflected borders (edge row/column not duplicated); result
// clamped to [0,1].
Image blur(const Image& img, const Kernel2D& kernel);

// Bilinear resize with half-pixel sample alignment. Equal sizes reproduce the
// input bitwise.
Image bilinear_resize(const Image& img, int out_h, int out_w);

// Shrink by `ratio` (round(H/ratio) x round(W/ratio), floor 1 pixel), then
// resize back; clamped to [0,1].
Image downup(const Image& img, double ratio);

// Seeded degradation. Draw order from Rng(seed): one uniform picks the branch
// by cumulative mix probability (clean, blur, downup, both); branches using
// blur then draw the kernel size uniformly over the odd sizes in range;
// branches using downup then draw the ratio uniformly. Tests replay this
// sequence, so reorder only together with them.
Image degrade(const Image& hq, uint64_t seed, const DegradeConfig& cfg);

}  // namespace ifr
