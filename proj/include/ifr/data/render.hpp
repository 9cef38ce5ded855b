#pragma once

#include <cstdint>
#include <string>

#include "ifr/core/image.hpp"

namespace ifr {

inline constexpr int kCanvasH = 32;
inline constexpr int kCanvasW = 128;

// Rasterization knobs. With randomize=false the draw sequence is skipped
// entirely: largest fitting scale, centered, background 0.1, foreground 0.9,
// no noise.
struct RenderStyle {
  bool randomize = true;
  double bg_min = 0.0;
  double bg_max = 0.45;
  double contrast_min = 0.35;  // foreground = background + contrast
  double contrast_max = 0.55;
  double noise_amp = 0.02;
  int scale_min = 2;
};

// Rasterizes `text` with the built-in 5x7 font onto a 32x128 canvas. Glyph
// advance is 6 columns at scale 1. Draw order from Rng(seed): scale, x offset,
// y offset, background, contrast, then per-pixel noise row-major. Throws
// std::invalid_argument when the text cannot fit at the minimum scale or
// contains characters without a glyph.
Image render_text(const std::string& text, uint64_t seed, const RenderStyle& style = {});

}  // namespace ifr
