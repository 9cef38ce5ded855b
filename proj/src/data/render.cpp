#include "ifr/data/render.hpp"

#include <stdexcept>

#include "ifr/core/rng.hpp"
#include "ifr/data/font5x7.hpp"

namespace ifr {
namespace {

// Width in font units of an L-glyph line: glyphs are 5 wide with 1 column of
// spacing between them.
int line_units(int len) { return 6 * len - 1; }

}  // namespace

Image render_text(const std::string& text, uint64_t seed, const RenderStyle& style) {
  if (text.empty()) throw std::invalid_argument("render_text: empty text");
  for (char c : text)
    if (!glyph5x7(c)) throw std::invalid_argument(std::string("render_text: no glyph for '") + c + "'");

  int len = static_cast<int>(text.size());
  int max_scale = std::min(kCanvasW / line_units(len), kCanvasH / 7);
  if (max_scale < style.scale_min)
    throw std::invalid_argument("render_text: text of length " + std::to_string(len) +
                                " does not fit at minimum scale");

  Rng rng(seed);
  int scale;
  int x0, y0;
  double bg, fg;
  if (style.randomize) {
    scale = style.scale_min + rng.uniform_int(max_scale - style.scale_min + 1);
    int w = line_units(len) * scale;
    int h = 7 * scale;
    x0 = rng.uniform_int(kCanvasW - w + 1);
    y0 = rng.uniform_int(kCanvasH - h + 1);
    bg = rng.uniform(style.bg_min, style.bg_max);
    fg = bg + rng.uniform(style.contrast_min, style.contrast_max);
  } else {
    scale = max_scale;
    x0 = (kCanvasW - line_units(len) * scale) / 2;
    y0 = (kCanvasH - 7 * scale) / 2;
    bg = 0.1;
    fg = 0.9;
  }

  Image img(kCanvasH, kCanvasW, bg);
  for (int i = 0; i < len; ++i) {
    int gx = x0 + i * 6 * scale;
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 5; ++c) {
        if (!glyph_pixel(text[i], r, c)) continue;
        for (int dy = 0; dy < scale; ++dy)
          for (int dx = 0; dx < scale; ++dx) img.at(y0 + r * scale + dy, gx + c * scale + dx) = fg;
      }
    }
  }

  if (style.randomize && style.noise_amp > 0) {
    for (double& v : img.data) v += rng.uniform(-style.noise_amp, style.noise_amp);
  }
  return clamp01(std::move(img));
}

}  // namespace ifr
