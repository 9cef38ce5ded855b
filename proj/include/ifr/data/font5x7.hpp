#pragma once

#include <cstdint>

namespace ifr {

// Built-in 5x7 bitmap font covering the 36 alphanumerics (letters match
// case-insensitively). Each glyph is 7 row bytes, bit 4 the leftmost column.
// Returns nullptr for characters without a glyph.
const uint8_t* glyph5x7(char c);

// Convenience accessor; (row, col) in [0,7)x[0,5).
bool glyph_pixel(char c, int row, int col);

// On-pixel count of a glyph; 0 when the glyph is missing.
int glyph_weight(char c);

}  // namespace ifr
