#pragma once

#include <string>

#include "ifr/core/image.hpp"

namespace ifr {

// Writes an 8-bit greyscale PNG. Deterministic: identical pixels yield
// identical bytes.
void write_png_gray8(const std::string& path, const Image& img);

// Reads a PNG and returns a greyscale image in [0, 1]. Color inputs are
// converted via Rec.601 luminance; alpha is ignored. 16-bit channels take the
// high byte. Throws std::runtime_error on malformed input.
Image read_png_gray(const std::string& path);

}  // namespace ifr
