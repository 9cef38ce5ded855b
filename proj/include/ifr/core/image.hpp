#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace ifr {

// Single-channel image, values nominally in [0, 1], row-major.
struct Image {
  int h = 0;
  int w = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h_, int w_, double fill = 0.0) : h(h_), w(w_), data(static_cast<size_t>(h_) * w_, fill) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * w + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * w + c]; }
};

inline Image clamp01(Image img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

// 8-bit quantization used before metric computation so reported numbers match
// what a reader of the written PNGs would measure.
inline Image quantize8(Image img) {
  for (double& v : img.data) {
    double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    v = q / 255.0;
  }
  return img;
}

inline std::vector<uint8_t> to_u8(const Image& img) {
  std::vector<uint8_t> out(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) {
    double q = std::round(std::clamp(img.data[i], 0.0, 1.0) * 255.0);
    out[i] = static_cast<uint8_t>(q);
  }
  return out;
}

inline Image from_u8(const std::vector<uint8_t>& px, int h, int w) {
  Image img(h, w);
  for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = px[i] / 255.0;
  return img;
}

}  // namespace ifr
