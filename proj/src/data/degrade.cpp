#include "ifr/data/degrade.hpp"

#include <cmath>
#include <stdexcept>

#include "ifr/core/rng.hpp"

namespace ifr {

void DegradeConfig::validate() const {
  if (kernel_min < 1 || kernel_min % 2 == 0 || kernel_max % 2 == 0 || kernel_max < kernel_min)
    throw std::invalid_argument("degrade config: kernel range must be odd and ordered");
  if (ratio_min < 1.0 || ratio_max < ratio_min)
    throw std::invalid_argument("degrade config: ratio range must satisfy 1 <= min <= max");
  if (mix_clean < 0 || mix_blur < 0 || mix_downup < 0 || mix_both < 0)
    throw std::invalid_argument("degrade config: mix probabilities must be nonnegative");
  double s = mix_clean + mix_blur + mix_downup + mix_both;
  if (std::abs(s - 1.0) > 1e-9)
    throw std::invalid_argument("degrade config: mix probabilities must sum to 1");
  if (sigma_rule == SigmaRule::kFixed && sigma_fixed <= 0)
    throw std::invalid_argument("degrade config: fixed sigma must be positive");
}

double DegradeConfig::sigma_for(int kernel_size) const {
  if (sigma_rule == SigmaRule::kFixed) return sigma_fixed;
  return 0.3 * ((kernel_size - 1) * 0.5 - 1.0) + 0.8;
}

Kernel2D gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("gaussian_kernel: size must be odd and positive");
  if (sigma <= 0) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  Kernel2D k;
  k.size = size;
  k.weights.resize(static_cast<size_t>(size) * size);
  int c = size / 2;
  double sum = 0.0;
  for (int r = 0; r < size; ++r) {
    for (int q = 0; q < size; ++q) {
      double dy = r - c, dx = q - c;
      double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k.weights[static_cast<size_t>(r) * size + q] = w;
      sum += w;
    }
  }
  for (double& w : k.weights) w /= sum;
  return k;
}

namespace {

// reflect without repeating the border sample: -1 -> 1, n -> n-2.
inline int reflect(int idx, int n) {
  if (n == 1) return 0;
  while (idx < 0 || idx >= n) {
    if (idx < 0) idx = -idx;
    if (idx >= n) idx = 2 * n - 2 - idx;
  }
  return idx;
}

}  // namespace

Image blur(const Image& img, const Kernel2D& kernel) {
  int c = kernel.size / 2;
  Image out(img.h, img.w);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      double acc = 0.0;
      for (int ky = 0; ky < kernel.size; ++ky) {
        int sy = reflect(y + ky - c, img.h);
        for (int kx = 0; kx < kernel.size; ++kx) {
          int sx = reflect(x + kx - c, img.w);
          acc += kernel.at(ky, kx) * img.at(sy, sx);
        }
      }
      out.at(y, x) = acc;
    }
  }
  return clamp01(std::move(out));
}

Image bilinear_resize(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("bilinear_resize: target must be positive");
  if (out_h == img.h && out_w == img.w) return img;
  Image out(out_h, out_w);
  double sy = static_cast<double>(img.h) / out_h;
  double sx = static_cast<double>(img.w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int ya = std::clamp(y0, 0, img.h - 1);
    int yb = std::clamp(y0 + 1, 0, img.h - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int xa = std::clamp(x0, 0, img.w - 1);
      int xb = std::clamp(x0 + 1, 0, img.w - 1);
      double top = img.at(ya, xa) * (1 - wx) + img.at(ya, xb) * wx;
      double bot = img.at(yb, xa) * (1 - wx) + img.at(yb, xb) * wx;
      out.at(y, x) = top * (1 - wy) + bot * wy;
    }
  }
  return out;
}

Image downup(const Image& img, double ratio) {
  if (ratio < 1.0) throw std::invalid_argument("downup: ratio must be >= 1");
  int dh = std::max(1, static_cast<int>(std::lround(img.h / ratio)));
  int dw = std::max(1, static_cast<int>(std::lround(img.w / ratio)));
  Image small = bilinear_resize(img, dh, dw);
  return clamp01(bilinear_resize(small, img.h, img.w));
}

Image degrade(const Image& hq, uint64_t seed, const DegradeConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  double u = rng.uniform();
  enum { kClean, kBlur, kDownup, kBoth } branch;
  if (u < cfg.mix_clean)
    branch = kClean;
  else if (u < cfg.mix_clean + cfg.mix_blur)
    branch = kBlur;
  else if (u < cfg.mix_clean + cfg.mix_blur + cfg.mix_downup)
    branch = kDownup;
  else
    branch = kBoth;

  Image out = hq;
  if (branch == kBlur || branch == kBoth) {
    int n_sizes = (cfg.kernel_max - cfg.kernel_min) / 2 + 1;
    int k = cfg.kernel_min + 2 * rng.uniform_int(n_sizes);
    out = blur(out, gaussian_kernel(k, cfg.sigma_for(k)));
  }
  if (branch == kDownup || branch == kBoth) {
    double r = rng.uniform(cfg.ratio_min, cfg.ratio_max);
    out = downup(out, r);
  }
  return out;
}

}  // namespace ifr
