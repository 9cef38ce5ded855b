#include "ifr/metrics/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ifr/data/charset.hpp"
#include "ifr/data/degrade.hpp"

namespace ifr {

double psnr(const Image& a, const Image& b) {
  if (a.h != b.h || a.w != b.w) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

inline int reflect(int idx, int n) {
  if (n == 1) return 0;
  while (idx < 0 || idx >= n) {
    if (idx < 0) idx = -idx;
    if (idx >= n) idx = 2 * n - 2 - idx;
  }
  return idx;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (a.h != b.h || a.w != b.w) throw std::invalid_argument("ssim: shape mismatch");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  Kernel2D win = gaussian_kernel(kWin, kSigma);
  int half = kWin / 2;

  double total = 0.0;
  for (int y = 0; y < a.h; ++y) {
    for (int x = 0; x < a.w; ++x) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int ky = 0; ky < kWin; ++ky) {
        int sy = reflect(y + ky - half, a.h);
        for (int kx = 0; kx < kWin; ++kx) {
          int sx = reflect(x + kx - half, a.w);
          double w = win.at(ky, kx);
          double va = a.at(sy, sx), vb = b.at(sy, sx);
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      double var_a = aa - mu_a * mu_a;
      double var_b = bb - mu_b * mu_b;
      double cov = ab - mu_a * mu_b;
      double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
      double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
    }
  }
  return total / static_cast<double>(a.data.size());
}

double word_accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& gts) {
  if (preds.empty() || preds.size() != gts.size())
    throw std::invalid_argument("word_accuracy: prediction and reference lists must be nonempty and equal length");
  size_t hits = 0;
  for (size_t i = 0; i < preds.size(); ++i)
    if (canonical_text(preds[i]) == canonical_text(gts[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace ifr
