#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "ifr/core/rng.hpp"
#include "ifr/metrics/metrics.hpp"
#include "test_util.hpp"

using namespace ifr;

namespace {

// Independent mirror indexing: fold idx into the period 2n-2 instead of
// iterating, so a bug in the production reflect cannot hide here.
int mirror(int idx, int n) {
  if (n == 1) return 0;
  int period = 2 * n - 2;
  int m = ((idx % period) + period) % period;
  return m < n ? m : period - m;
}

// Direct reimplementation of mean local structural similarity used as an
// oracle: 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03, range 1.
double ssim_ref(const Image& a, const Image& b) {
  const int win = 11, half = 5;
  double w[11][11], wsum = 0.0;
  for (int r = 0; r < win; ++r)
    for (int c = 0; c < win; ++c) {
      double dy = r - half, dx = c - half;
      w[r][c] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      wsum += w[r][c];
    }
  for (int r = 0; r < win; ++r)
    for (int c = 0; c < win; ++c) w[r][c] /= wsum;

  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  for (int y = 0; y < a.h; ++y)
    for (int x = 0; x < a.w; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int r = 0; r < win; ++r)
        for (int c = 0; c < win; ++c) {
          double va = a.at(mirror(y + r - half, a.h), mirror(x + c - half, a.w));
          double vb = b.at(mirror(y + r - half, b.h), mirror(x + c - half, b.w));
          ma += w[r][c] * va;
          mb += w[r][c] * vb;
          saa += w[r][c] * va * va;
          sbb += w[r][c] * vb * vb;
          sab += w[r][c] * va * vb;
        }
      double num = (2 * ma * mb + c1) * (2 * (sab - ma * mb) + c2);
      double den = (ma * ma + mb * mb + c1) * ((saa - ma * ma) + (sbb - mb * mb) + c2);
      total += num / den;
    }
  return total / (a.h * a.w);
}

Image random_image(int h, int w, uint64_t seed) {
  Image img(h, w);
  Rng r(seed);
  for (double& v : img.data) v = r.uniform();
  return img;
}

}  // namespace

TEST_CASE("psnr matches closed forms and is symmetric") {
  Image a = random_image(8, 12, 1);
  CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());

  Image zeros(6, 6, 0.0), halves(6, 6, 0.5);
  CHECK(std::abs(psnr(zeros, halves) - 10.0 * std::log10(4.0)) < 1e-9);
  CHECK(std::abs(psnr(zeros, halves) - 6.0205999132796239) < 1e-9);

  // Uniform offset of amplitude t gives exactly -20 log10(t).
  for (double amp : {0.05, 0.1, 0.2}) {
    Image b = a;
    for (size_t i = 0; i < b.data.size(); ++i) b.data[i] += (i % 2 == 0 ? amp : -amp);
    CHECK(std::abs(psnr(a, b) - (-20.0 * std::log10(amp))) < 1e-9);
    CHECK(psnr(a, b) == psnr(b, a));
  }
  CHECK(psnr(a, random_image(8, 12, 2)) < psnr(a, a));

  Image wrong(8, 11);
  CHECK_THROWS_AS(psnr(a, wrong), std::invalid_argument);
  CHECK(kPsnrReportCap == 100.0);
}

TEST_CASE("ssim equals one on identical images and the constant closed form") {
  Image a = random_image(16, 16, 3);
  CHECK(std::abs(ssim(a, a) - 1.0) < 1e-12);

  // Constant 0 against constant 1: variances and covariance vanish, the
  // luminance term c1/(1+c1) remains.
  Image black(12, 12, 0.0), white(12, 12, 1.0);
  double want = 1e-4 / (1.0 + 1e-4);
  CHECK(std::abs(ssim(black, white) - want) < 1e-7);
  CHECK(std::abs(want - 9.99900009999e-5) < 1e-12);

  Image b = random_image(16, 16, 4);
  CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
  CHECK(ssim(a, b) < 1.0);
  CHECK(ssim(a, b) > -1.0);

  Image wrong(16, 15);
  CHECK_THROWS_AS(ssim(a, wrong), std::invalid_argument);
}

TEST_CASE("ssim agrees with a direct windowed reimplementation") {
  for (uint64_t seed = 10; seed < 14; ++seed) {
    Image a = random_image(16, 16, seed);
    Image b = random_image(16, 16, seed + 100);
    CHECK(std::abs(ssim(a, b) - ssim_ref(a, b)) < 1e-9);
  }
  // Correlated pair: b is a smoothed copy, exercising nonzero covariance.
  Image a = random_image(20, 9, 42);
  Image b = a;
  for (size_t i = 1; i + 1 < b.data.size(); ++i) b.data[i] = (a.data[i - 1] + a.data[i] + a.data[i + 1]) / 3.0;
  CHECK(std::abs(ssim(a, b) - ssim_ref(a, b)) < 1e-9);
  CHECK(ssim(a, b) > ssim(a, random_image(20, 9, 7)));

  // Tiny images fall back to mirrored padding everywhere.
  Image t1 = random_image(3, 5, 8), t2 = random_image(3, 5, 9);
  CHECK(std::abs(ssim(t1, t2) - ssim_ref(t1, t2)) < 1e-9);
  Image s1 = random_image(1, 1, 10), s2 = random_image(1, 1, 11);
  CHECK(std::abs(ssim(s1, s2) - ssim_ref(s1, s2)) < 1e-9);
}

TEST_CASE("word accuracy is case-insensitive over alphanumerics") {
  CHECK(word_accuracy({"abc"}, {"ABC"}) == 1.0);
  CHECK(word_accuracy({"ab-c!"}, {"abc"}) == 1.0);
  CHECK(word_accuracy({"a", "b", "c", "d"}, {"a", "x", "c", "d"}) == 0.75);
  CHECK(word_accuracy({"a", "b"}, {"c", "d"}) == 0.0);
  CHECK(word_accuracy({""}, {"..."}) == 1.0);
  CHECK_THROWS_AS(word_accuracy({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(word_accuracy({"a"}, {"a", "b"}), std::invalid_argument);
}
