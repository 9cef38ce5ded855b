#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ifr/nn/tensor.hpp"

namespace testutil {

// Unique scratch directory, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    auto base = std::filesystem::temp_directory_path();
    path_ = base / ("ifr_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::filesystem::path operator/(const std::string& sub) const { return path_ / sub; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central-difference check of d(build())/d(leaf[i]) for chosen elements.
// `build` must construct a fresh scalar graph from the captured leaves on
// every call so value perturbations take effect. `floor` bounds the rel-err
// denominator from below; for gradients smaller than it the check degrades
// to the absolute bound |analytic - fd| < tol * floor, which keeps finite
// difference rounding noise from dominating structurally tiny gradients.
template <typename F>
double max_grad_rel_err(F&& build, const std::vector<ifr::nn::Tensor<double>>& leaves,
                        int per_leaf = 4, double h = 1e-5, double floor = 1e-6) {
  for (const auto& t : leaves) t.zero_grad();
  ifr::nn::Tensor<double> loss = build();
  ifr::nn::backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const auto& t : leaves) {
    t.node().ensure_grad();
    analytic.push_back(t.grad());
  }

  double worst = 0.0;
  std::mt19937_64 pick(12345);
  ifr::nn::NoGradGuard no_grad;
  for (size_t li = 0; li < leaves.size(); ++li) {
    const auto& t = leaves[li];
    size_t n = t.numel();
    for (int k = 0; k < per_leaf && static_cast<size_t>(k) < n; ++k) {
      size_t i = n <= static_cast<size_t>(per_leaf) ? static_cast<size_t>(k) : pick() % n;
      double saved = t.val()[i];
      t.val()[i] = saved + h;
      double up = build().item();
      t.val()[i] = saved - h;
      double down = build().item();
      t.val()[i] = saved;
      double fd = (up - down) / (2 * h);
      worst = std::max(worst, rel_err(analytic[li][i], fd, floor));
    }
  }
  return worst;
}

}  // namespace testutil
