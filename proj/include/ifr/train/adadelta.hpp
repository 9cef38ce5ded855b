#pragma once

#include <cmath>
#include <vector>

#include "ifr/nn/layers.hpp"

namespace ifr {

// Adadelta with decaying averages of squared gradients and squared updates.
// Holds per-element state aligned with the registry's parameter order.
template <typename T>
class Adadelta {
 public:
  Adadelta(nn::ParamRegistry<T>& params, double rho, double eps)
      : params_(params), rho_(static_cast<T>(rho)), eps_(static_cast<T>(eps)) {
    for (const auto& [_, t] : params_.all()) {
      eg2_.emplace_back(t.numel(), T(0));
      edx2_.emplace_back(t.numel(), T(0));
    }
  }

  void step(double lr) {
    T lrt = static_cast<T>(lr);
    const auto& all = params_.all();
    for (size_t p = 0; p < all.size(); ++p) {
      const nn::Tensor<T>& t = all[p].second;
      if (t.grad().size() != t.numel()) continue;  // parameter untouched by this backward pass
      T* val = t.val().data();
      const T* g = t.grad().data();
      T* eg2 = eg2_[p].data();
      T* edx2 = edx2_[p].data();
      for (size_t i = 0; i < t.numel(); ++i) {
        eg2[i] = rho_ * eg2[i] + (T(1) - rho_) * g[i] * g[i];
        T dx = -std::sqrt(edx2[i] + eps_) / std::sqrt(eg2[i] + eps_) * g[i];
        edx2[i] = rho_ * edx2[i] + (T(1) - rho_) * dx * dx;
        val[i] += lrt * dx;
      }
    }
  }

 private:
  nn::ParamRegistry<T>& params_;
  T rho_, eps_;
  std::vector<std::vector<T>> eg2_, edx2_;
};

}  // namespace ifr
