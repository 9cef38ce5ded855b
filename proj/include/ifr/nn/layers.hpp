#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ifr/core/rng.hpp"
#include "ifr/nn/ops.hpp"

namespace ifr::nn {

// Ordered name -> parameter map. Order is construction order and defines the
// checkpoint layout and the optimizer state indexing.
template <typename T>
class ParamRegistry {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    if (index_.count(name)) throw std::logic_error("duplicate parameter name: " + name);
    index_[name] = params_.size();
    params_.emplace_back(name, std::move(t));
    return params_.back().second;
  }

  const std::vector<std::pair<std::string, Tensor<T>>>& all() const { return params_; }

  Tensor<T>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second].second;
  }

  size_t count() const { return params_.size(); }

  size_t total_elems() const {
    size_t n = 0;
    for (const auto& [_, t] : params_) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [_, t] : params_) t.zero_grad();
  }

 private:
  std::vector<std::pair<std::string, Tensor<T>>> params_;
  std::unordered_map<std::string, size_t> index_;
};

namespace detail {

template <typename T>
Tensor<T> uniform_param(std::vector<int> shape, double bound, Rng& rng) {
  std::vector<T> data(shape_numel(shape));
  for (auto& v : data) v = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>::from_data(std::move(shape), std::move(data), /*requires_grad=*/true);
}

}  // namespace detail

template <typename T>
struct Conv2d {
  Tensor<T> w;  // (Cout, Cin, kh, kw)
  Tensor<T> b;  // (Cout)
  int sh = 1, sw = 1, ph = 0, pw = 0;

  Conv2d() = default;
  Conv2d(ParamRegistry<T>& reg, const std::string& name, int cin, int cout, int kh, int kw,
         int sh_, int sw_, int ph_, int pw_, Rng& rng)
      : sh(sh_), sw(sw_), ph(ph_), pw(pw_) {
    double bound = 1.0 / std::sqrt(static_cast<double>(cin) * kh * kw);
    w = reg.add(name + ".w", detail::uniform_param<T>({cout, cin, kh, kw}, bound, rng));
    b = reg.add(name + ".b", detail::uniform_param<T>({cout}, bound, rng));
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, w, b, sh, sw, ph, pw); }
};

template <typename T>
struct ConvTranspose2d {
  Tensor<T> w;  // (Cin, Cout, kh, kw)
  Tensor<T> b;  // (Cout)
  int sh = 1, sw = 1, ph = 0, pw = 0, oph = 0, opw = 0;

  ConvTranspose2d() = default;
  ConvTranspose2d(ParamRegistry<T>& reg, const std::string& name, int cin, int cout, int kh, int kw,
                  int sh_, int sw_, int ph_, int pw_, int oph_, int opw_, Rng& rng)
      : sh(sh_), sw(sw_), ph(ph_), pw(pw_), oph(oph_), opw(opw_) {
    double bound = 1.0 / std::sqrt(static_cast<double>(cin) * kh * kw);
    w = reg.add(name + ".w", detail::uniform_param<T>({cin, cout, kh, kw}, bound, rng));
    b = reg.add(name + ".b", detail::uniform_param<T>({cout}, bound, rng));
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    return conv_transpose2d(x, w, b, sh, sw, ph, pw, oph, opw);
  }
};

template <typename T>
struct Linear {
  Tensor<T> w;  // (in, out)
  Tensor<T> b;  // (out)

  Linear() = default;
  Linear(ParamRegistry<T>& reg, const std::string& name, int in, int out, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    w = reg.add(name + ".w", detail::uniform_param<T>({in, out}, bound, rng));
    b = reg.add(name + ".b", detail::uniform_param<T>({out}, bound, rng));
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return add_rowvec(matmul(x, w), b); }
};

// Per-sample, per-channel normalization over the spatial extent. Chosen over
// batch statistics so a sample's output never depends on its batch peers.
template <typename T>
struct InstanceNorm2d {
  Tensor<T> gamma;  // (C)
  Tensor<T> beta;   // (C)
  T eps = T(1e-5);

  InstanceNorm2d() = default;
  InstanceNorm2d(ParamRegistry<T>& reg, const std::string& name, int c) {
    gamma = reg.add(name + ".g", Tensor<T>::from_data({c}, std::vector<T>(static_cast<size_t>(c), T(1)), true));
    beta = reg.add(name + ".b", Tensor<T>::from_data({c}, std::vector<T>(static_cast<size_t>(c), T(0)), true));
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    int H = x.dim(2), W = x.dim(3);
    Tensor<T> mu = mean_spatial(x);
    Tensor<T> xc = sub(x, broadcast_spatial(mu, H, W));
    Tensor<T> var = mean_spatial(square(xc));
    Tensor<T> inv = sqrt_op(add_scalar(var, eps));
    Tensor<T> y = div(xc, broadcast_spatial(inv, H, W));
    return channel_affine(y, gamma, beta);
  }
};

template <typename T>
struct EmbeddingTable {
  Tensor<T> table;  // (V, E)

  EmbeddingTable() = default;
  EmbeddingTable(ParamRegistry<T>& reg, const std::string& name, int v, int e, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(e));
    table = reg.add(name + ".w", detail::uniform_param<T>({v, e}, bound, rng));
  }

  Tensor<T> operator()(const std::vector<int>& ids) const { return embedding(table, ids); }
};

// Single gated recurrent cell: r/z gates sigmoid, candidate tanh with the
// reset gate applied to the hidden contribution.
template <typename T>
struct GRUCell {
  Linear<T> xr, xz, xn;  // input projections
  Linear<T> hr, hz, hn;  // hidden projections

  GRUCell() = default;
  GRUCell(ParamRegistry<T>& reg, const std::string& name, int in, int hidden, Rng& rng)
      : xr(reg, name + ".xr", in, hidden, rng),
        xz(reg, name + ".xz", in, hidden, rng),
        xn(reg, name + ".xn", in, hidden, rng),
        hr(reg, name + ".hr", hidden, hidden, rng),
        hz(reg, name + ".hz", hidden, hidden, rng),
        hn(reg, name + ".hn", hidden, hidden, rng) {}

  Tensor<T> operator()(const Tensor<T>& x, const Tensor<T>& h) const {
    Tensor<T> r = sigmoid(add(xr(x), hr(h)));
    Tensor<T> z = sigmoid(add(xz(x), hz(h)));
    Tensor<T> n = tanh_op(add(xn(x), mul(r, hn(h))));
    Tensor<T> one_minus_z = add_scalar(mul_scalar(z, T(-1)), T(1));
    return add(mul(one_minus_z, n), mul(z, h));
  }
};

}  // namespace ifr::nn
