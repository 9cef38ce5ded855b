#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

#include "ifr/nn/tensor.hpp"

namespace ifr::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<Mat<T>>;
template <typename T>
using CMapM = Eigen::Map<const Mat<T>>;

// Grad buffer of a parent, or nullptr when the parent does not participate.
template <typename T>
inline T* grad_of(const std::shared_ptr<Node<T>>& p) {
  if (!p->requires_grad) return nullptr;
  p->ensure_grad();
  return p->grad.data();
}

namespace detail {

inline void check_same_shape(const std::vector<int>& a, const std::vector<int>& b, const char* op) {
  if (a != b) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace detail

// ---- elementwise binary ----

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.val()[i] + b.val()[i];
  return make_op<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& self) {
    for (int k = 0; k < 2; ++k)
      if (T* g = grad_of(self.parents[k]))
        for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a.shape(), b.shape(), "sub");
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.val()[i] - b.val()[i];
  return make_op<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& self) {
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (T* g = grad_of(self.parents[1]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.val()[i] * b.val()[i];
  return make_op<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& self) {
    const T* av = self.parents[0]->val.data();
    const T* bv = self.parents[1]->val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    if (T* g = grad_of(self.parents[1]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
  });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a.shape(), b.shape(), "div");
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.val()[i] / b.val()[i];
  return make_op<T>(a.shape(), std::move(v), {a, b}, [](Node<T>& self) {
    const T* av = self.parents[0]->val.data();
    const T* bv = self.parents[1]->val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] / bv[i];
    if (T* g = grad_of(self.parents[1]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i] * av[i] / (bv[i] * bv[i]);
  });
}

// ---- scalar broadcast ----

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.val()[i] + c;
  return make_op<T>(a.shape(), std::move(v), {a}, [](Node<T>& self) {
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.val()[i] * c;
  return make_op<T>(a.shape(), std::move(v), {a}, [c](Node<T>& self) {
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * c;
  });
}

// ---- elementwise unary ----

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.val()[i] > T(0) ? a.val()[i] : T(0);
  return make_op<T>(a.shape(), std::move(v), {a}, [](Node<T>& self) {
    const T* x = self.parents[0]->val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i)
        if (x[i] > T(0)) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = T(1) / (T(1) + std::exp(-a.val()[i]));
  return make_op<T>(a.shape(), std::move(v), {a}, [](Node<T>& self) {
    const T* y = self.val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(a.val()[i]);
  return make_op<T>(a.shape(), std::move(v), {a}, [](Node<T>& self) {
    const T* y = self.val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * (T(1) - y[i] * y[i]);
  });
}

template <typename T>
Tensor<T> exp_op(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::exp(a.val()[i]);
  return make_op<T>(a.shape(), std::move(v), {a}, [](Node<T>& self) {
    const T* y = self.val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * y[i];
  });
}

template <typename T>
Tensor<T> log_op(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::log(a.val()[i]);
  return make_op<T>(a.shape(), std::move(v), {a}, [](Node<T>& self) {
    const T* x = self.parents[0]->val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] / x[i];
  });
}

template <typename T>
Tensor<T> sqrt_op(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(a.val()[i]);
  return make_op<T>(a.shape(), std::move(v), {a}, [](Node<T>& self) {
    const T* y = self.val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * T(0.5) / y[i];
  });
}

template <typename T>
Tensor<T> abs_op(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::abs(a.val()[i]);
  return make_op<T>(a.shape(), std::move(v), {a}, [](Node<T>& self) {
    const T* x = self.parents[0]->val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) {
        if (x[i] > T(0))
          g[i] += self.grad[i];
        else if (x[i] < T(0))
          g[i] -= self.grad[i];
      }
  });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.val()[i] * a.val()[i];
  return make_op<T>(a.shape(), std::move(v), {a}, [](Node<T>& self) {
    const T* x = self.parents[0]->val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * T(2) * x[i];
  });
}

// max(x, lo); subgradient 0 on the clamped side.
template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T lo) {
  std::vector<T> v(a.numel());
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::max(a.val()[i], lo);
  return make_op<T>(a.shape(), std::move(v), {a}, [lo](Node<T>& self) {
    const T* x = self.parents[0]->val.data();
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i)
        if (x[i] > lo) g[i] += self.grad[i];
  });
}

// ---- linear algebra ----

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw std::invalid_argument("matmul: incompatible shapes");
  int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> v(static_cast<size_t>(m) * n);
  MapM<T>(v.data(), m, n) = CMapM<T>(a.val().data(), m, k) * CMapM<T>(b.val().data(), k, n);
  return make_op<T>({m, n}, std::move(v), {a, b}, [m, k, n](Node<T>& self) {
    CMapM<T> dy(self.grad.data(), m, n);
    if (T* g = grad_of(self.parents[0]))
      MapM<T>(g, m, k) += dy * CMapM<T>(self.parents[1]->val.data(), k, n).transpose();
    if (T* g = grad_of(self.parents[1]))
      MapM<T>(g, k, n) += CMapM<T>(self.parents[0]->val.data(), m, k).transpose() * dy;
  });
}

template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& b) {
  if (x.rank() != 2 || b.rank() != 1 || x.dim(1) != b.dim(0))
    throw std::invalid_argument("add_rowvec: incompatible shapes");
  int m = x.dim(0), n = x.dim(1);
  std::vector<T> v(x.numel());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) v[static_cast<size_t>(i) * n + j] = x.val()[static_cast<size_t>(i) * n + j] + b.val()[j];
  return make_op<T>(x.shape(), std::move(v), {x, b}, [m, n](Node<T>& self) {
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (T* g = grad_of(self.parents[1]))
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) g[j] += self.grad[static_cast<size_t>(i) * n + j];
  });
}

// ---- convolution ----

namespace detail {

// Patch matrix layout: row (c*kh+ky)*kw+kx, column i*Wo+j.
template <typename T>
void im2col(const T* src, int C, int H, int W, int kh, int kw, int sh, int sw, int ph, int pw,
            int Ho, int Wo, T* col) {
  int P = Ho * Wo;
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        T* dst = col + (static_cast<size_t>((c * kh + ky) * kw + kx)) * P;
        for (int i = 0; i < Ho; ++i) {
          int sy = i * sh - ph + ky;
          if (sy < 0 || sy >= H) {
            std::fill(dst + static_cast<size_t>(i) * Wo, dst + static_cast<size_t>(i + 1) * Wo, T(0));
            continue;
          }
          const T* srow = src + (static_cast<size_t>(c) * H + sy) * W;
          for (int j = 0; j < Wo; ++j) {
            int sx = j * sw - pw + kx;
            dst[static_cast<size_t>(i) * Wo + j] = (sx >= 0 && sx < W) ? srow[sx] : T(0);
          }
        }
      }
}

// Adjoint of im2col: scatter-accumulate patches back into the image.
template <typename T>
void col2im(const T* col, int C, int H, int W, int kh, int kw, int sh, int sw, int ph, int pw,
            int Ho, int Wo, T* dst) {
  int P = Ho * Wo;
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const T* srcp = col + (static_cast<size_t>((c * kh + ky) * kw + kx)) * P;
        for (int i = 0; i < Ho; ++i) {
          int sy = i * sh - ph + ky;
          if (sy < 0 || sy >= H) continue;
          T* drow = dst + (static_cast<size_t>(c) * H + sy) * W;
          for (int j = 0; j < Wo; ++j) {
            int sx = j * sw - pw + kx;
            if (sx >= 0 && sx < W) drow[sx] += srcp[static_cast<size_t>(i) * Wo + j];
          }
        }
      }
}

inline int conv_out(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

}  // namespace detail

// x (B,Cin,H,W), w (Cout,Cin,kh,kw), bias (Cout) or undefined. Zero padding.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int sh, int sw,
                 int ph, int pw) {
  if (x.rank() != 4 || w.rank() != 4 || x.dim(1) != w.dim(1))
    throw std::invalid_argument("conv2d: incompatible shapes");
  int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  int Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  int Ho = detail::conv_out(H, kh, sh, ph), Wo = detail::conv_out(W, kw, sw, pw);
  if (Ho < 1 || Wo < 1) throw std::invalid_argument("conv2d: output collapses to zero size");
  int K = Cin * kh * kw, P = Ho * Wo;

  std::vector<T> v(static_cast<size_t>(B) * Cout * P);
  std::vector<T> col(static_cast<size_t>(K) * P);
  for (int b = 0; b < B; ++b) {
    detail::im2col(x.val().data() + static_cast<size_t>(b) * Cin * H * W, Cin, H, W, kh, kw, sh, sw,
                   ph, pw, Ho, Wo, col.data());
    MapM<T> y(v.data() + static_cast<size_t>(b) * Cout * P, Cout, P);
    y = CMapM<T>(w.val().data(), Cout, K) * CMapM<T>(col.data(), K, P);
    if (bias.defined())
      for (int c = 0; c < Cout; ++c) y.row(c).array() += bias.val()[c];
  }

  std::vector<Tensor<T>> parents = {x, w};
  if (bias.defined()) parents.push_back(bias);
  auto bp = [B, Cin, H, W, Cout, kh, kw, sh, sw, ph, pw, Ho, Wo, K, P](Node<T>& self) {
    std::vector<T> col(static_cast<size_t>(K) * P);
    T* gx = grad_of(self.parents[0]);
    T* gw = grad_of(self.parents[1]);
    T* gb = self.parents.size() > 2 ? grad_of(self.parents[2]) : nullptr;
    const T* xv = self.parents[0]->val.data();
    const T* wv = self.parents[1]->val.data();
    for (int b = 0; b < B; ++b) {
      CMapM<T> dy(self.grad.data() + static_cast<size_t>(b) * Cout * P, Cout, P);
      if (gw) {
        detail::im2col(xv + static_cast<size_t>(b) * Cin * H * W, Cin, H, W, kh, kw, sh, sw, ph, pw,
                       Ho, Wo, col.data());
        MapM<T>(gw, Cout, K) += dy * CMapM<T>(col.data(), K, P).transpose();
      }
      if (gx) {
        MapM<T>(col.data(), K, P) = CMapM<T>(wv, Cout, K).transpose() * dy;
        detail::col2im(col.data(), Cin, H, W, kh, kw, sh, sw, ph, pw, Ho, Wo,
                       gx + static_cast<size_t>(b) * Cin * H * W);
      }
      if (gb)
        for (int c = 0; c < Cout; ++c) gb[c] += dy.row(c).sum();
    }
  };
  return make_op<T>({B, Cout, Ho, Wo}, std::move(v), std::move(parents), std::move(bp));
}

// x (B,Cin,H,W), w (Cin,Cout,kh,kw). Fractionally strided counterpart of
// conv2d; output (H-1)*sh - 2*ph + kh + oph tall.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int sh,
                           int sw, int ph, int pw, int oph, int opw) {
  if (x.rank() != 4 || w.rank() != 4 || x.dim(1) != w.dim(0))
    throw std::invalid_argument("conv_transpose2d: incompatible shapes");
  int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  int Cout = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  int Ho = (H - 1) * sh - 2 * ph + kh + oph;
  int Wo = (W - 1) * sw - 2 * pw + kw + opw;
  if (Ho < 1 || Wo < 1) throw std::invalid_argument("conv_transpose2d: output collapses to zero size");
  int K = Cout * kh * kw, P = H * W;

  std::vector<T> v(static_cast<size_t>(B) * Cout * Ho * Wo, T(0));
  std::vector<T> col(static_cast<size_t>(K) * P);
  for (int b = 0; b < B; ++b) {
    MapM<T>(col.data(), K, P) =
        CMapM<T>(w.val().data(), Cin, K).transpose() *
        CMapM<T>(x.val().data() + static_cast<size_t>(b) * Cin * P, Cin, P);
    T* yb = v.data() + static_cast<size_t>(b) * Cout * Ho * Wo;
    detail::col2im(col.data(), Cout, Ho, Wo, kh, kw, sh, sw, ph, pw, H, W, yb);
    if (bias.defined())
      for (int c = 0; c < Cout; ++c) {
        T bc = bias.val()[c];
        for (int i = 0; i < Ho * Wo; ++i) yb[static_cast<size_t>(c) * Ho * Wo + i] += bc;
      }
  }

  std::vector<Tensor<T>> parents = {x, w};
  if (bias.defined()) parents.push_back(bias);
  auto bp = [B, Cin, H, W, Cout, kh, kw, sh, sw, ph, pw, Ho, Wo, K, P](Node<T>& self) {
    std::vector<T> col(static_cast<size_t>(K) * P);
    T* gx = grad_of(self.parents[0]);
    T* gw = grad_of(self.parents[1]);
    T* gb = self.parents.size() > 2 ? grad_of(self.parents[2]) : nullptr;
    const T* xv = self.parents[0]->val.data();
    const T* wv = self.parents[1]->val.data();
    for (int b = 0; b < B; ++b) {
      const T* dyb = self.grad.data() + static_cast<size_t>(b) * Cout * Ho * Wo;
      detail::im2col(dyb, Cout, Ho, Wo, kh, kw, sh, sw, ph, pw, H, W, col.data());
      if (gx)
        MapM<T>(gx + static_cast<size_t>(b) * Cin * P, Cin, P) +=
            CMapM<T>(wv, Cin, K) * CMapM<T>(col.data(), K, P);
      if (gw)
        MapM<T>(gw, Cin, K) +=
            CMapM<T>(xv + static_cast<size_t>(b) * Cin * P, Cin, P) * CMapM<T>(col.data(), K, P).transpose();
      if (gb)
        for (int c = 0; c < Cout; ++c) {
          T s = T(0);
          for (int i = 0; i < Ho * Wo; ++i) s += dyb[static_cast<size_t>(c) * Ho * Wo + i];
          gb[c] += s;
        }
    }
  };
  return make_op<T>({B, Cout, Ho, Wo}, std::move(v), std::move(parents), std::move(bp));
}

// ---- resampling and pooling ----

// Half-pixel-aligned bilinear resize over the two trailing dims of a 4-D
// tensor. Equal sizes return the input tensor unchanged.
template <typename T>
Tensor<T> bilinear_resize_op(const Tensor<T>& x, int oh, int ow) {
  if (x.rank() != 4) throw std::invalid_argument("bilinear_resize: rank-4 input required");
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (oh == H && ow == W) return x;
  if (oh < 1 || ow < 1) throw std::invalid_argument("bilinear_resize: target must be positive");

  struct Tap {
    int a, b;
    T w;  // weight of b; a gets 1-w
  };
  auto make_taps = [](int in, int out) {
    std::vector<Tap> taps(static_cast<size_t>(out));
    double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
      double f = (i + 0.5) * scale - 0.5;
      int i0 = static_cast<int>(std::floor(f));
      double w = f - i0;
      taps[static_cast<size_t>(i)] = {std::clamp(i0, 0, in - 1), std::clamp(i0 + 1, 0, in - 1),
                                      static_cast<T>(w)};
    }
    return taps;
  };
  auto ys = make_taps(H, oh);
  auto xs = make_taps(W, ow);

  std::vector<T> v(static_cast<size_t>(B) * C * oh * ow);
  const T* src = x.val().data();
  for (int bc = 0; bc < B * C; ++bc) {
    const T* plane = src + static_cast<size_t>(bc) * H * W;
    T* out = v.data() + static_cast<size_t>(bc) * oh * ow;
    for (int i = 0; i < oh; ++i) {
      const Tap& ty = ys[static_cast<size_t>(i)];
      for (int j = 0; j < ow; ++j) {
        const Tap& tx = xs[static_cast<size_t>(j)];
        T top = plane[static_cast<size_t>(ty.a) * W + tx.a] * (T(1) - tx.w) +
                plane[static_cast<size_t>(ty.a) * W + tx.b] * tx.w;
        T bot = plane[static_cast<size_t>(ty.b) * W + tx.a] * (T(1) - tx.w) +
                plane[static_cast<size_t>(ty.b) * W + tx.b] * tx.w;
        out[static_cast<size_t>(i) * ow + j] = top * (T(1) - ty.w) + bot * ty.w;
      }
    }
  }
  auto bp = [B, C, H, W, oh, ow, ys, xs](Node<T>& self) {
    T* gx = grad_of(self.parents[0]);
    if (!gx) return;
    for (int bc = 0; bc < B * C; ++bc) {
      T* gplane = gx + static_cast<size_t>(bc) * H * W;
      const T* gout = self.grad.data() + static_cast<size_t>(bc) * oh * ow;
      for (int i = 0; i < oh; ++i) {
        const Tap& ty = ys[static_cast<size_t>(i)];
        for (int j = 0; j < ow; ++j) {
          const Tap& tx = xs[static_cast<size_t>(j)];
          T g = gout[static_cast<size_t>(i) * ow + j];
          gplane[static_cast<size_t>(ty.a) * W + tx.a] += g * (T(1) - ty.w) * (T(1) - tx.w);
          gplane[static_cast<size_t>(ty.a) * W + tx.b] += g * (T(1) - ty.w) * tx.w;
          gplane[static_cast<size_t>(ty.b) * W + tx.a] += g * ty.w * (T(1) - tx.w);
          gplane[static_cast<size_t>(ty.b) * W + tx.b] += g * ty.w * tx.w;
        }
      }
    }
  };
  return make_op<T>({B, C, oh, ow}, std::move(v), {x}, std::move(bp));
}

// Mean pooling onto an (oh, ow) grid; cell (i, j) covers rows
// [floor(i*H/oh), ceil((i+1)*H/oh)) and likewise for columns.
template <typename T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x, int oh, int ow) {
  if (x.rank() != 4) throw std::invalid_argument("adaptive_avg_pool: rank-4 input required");
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (oh == H && ow == W) return x;
  if (oh < 1 || ow < 1 || oh > H || ow > W)
    throw std::invalid_argument("adaptive_avg_pool: target must be within input size");

  auto lo = [](int i, int in, int out) { return (i * in) / out; };
  auto hi = [](int i, int in, int out) { return ((i + 1) * in + out - 1) / out; };

  std::vector<T> v(static_cast<size_t>(B) * C * oh * ow);
  const T* src = x.val().data();
  for (int bc = 0; bc < B * C; ++bc) {
    const T* plane = src + static_cast<size_t>(bc) * H * W;
    T* out = v.data() + static_cast<size_t>(bc) * oh * ow;
    for (int i = 0; i < oh; ++i) {
      int y0 = lo(i, H, oh), y1 = hi(i, H, oh);
      for (int j = 0; j < ow; ++j) {
        int x0 = lo(j, W, ow), x1 = hi(j, W, ow);
        T s = T(0);
        for (int y = y0; y < y1; ++y)
          for (int xx = x0; xx < x1; ++xx) s += plane[static_cast<size_t>(y) * W + xx];
        out[static_cast<size_t>(i) * ow + j] = s / static_cast<T>((y1 - y0) * (x1 - x0));
      }
    }
  }
  auto bp = [B, C, H, W, oh, ow, lo, hi](Node<T>& self) {
    T* gx = grad_of(self.parents[0]);
    if (!gx) return;
    for (int bc = 0; bc < B * C; ++bc) {
      T* gplane = gx + static_cast<size_t>(bc) * H * W;
      const T* gout = self.grad.data() + static_cast<size_t>(bc) * oh * ow;
      for (int i = 0; i < oh; ++i) {
        int y0 = lo(i, H, oh), y1 = hi(i, H, oh);
        for (int j = 0; j < ow; ++j) {
          int x0 = lo(j, W, ow), x1 = hi(j, W, ow);
          T g = gout[static_cast<size_t>(i) * ow + j] / static_cast<T>((y1 - y0) * (x1 - x0));
          for (int y = y0; y < y1; ++y)
            for (int xx = x0; xx < x1; ++xx) gplane[static_cast<size_t>(y) * W + xx] += g;
        }
      }
    }
  };
  return make_op<T>({B, C, oh, ow}, std::move(v), {x}, std::move(bp));
}

// ---- spatial reductions / broadcasts ----

template <typename T>
Tensor<T> mean_spatial(const Tensor<T>& x) {
  if (x.rank() != 4) throw std::invalid_argument("mean_spatial: rank-4 input required");
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  int S = H * W;
  std::vector<T> v(static_cast<size_t>(B) * C);
  for (int bc = 0; bc < B * C; ++bc) {
    const T* plane = x.val().data() + static_cast<size_t>(bc) * S;
    T s = T(0);
    for (int i = 0; i < S; ++i) s += plane[i];
    v[static_cast<size_t>(bc)] = s / static_cast<T>(S);
  }
  return make_op<T>({B, C, 1, 1}, std::move(v), {x}, [B, C, S](Node<T>& self) {
    T* gx = grad_of(self.parents[0]);
    if (!gx) return;
    for (int bc = 0; bc < B * C; ++bc) {
      T g = self.grad[static_cast<size_t>(bc)] / static_cast<T>(S);
      T* gplane = gx + static_cast<size_t>(bc) * S;
      for (int i = 0; i < S; ++i) gplane[i] += g;
    }
  });
}

template <typename T>
Tensor<T> broadcast_spatial(const Tensor<T>& x, int H, int W) {
  if (x.rank() != 4 || x.dim(2) != 1 || x.dim(3) != 1)
    throw std::invalid_argument("broadcast_spatial: (B,C,1,1) input required");
  int B = x.dim(0), C = x.dim(1), S = H * W;
  std::vector<T> v(static_cast<size_t>(B) * C * S);
  for (int bc = 0; bc < B * C; ++bc)
    std::fill(v.begin() + static_cast<size_t>(bc) * S, v.begin() + static_cast<size_t>(bc + 1) * S,
              x.val()[static_cast<size_t>(bc)]);
  return make_op<T>({B, C, H, W}, std::move(v), {x}, [B, C, S](Node<T>& self) {
    T* gx = grad_of(self.parents[0]);
    if (!gx) return;
    for (int bc = 0; bc < B * C; ++bc) {
      T s = T(0);
      const T* gplane = self.grad.data() + static_cast<size_t>(bc) * S;
      for (int i = 0; i < S; ++i) s += gplane[i];
      gx[static_cast<size_t>(bc)] += s;
    }
  });
}

// y[b,c,:,:] = x[b,c,:,:] * gamma[c] + beta[c]
template <typename T>
Tensor<T> channel_affine(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
  if (x.rank() != 4 || gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != x.dim(1) ||
      beta.dim(0) != x.dim(1))
    throw std::invalid_argument("channel_affine: incompatible shapes");
  int B = x.dim(0), C = x.dim(1), S = x.dim(2) * x.dim(3);
  std::vector<T> v(x.numel());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* plane = x.val().data() + (static_cast<size_t>(b) * C + c) * S;
      T* out = v.data() + (static_cast<size_t>(b) * C + c) * S;
      T g = gamma.val()[c], be = beta.val()[c];
      for (int i = 0; i < S; ++i) out[i] = plane[i] * g + be;
    }
  return make_op<T>(x.shape(), std::move(v), {x, gamma, beta}, [B, C, S](Node<T>& self) {
    const T* xv = self.parents[0]->val.data();
    const T* gv = self.parents[1]->val.data();
    T* gx = grad_of(self.parents[0]);
    T* gg = grad_of(self.parents[1]);
    T* gb = grad_of(self.parents[2]);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const T* gy = self.grad.data() + (static_cast<size_t>(b) * C + c) * S;
        const T* xp = xv + (static_cast<size_t>(b) * C + c) * S;
        if (gx) {
          T* gxp = gx + (static_cast<size_t>(b) * C + c) * S;
          for (int i = 0; i < S; ++i) gxp[i] += gy[i] * gv[c];
        }
        if (gg) {
          T s = T(0);
          for (int i = 0; i < S; ++i) s += gy[i] * xp[i];
          gg[c] += s;
        }
        if (gb) {
          T s = T(0);
          for (int i = 0; i < S; ++i) s += gy[i];
          gb[c] += s;
        }
      }
  });
}

// ---- shape manipulation ----

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<int> shape) {
  if (shape_numel(shape) != x.numel()) throw std::invalid_argument("reshape: element count mismatch");
  std::vector<T> v = x.val();
  return make_op<T>(std::move(shape), std::move(v), {x}, [](Node<T>& self) {
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

// Concatenation along dim 1; all parts must agree on every other dim.
template <typename T>
Tensor<T> concat1(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat1: no inputs");
  const auto& s0 = parts[0].shape();
  if (s0.size() < 2) throw std::invalid_argument("concat1: rank >= 2 required");
  int outer = s0[0];
  size_t inner = 1;
  for (size_t d = 2; d < s0.size(); ++d) inner *= static_cast<size_t>(s0[d]);
  int total1 = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.size() != s0.size() || s[0] != outer) throw std::invalid_argument("concat1: shape mismatch");
    for (size_t d = 2; d < s0.size(); ++d)
      if (s[d] != s0[d]) throw std::invalid_argument("concat1: shape mismatch");
    total1 += s[1];
  }

  std::vector<int> out_shape = s0;
  out_shape[1] = total1;
  std::vector<T> v(shape_numel(out_shape));
  size_t row = inner;  // elements per dim-1 slot
  size_t out_stride = static_cast<size_t>(total1) * row;
  size_t off = 0;
  for (const auto& p : parts) {
    size_t part_stride = static_cast<size_t>(p.shape()[1]) * row;
    for (int o = 0; o < outer; ++o)
      std::copy(p.val().begin() + static_cast<size_t>(o) * part_stride,
                p.val().begin() + static_cast<size_t>(o + 1) * part_stride,
                v.begin() + static_cast<size_t>(o) * out_stride + off);
    off += part_stride;
  }

  std::vector<int> dims1;
  for (const auto& p : parts) dims1.push_back(p.shape()[1]);
  auto bp = [outer, row, out_stride, dims1](Node<T>& self) {
    size_t off = 0;
    for (size_t k = 0; k < self.parents.size(); ++k) {
      size_t part_stride = static_cast<size_t>(dims1[k]) * row;
      if (T* g = grad_of(self.parents[k])) {
        for (int o = 0; o < outer; ++o) {
          const T* src = self.grad.data() + static_cast<size_t>(o) * out_stride + off;
          T* dst = g + static_cast<size_t>(o) * part_stride;
          for (size_t i = 0; i < part_stride; ++i) dst[i] += src[i];
        }
      }
      off += part_stride;
    }
  };
  return make_op<T>(std::move(out_shape), std::move(v), parts, std::move(bp));
}

// Reverses the order of dim-1 slots. Involution; backward mirrors forward.
template <typename T>
Tensor<T> reverse1(const Tensor<T>& x) {
  const auto& s = x.shape();
  if (s.size() < 2) throw std::invalid_argument("reverse1: rank >= 2 required");
  int outer = s[0], n1 = s[1];
  size_t inner = 1;
  for (size_t d = 2; d < s.size(); ++d) inner *= static_cast<size_t>(s[d]);
  std::vector<T> v(x.numel());
  size_t stride = static_cast<size_t>(n1) * inner;
  for (int o = 0; o < outer; ++o)
    for (int c = 0; c < n1; ++c)
      std::copy(x.val().begin() + static_cast<size_t>(o) * stride + static_cast<size_t>(c) * inner,
                x.val().begin() + static_cast<size_t>(o) * stride + static_cast<size_t>(c + 1) * inner,
                v.begin() + static_cast<size_t>(o) * stride + static_cast<size_t>(n1 - 1 - c) * inner);
  return make_op<T>(s, std::move(v), {x}, [outer, n1, inner, stride](Node<T>& self) {
    if (T* g = grad_of(self.parents[0])) {
      for (int o = 0; o < outer; ++o)
        for (int c = 0; c < n1; ++c) {
          const T* src = self.grad.data() + static_cast<size_t>(o) * stride + static_cast<size_t>(n1 - 1 - c) * inner;
          T* dst = g + static_cast<size_t>(o) * stride + static_cast<size_t>(c) * inner;
          for (size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    }
  });
}

// Slice [c0, c1) along dim 1.
template <typename T>
Tensor<T> slice1(const Tensor<T>& x, int c0, int c1) {
  const auto& s = x.shape();
  if (s.size() < 2 || c0 < 0 || c1 <= c0 || c1 > s[1]) throw std::invalid_argument("slice1: bad range");
  int outer = s[0];
  size_t inner = 1;
  for (size_t d = 2; d < s.size(); ++d) inner *= static_cast<size_t>(s[d]);
  std::vector<int> out_shape = s;
  out_shape[1] = c1 - c0;
  size_t in_stride = static_cast<size_t>(s[1]) * inner;
  size_t out_stride = static_cast<size_t>(c1 - c0) * inner;
  std::vector<T> v(shape_numel(out_shape));
  for (int o = 0; o < outer; ++o)
    std::copy(x.val().begin() + static_cast<size_t>(o) * in_stride + static_cast<size_t>(c0) * inner,
              x.val().begin() + static_cast<size_t>(o) * in_stride + static_cast<size_t>(c1) * inner,
              v.begin() + static_cast<size_t>(o) * out_stride);
  auto bp = [outer, inner, in_stride, out_stride, c0](Node<T>& self) {
    if (T* g = grad_of(self.parents[0])) {
      for (int o = 0; o < outer; ++o) {
        const T* src = self.grad.data() + static_cast<size_t>(o) * out_stride;
        T* dst = g + static_cast<size_t>(o) * in_stride + static_cast<size_t>(c0) * inner;
        for (size_t i = 0; i < out_stride; ++i) dst[i] += src[i];
      }
    }
  };
  return make_op<T>(std::move(out_shape), std::move(v), {x}, std::move(bp));
}

// ---- reductions and softmax ----

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T s = T(0);
  for (T v : x.val()) s += v;
  return make_op<T>({1}, {s}, {x}, [](Node<T>& self) {
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.parents[0]->val.size(); ++i) g[i] += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  T s = T(0);
  for (T v : x.val()) s += v;
  T n = static_cast<T>(x.numel());
  return make_op<T>({1}, {s / n}, {x}, [n](Node<T>& self) {
    if (T* g = grad_of(self.parents[0]))
      for (size_t i = 0; i < self.parents[0]->val.size(); ++i) g[i] += self.grad[0] / n;
  });
}

// Softmax over the trailing dimension, numerically shifted by the row max.
template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  int last = x.shape().back();
  size_t rows = x.numel() / static_cast<size_t>(last);
  std::vector<T> v(x.numel());
  for (size_t r = 0; r < rows; ++r) {
    const T* in = x.val().data() + r * last;
    T* out = v.data() + r * last;
    T mx = in[0];
    for (int i = 1; i < last; ++i) mx = std::max(mx, in[i]);
    T sum = T(0);
    for (int i = 0; i < last; ++i) {
      out[i] = std::exp(in[i] - mx);
      sum += out[i];
    }
    for (int i = 0; i < last; ++i) out[i] /= sum;
  }
  return make_op<T>(x.shape(), std::move(v), {x}, [last, rows](Node<T>& self) {
    T* g = grad_of(self.parents[0]);
    if (!g) return;
    for (size_t r = 0; r < rows; ++r) {
      const T* y = self.val.data() + r * last;
      const T* dy = self.grad.data() + r * last;
      T dot = T(0);
      for (int i = 0; i < last; ++i) dot += dy[i] * y[i];
      for (int i = 0; i < last; ++i) g[r * last + i] += y[i] * (dy[i] - dot);
    }
  });
}

// ---- indexing ----

// table (V,E), ids length B -> (B,E). ids are data, not graph inputs.
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::vector<int> ids) {
  if (table.rank() != 2) throw std::invalid_argument("embedding: table must be (V,E)");
  int V = table.dim(0), E = table.dim(1);
  int B = static_cast<int>(ids.size());
  std::vector<T> v(static_cast<size_t>(B) * E);
  for (int b = 0; b < B; ++b) {
    int id = ids[static_cast<size_t>(b)];
    if (id < 0 || id >= V) throw std::invalid_argument("embedding: index out of range");
    std::copy(table.val().begin() + static_cast<size_t>(id) * E,
              table.val().begin() + static_cast<size_t>(id + 1) * E, v.begin() + static_cast<size_t>(b) * E);
  }
  return make_op<T>({B, E}, std::move(v), {table}, [ids = std::move(ids), E](Node<T>& self) {
    T* g = grad_of(self.parents[0]);
    if (!g) return;
    for (size_t b = 0; b < ids.size(); ++b) {
      const T* src = self.grad.data() + b * E;
      T* dst = g + static_cast<size_t>(ids[b]) * E;
      for (int i = 0; i < E; ++i) dst[i] += src[i];
    }
  });
}

// x (B,K), ids length B -> (B,): picks x[b, ids[b]].
template <typename T>
Tensor<T> select_index(const Tensor<T>& x, std::vector<int> ids) {
  if (x.rank() != 2 || static_cast<int>(ids.size()) != x.dim(0))
    throw std::invalid_argument("select_index: incompatible shapes");
  int K = x.dim(1);
  int B = x.dim(0);
  std::vector<T> v(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    int id = ids[static_cast<size_t>(b)];
    if (id < 0 || id >= K) throw std::invalid_argument("select_index: index out of range");
    v[static_cast<size_t>(b)] = x.val()[static_cast<size_t>(b) * K + id];
  }
  return make_op<T>({B}, std::move(v), {x}, [ids = std::move(ids), K](Node<T>& self) {
    T* g = grad_of(self.parents[0]);
    if (!g) return;
    for (size_t b = 0; b < ids.size(); ++b) g[b * K + static_cast<size_t>(ids[b])] += self.grad[b];
  });
}

// f (B,C,S) features over S spatial cells, a (B,Tm,S) attention rows ->
// contexts (B,Tm,C): out[b,t,c] = sum_s a[b,t,s] * f[b,c,s].
template <typename T>
Tensor<T> attention_context(const Tensor<T>& f, const Tensor<T>& a) {
  if (f.rank() != 3 || a.rank() != 3 || f.dim(0) != a.dim(0) || f.dim(2) != a.dim(2))
    throw std::invalid_argument("attention_context: incompatible shapes");
  int B = f.dim(0), C = f.dim(1), S = f.dim(2), Tm = a.dim(1);
  std::vector<T> v(static_cast<size_t>(B) * Tm * C);
  for (int b = 0; b < B; ++b) {
    CMapM<T> fb(f.val().data() + static_cast<size_t>(b) * C * S, C, S);
    CMapM<T> ab(a.val().data() + static_cast<size_t>(b) * Tm * S, Tm, S);
    MapM<T>(v.data() + static_cast<size_t>(b) * Tm * C, Tm, C) = ab * fb.transpose();
  }
  return make_op<T>({B, Tm, C}, std::move(v), {f, a}, [B, C, S, Tm](Node<T>& self) {
    const T* fv = self.parents[0]->val.data();
    const T* av = self.parents[1]->val.data();
    T* gf = grad_of(self.parents[0]);
    T* ga = grad_of(self.parents[1]);
    for (int b = 0; b < B; ++b) {
      CMapM<T> dy(self.grad.data() + static_cast<size_t>(b) * Tm * C, Tm, C);
      if (ga)
        MapM<T>(ga + static_cast<size_t>(b) * Tm * S, Tm, S) +=
            dy * CMapM<T>(fv + static_cast<size_t>(b) * C * S, C, S);
      if (gf)
        MapM<T>(gf + static_cast<size_t>(b) * C * S, C, S) +=
            dy.transpose() * CMapM<T>(av + static_cast<size_t>(b) * Tm * S, Tm, S);
    }
  });
}

}  // namespace ifr::nn
